#pragma once

// Shared fixtures and independent oracles for the test suites. The
// oracles deliberately avoid the library's own Ybus/solver code paths:
// they recompute physics from branch parameters with plain complex
// arithmetic so solver bugs cannot cancel out.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "rgate/estimation.hpp"
#include "rgate/network.hpp"
#include "rgate/powerflow.hpp"

namespace rgate::testsupport {

// ---------------------------------------------------------------- nets

/// Slack -(line id 1)- load bus. Plan: V1, V2, line P/Q, bus2 P/Q.
inline net::NetworkModel two_bus_network(double r = 0.0, double x = 0.1, double p_mw = 50.0,
                                         double q_mvar = 0.0) {
    net::NetworkModel netm;
    netm.base_mva = 100.0;
    netm.buses.push_back({1, 110.0, net::BusKind::slack});
    netm.buses.push_back({2, 110.0, net::BusKind::pq});
    net::Branch line;
    line.id = 1;
    line.from_bus = 1;
    line.to_bus = 2;
    line.kind = net::BranchKind::line;
    line.resistance_pu = r;
    line.reactance_pu = x;
    netm.branches.push_back(line);
    netm.loads.push_back({1, 2, p_mw, q_mvar, true});
    auto& plan = netm.measurement_plan;
    plan.push_back({net::ElementKind::bus, 1, net::Quantity::V, 1});
    plan.push_back({net::ElementKind::bus, 2, net::Quantity::V, 2});
    plan.push_back({net::ElementKind::line, 1, net::Quantity::P, 1});
    plan.push_back({net::ElementKind::line, 1, net::Quantity::Q, 1});
    plan.push_back({net::ElementKind::bus, 2, net::Quantity::P, 2});
    plan.push_back({net::ElementKind::bus, 2, net::Quantity::Q, 2});
    return netm;
}

/// Radial 4-bus network: 1 (slack) - 2 - {3, 4}, loads at 3 and 4.
/// m = 16 measurements over n = 7 states.
inline net::NetworkModel four_bus_network() {
    net::NetworkModel netm;
    netm.base_mva = 100.0;
    netm.buses.push_back({1, 110.0, net::BusKind::slack});
    netm.buses.push_back({2, 110.0, net::BusKind::pq});
    netm.buses.push_back({3, 110.0, net::BusKind::pq});
    netm.buses.push_back({4, 110.0, net::BusKind::pq});
    auto line = [](int id, int from, int to, double r, double x) {
        net::Branch b;
        b.id = id;
        b.from_bus = from;
        b.to_bus = to;
        b.kind = net::BranchKind::line;
        b.resistance_pu = r;
        b.reactance_pu = x;
        b.shunt_susceptance_pu = 0.0;
        return b;
    };
    netm.branches.push_back(line(1, 1, 2, 0.02, 0.06));
    netm.branches.push_back(line(2, 2, 3, 0.04, 0.09));
    netm.branches.push_back(line(3, 2, 4, 0.03, 0.08));
    netm.loads.push_back({1, 3, 40.0, 12.0, true});
    netm.loads.push_back({2, 4, 25.0, 8.0, true});
    auto& plan = netm.measurement_plan;
    for (int bus = 1; bus <= 4; ++bus)
        plan.push_back({net::ElementKind::bus, bus, net::Quantity::V, 1});
    plan.push_back({net::ElementKind::bus, 2, net::Quantity::P, 1});
    plan.push_back({net::ElementKind::bus, 2, net::Quantity::Q, 1});
    for (int id = 1; id <= 3; ++id) {
        plan.push_back({net::ElementKind::line, id, net::Quantity::P, 2});
        plan.push_back({net::ElementKind::line, id, net::Quantity::Q, 2});
    }
    for (int id = 1; id <= 2; ++id) {
        plan.push_back({net::ElementKind::load, id, net::Quantity::P, 3});
        plan.push_back({net::ElementKind::load, id, net::Quantity::Q, 3});
    }
    return netm;
}

/// Toy network whose plan is k standalone voltage keys; used by ML
/// tests that need feature vectors without power-system semantics.
inline net::NetworkModel feature_net(int k) {
    net::NetworkModel netm;
    netm.base_mva = 100.0;
    netm.buses.push_back({1, 11.0, net::BusKind::slack});
    for (int i = 2; i <= k + 1; ++i) netm.buses.push_back({i, 11.0, net::BusKind::pq});
    for (int i = 0; i < k; ++i)
        netm.measurement_plan.push_back({net::ElementKind::bus, i + 2, net::Quantity::V, 1});
    return netm;
}

inline net::MeasurementSnapshot feature_snapshot(const std::vector<double>& values) {
    net::MeasurementSnapshot snap;
    for (std::size_t i = 0; i < values.size(); ++i) {
        snap.key_ids.push_back(static_cast<std::uint16_t>(i));
        snap.values.push_back(values[i]);
    }
    return snap;
}

// ------------------------------------------------------------- oracles

/// chi-squared pdf evaluated directly from its definition.
inline double chi2_pdf_oracle(int dof, double x) {
    if (x <= 0.0) return 0.0;
    const double k2 = dof / 2.0;
    return std::exp((k2 - 1.0) * std::log(x) - x / 2.0 - k2 * std::log(2.0) - std::lgamma(k2));
}

/// Adaptive Simpson quadrature.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double eps,
                               int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b, double eps) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, eps, 48);
}

/// Quantile of the chi-squared distribution by quadrature + bisection;
/// shares no code with chi2_threshold.
inline double chi2_threshold_oracle(int dof, double p) {
    auto pdf = [dof](double x) { return chi2_pdf_oracle(dof, x); };
    auto cdf = [&](double x) { return x <= 0.0 ? 0.0 : integrate(pdf, 0.0, x, 1e-13); };
    double lo = 0.0, hi = std::max(8.0, 3.0 * dof);
    while (cdf(hi) < p) hi *= 2.0;
    for (int i = 0; i < 120; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < p) lo = mid;
        else hi = mid;
        if ((hi - lo) < 1e-11 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

/// Independent complex-arithmetic injection model: S_i as a function
/// of all bus voltages, computed branch by branch.
inline std::vector<std::complex<double>> oracle_injections(
    const net::NetworkModel& netm, const std::vector<std::complex<double>>& v_by_bus_index) {
    std::vector<std::complex<double>> s(netm.buses.size(), {0.0, 0.0});
    auto index_of = [&](int bus_id) {
        for (std::size_t i = 0; i < netm.buses.size(); ++i)
            if (netm.buses[i].id == bus_id) return i;
        throw std::logic_error("oracle: unknown bus");
    };
    for (const auto& br : netm.branches) {
        if (!br.in_service) continue;
        const std::size_t f = index_of(br.from_bus);
        const std::size_t t = index_of(br.to_bus);
        const std::complex<double> ys =
            1.0 / std::complex<double>{br.resistance_pu, br.reactance_pu};
        const std::complex<double> ysh{0.0, br.shunt_susceptance_pu / 2.0};
        const double tap = br.kind == net::BranchKind::transformer ? br.tap_ratio : 1.0;
        const auto vf = v_by_bus_index[f], vt = v_by_bus_index[t];
        const auto i_f = ((ys + ysh) / (tap * tap)) * vf - (ys / tap) * vt;
        const auto i_t = (ys + ysh) * vt - (ys / tap) * vf;
        s[f] += vf * std::conj(i_f);
        s[t] += vt * std::conj(i_t);
    }
    return s;
}

/// Brute-force mismatch minimization (multi-start coordinate descent)
/// over angles and magnitudes. Returns per-bus complex voltages.
/// Assumes no closed switches (bus == node), one slack, PQ elsewhere.
inline std::vector<std::complex<double>> brute_force_powerflow(
    const net::NetworkModel& netm, const pf::LoadScenario& scenario) {
    const std::size_t nb = netm.buses.size();
    std::vector<double> p_target(nb, 0.0), q_target(nb, 0.0);
    std::vector<bool> is_slack(nb, false);
    for (std::size_t i = 0; i < nb; ++i) is_slack[i] = netm.buses[i].kind == net::BusKind::slack;
    for (const auto& load : netm.loads) {
        if (!load.in_service) continue;
        for (std::size_t i = 0; i < nb; ++i) {
            if (netm.buses[i].id == load.bus) {
                const auto* e = scenario.find(load.id);
                p_target[i] -= e->p_mw / netm.base_mva;
                q_target[i] -= e->q_mvar / netm.base_mva;
            }
        }
    }

    auto objective = [&](const std::vector<double>& vm, const std::vector<double>& va) {
        std::vector<std::complex<double>> v(nb);
        for (std::size_t i = 0; i < nb; ++i) v[i] = std::polar(vm[i], va[i]);
        const auto s = oracle_injections(netm, v);
        double obj = 0.0;
        for (std::size_t i = 0; i < nb; ++i) {
            if (is_slack[i]) continue;
            const double dp = s[i].real() - p_target[i];
            const double dq = s[i].imag() - q_target[i];
            obj += dp * dp + dq * dq;
        }
        return obj;
    };

    std::vector<double> vm(nb, 1.0), va(nb, 0.0);
    double step = 0.1;
    double best = objective(vm, va);
    while (step > 1e-10) {
        bool improved = false;
        for (std::size_t i = 0; i < nb; ++i) {
            if (is_slack[i]) continue;
            for (double* coord : {&vm[i], &va[i]}) {
                for (double delta : {step, -step}) {
                    *coord += delta;
                    const double candidate = objective(vm, va);
                    if (candidate < best) {
                        best = candidate;
                        improved = true;
                    } else {
                        *coord -= delta;
                    }
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    std::vector<std::complex<double>> v(nb);
    for (std::size_t i = 0; i < nb; ++i) v[i] = std::polar(vm[i], va[i]);
    return v;
}

/// Scalar-equation oracle for the lossless 2-bus case: nested
/// bisection on the two mismatch equations
///   P2(V, th) = -p_pu,  Q2(V, th) = -q_pu.
inline void two_bus_oracle(double x_pu, double p_pu, double q_pu, double& vm_out,
                           double& va_out) {
    auto p2 = [x_pu](double v, double th) { return (v / x_pu) * std::sin(th); };
    auto q2 = [x_pu](double v, double th) { return (v * v - v * std::cos(th)) / x_pu; };
    // For fixed V, P2 is monotone in theta near 0; bisection for theta,
    // outer bisection on V against the Q equation.
    auto theta_for = [&](double v) {
        double lo = -0.5, hi = 0.5;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (p2(v, mid) > -p_pu) hi = mid;
            else lo = mid;
        }
        return 0.5 * (lo + hi);
    };
    double lo = 0.5, hi = 1.2;
    for (int i = 0; i < 200; ++i) {
        const double v = 0.5 * (lo + hi);
        const double th = theta_for(v);
        if (q2(v, th) > -q_pu) hi = v;
        else lo = v;
    }
    vm_out = 0.5 * (lo + hi);
    va_out = theta_for(vm_out);
}

/// Central-difference Jacobian of the measurement function.
inline std::vector<double> fd_jacobian(const net::NetworkModel& netm, const net::Topology& topo,
                                       const se::StateVector& x,
                                       const std::vector<net::MeasurementKey>& keys,
                                       double h = 1e-6) {
    const int n_nodes = x.node_count();
    const int cols = 2 * n_nodes - 1;
    std::vector<double> jac(keys.size() * static_cast<std::size_t>(cols), 0.0);
    auto column_of = [&](int c, se::StateVector& state) -> double& {
        if (c < n_nodes - 1) {
            int node = c < x.slack_node ? c : c + 1;
            return state.va_rad[static_cast<std::size_t>(node)];
        }
        return state.vm_pu[static_cast<std::size_t>(c - (n_nodes - 1))];
    };
    for (int c = 0; c < cols; ++c) {
        se::StateVector plus = x, minus = x;
        column_of(c, plus) += h;
        column_of(c, minus) -= h;
        const auto hp = se::measurement_function(netm, topo, plus, keys);
        const auto hm = se::measurement_function(netm, topo, minus, keys);
        for (std::size_t r = 0; r < keys.size(); ++r)
            jac[r * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)] =
                (hp[r] - hm[r]) / (2.0 * h);
    }
    return jac;
}

/// PF solution -> estimator state vector (node ordering shared).
inline se::StateVector state_from_solution(const net::Topology& topo,
                                           const pf::PowerFlowSolution& sol) {
    se::StateVector x;
    x.vm_pu = sol.vm_pu;
    x.va_rad = sol.va_rad;
    x.slack_node = topo.slack_node();
    return x;
}

}  // namespace rgate::testsupport
