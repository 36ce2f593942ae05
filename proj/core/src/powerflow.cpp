#include "rgate/powerflow.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <unordered_map>

#include "rgate/util.hpp"

namespace rgate::pf {

using net::BranchKind;
using net::BusKind;
using net::ElementKind;
using net::NetworkModel;
using net::Quantity;
using net::Topology;

const LoadScenario::Entry* LoadScenario::find(int load_id) const {
    for (const auto& e : entries)
        if (e.load_id == load_id) return &e;
    return nullptr;
}

LoadScenario nominal_scenario(const NetworkModel& net) {
    return scaled_scenario(net, 1.0);
}

LoadScenario scaled_scenario(const NetworkModel& net, double factor) {
    LoadScenario s;
    for (const auto& l : net.loads) {
        if (!l.in_service) continue;
        s.entries.push_back({l.id, l.p_nominal_mw * factor, l.q_nominal_mvar * factor});
    }
    return s;
}

const BranchFlow* PowerFlowSolution::flow_for(int branch_id) const {
    for (const auto& f : branch_flows)
        if (f.branch_id == branch_id) return &f;
    return nullptr;
}

double PowerFlowSolution::total_loss_mw() const {
    double loss = 0.0;
    for (const auto& f : branch_flows) loss += f.p_from_mw + f.p_to_mw;
    return loss;
}

namespace {

enum class NodeKind { slack, pv, pq };

struct NodeData {
    std::vector<NodeKind> kind;
    std::vector<double> p_spec;  // pu injections
    std::vector<double> q_spec;
};

NodeData classify_nodes(const NetworkModel& net, const Topology& topo,
                        const LoadScenario& scenario) {
    NodeData data;
    const int n = topo.node_count();
    data.kind.assign(static_cast<std::size_t>(n), NodeKind::pq);
    data.p_spec.assign(static_cast<std::size_t>(n), 0.0);
    data.q_spec.assign(static_cast<std::size_t>(n), 0.0);

    for (const auto& bus : net.buses) {
        const int node = topo.node(bus.id);
        if (node < 0) continue;
        if (bus.kind == BusKind::slack) data.kind[static_cast<std::size_t>(node)] = NodeKind::slack;
        else if (bus.kind == BusKind::pv &&
                 data.kind[static_cast<std::size_t>(node)] != NodeKind::slack)
            data.kind[static_cast<std::size_t>(node)] = NodeKind::pv;
    }

    std::size_t covered = 0;
    for (const auto& load : net.loads) {
        if (!load.in_service) continue;
        const int node = topo.node(load.bus);
        const auto* entry = scenario.find(load.id);
        if (entry == nullptr) {
            throw DataError("load scenario misses in-service load " + std::to_string(load.id));
        }
        ++covered;
        if (node < 0) continue;  // de-energized load draws nothing
        data.p_spec[static_cast<std::size_t>(node)] -= entry->p_mw / net.base_mva;
        data.q_spec[static_cast<std::size_t>(node)] -= entry->q_mvar / net.base_mva;
    }
    if (covered != scenario.entries.size()) {
        throw DataError("load scenario has entries for unknown or out-of-service loads");
    }
    return data;
}

}  // namespace

PowerFlowSolution solve_ac_powerflow(const NetworkModel& net, const Topology& topo,
                                     const LoadScenario& scenario,
                                     const PowerFlowOptions& options) {
    if (options.tolerance_pu <= 0.0) throw DataError("power flow tolerance must be positive");
    const net::YbusMatrix ybus = net::build_ybus(net, topo);
    const int n = ybus.n;
    const NodeData nodes = classify_nodes(net, topo, scenario);
    const int slack = topo.slack_node();

    // Unknown layout: angles at non-slack nodes, magnitudes at PQ nodes.
    std::vector<int> ang_index(static_cast<std::size_t>(n), -1);
    std::vector<int> mag_index(static_cast<std::size_t>(n), -1);
    int unknowns = 0;
    for (int i = 0; i < n; ++i) {
        if (i != slack) ang_index[static_cast<std::size_t>(i)] = unknowns++;
    }
    for (int i = 0; i < n; ++i) {
        if (nodes.kind[static_cast<std::size_t>(i)] == NodeKind::pq)
            mag_index[static_cast<std::size_t>(i)] = unknowns++;
    }

    PowerFlowSolution sol;
    sol.vm_pu.assign(static_cast<std::size_t>(n), 1.0);  // flat start
    sol.va_rad.assign(static_cast<std::size_t>(n), 0.0);

    std::vector<double> p_calc(static_cast<std::size_t>(n)), q_calc(static_cast<std::size_t>(n));
    auto compute_injections = [&] {
        for (int i = 0; i < n; ++i) {
            double p = 0.0, q = 0.0;
            for (int j = 0; j < n; ++j) {
                const auto y = ybus.at(i, j);
                if (y == std::complex<double>{0.0, 0.0} && i != j) continue;
                const double th = sol.va_rad[static_cast<std::size_t>(i)] -
                                  sol.va_rad[static_cast<std::size_t>(j)];
                const double vv = sol.vm_pu[static_cast<std::size_t>(i)] *
                                  sol.vm_pu[static_cast<std::size_t>(j)];
                p += vv * (y.real() * std::cos(th) + y.imag() * std::sin(th));
                q += vv * (y.real() * std::sin(th) - y.imag() * std::cos(th));
            }
            p_calc[static_cast<std::size_t>(i)] = p;
            q_calc[static_cast<std::size_t>(i)] = q;
        }
    };

    auto max_mismatch = [&](Eigen::VectorXd& f) {
        f.setZero(unknowns);
        double worst = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto si = static_cast<std::size_t>(i);
            if (ang_index[si] >= 0) {
                const double dp = nodes.p_spec[si] - p_calc[si];
                f(ang_index[si]) = dp;
                worst = std::max(worst, std::abs(dp));
            }
            if (mag_index[si] >= 0) {
                const double dq = nodes.q_spec[si] - q_calc[si];
                f(mag_index[si]) = dq;
                worst = std::max(worst, std::abs(dq));
            }
        }
        return worst;
    };

    Eigen::VectorXd mismatch(unknowns);
    bool converged = false;
    int iter = 0;
    for (; iter <= options.max_iterations; ++iter) {
        compute_injections();
        sol.max_mismatch_pu = max_mismatch(mismatch);
        if (sol.max_mismatch_pu < options.tolerance_pu) {
            converged = true;
            break;
        }
        if (iter == options.max_iterations) break;
        if (unknowns == 0) break;

        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(unknowns, unknowns);
        for (int i = 0; i < n; ++i) {
            const auto si = static_cast<std::size_t>(i);
            const double vi = sol.vm_pu[si];
            for (int j = 0; j < n; ++j) {
                const auto sj = static_cast<std::size_t>(j);
                const auto y = ybus.at(i, j);
                const double g = y.real(), b = y.imag();
                const double th = sol.va_rad[si] - sol.va_rad[sj];
                const double vj = sol.vm_pu[sj];
                if (i == j) {
                    if (ang_index[si] >= 0) {
                        jac(ang_index[si], ang_index[si]) = -q_calc[si] - b * vi * vi;
                        if (mag_index[si] >= 0)
                            jac(ang_index[si], mag_index[si]) = p_calc[si] / vi + g * vi;
                    }
                    if (mag_index[si] >= 0) {
                        if (ang_index[si] >= 0)
                            jac(mag_index[si], ang_index[si]) = p_calc[si] - g * vi * vi;
                        jac(mag_index[si], mag_index[si]) = q_calc[si] / vi - b * vi;
                    }
                } else {
                    if (g == 0.0 && b == 0.0) continue;
                    const double cs = std::cos(th), sn = std::sin(th);
                    const double dp_dth = vi * vj * (g * sn - b * cs);
                    const double dp_dv = vi * (g * cs + b * sn);
                    const double dq_dth = -vi * vj * (g * cs + b * sn);
                    const double dq_dv = vi * (g * sn - b * cs);
                    if (ang_index[si] >= 0 && ang_index[sj] >= 0)
                        jac(ang_index[si], ang_index[sj]) = dp_dth;
                    if (ang_index[si] >= 0 && mag_index[sj] >= 0)
                        jac(ang_index[si], mag_index[sj]) = dp_dv;
                    if (mag_index[si] >= 0 && ang_index[sj] >= 0)
                        jac(mag_index[si], ang_index[sj]) = dq_dth;
                    if (mag_index[si] >= 0 && mag_index[sj] >= 0)
                        jac(mag_index[si], mag_index[sj]) = dq_dv;
                }
            }
        }

        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible()) {
            sol.converged = false;
            sol.iterations = iter;
            sol.failure = "singular power flow Jacobian at iteration " + std::to_string(iter);
            return sol;
        }
        const Eigen::VectorXd dx = lu.solve(mismatch);
        for (int i = 0; i < n; ++i) {
            const auto si = static_cast<std::size_t>(i);
            if (ang_index[si] >= 0) sol.va_rad[si] += dx(ang_index[si]);
            if (mag_index[si] >= 0) sol.vm_pu[si] += dx(mag_index[si]);
        }
    }

    sol.iterations = iter;
    sol.converged = converged;
    if (!converged) {
        sol.failure = "power flow did not converge in " + std::to_string(options.max_iterations) +
                      " iterations (max mismatch " + std::to_string(sol.max_mismatch_pu) + " pu)";
        return sol;
    }

    // Node injections in physical units.
    compute_injections();
    sol.p_injection_mw.resize(static_cast<std::size_t>(n));
    sol.q_injection_mvar.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        sol.p_injection_mw[static_cast<std::size_t>(i)] =
            p_calc[static_cast<std::size_t>(i)] * net.base_mva;
        sol.q_injection_mvar[static_cast<std::size_t>(i)] =
            q_calc[static_cast<std::size_t>(i)] * net.base_mva;
    }

    // Branch terminal flows from the voltage solution.
    for (const auto& br : net.branches) {
        if (!topo.branch_active(br.id)) continue;
        const int f = topo.node(br.from_bus);
        const int t = topo.node(br.to_bus);
        if (f == t) continue;
        const std::complex<double> ys = 1.0 / std::complex<double>{br.resistance_pu, br.reactance_pu};
        const std::complex<double> ysh{0.0, br.shunt_susceptance_pu / 2.0};
        const double tap = (br.kind == BranchKind::transformer) ? br.tap_ratio : 1.0;
        const auto vf = std::polar(sol.vm_pu[static_cast<std::size_t>(f)],
                                   sol.va_rad[static_cast<std::size_t>(f)]);
        const auto vt = std::polar(sol.vm_pu[static_cast<std::size_t>(t)],
                                   sol.va_rad[static_cast<std::size_t>(t)]);
        const auto sf = vf * std::conj(((ys + ysh) / (tap * tap)) * vf - (ys / tap) * vt);
        const auto st = vt * std::conj((ys + ysh) * vt - (ys / tap) * vf);
        BranchFlow flow;
        flow.branch_id = br.id;
        flow.p_from_mw = sf.real() * net.base_mva;
        flow.q_from_mvar = sf.imag() * net.base_mva;
        flow.p_to_mw = st.real() * net.base_mva;
        flow.q_to_mvar = st.imag() * net.base_mva;
        sol.branch_flows.push_back(flow);
    }

    for (const auto& load : net.loads) {
        if (!load.in_service || topo.node(load.bus) < 0) continue;
        const auto* entry = scenario.find(load.id);
        sol.load_pq.push_back(*entry);
    }
    return sol;
}

PowerFlowSolution solve_ac_powerflow(const NetworkModel& net, const LoadScenario& scenario,
                                     const PowerFlowOptions& options) {
    return solve_ac_powerflow(net, Topology::resolve(net), scenario, options);
}

net::MeasurementSnapshot extract_measurements(const NetworkModel& net, const Topology& topo,
                                              const PowerFlowSolution& sol,
                                              const std::vector<std::uint16_t>& keys) {
    if (!sol.converged) throw RuntimeFailure("cannot extract measurements from a failed power flow");
    net::MeasurementSnapshot snap;
    snap.key_ids.reserve(keys.size());
    snap.values.reserve(keys.size());
    for (const std::uint16_t key_id : keys) {
        if (key_id >= net.measurement_plan.size())
            throw DataError("measurement key id " + std::to_string(key_id) + " out of range");
        const auto& key = net.measurement_plan[key_id];
        double value = 0.0;
        switch (key.element_kind) {
            case ElementKind::bus: {
                const int node = topo.node(key.element_id);
                if (node < 0)
                    throw DataError("measurement " + key.to_string() +
                                    " references a de-energized bus");
                const auto sn = static_cast<std::size_t>(node);
                value = key.quantity == Quantity::V   ? sol.vm_pu[sn]
                        : key.quantity == Quantity::P ? sol.p_injection_mw[sn]
                                                      : sol.q_injection_mvar[sn];
                break;
            }
            case ElementKind::line:
            case ElementKind::transformer: {
                const BranchFlow* flow = sol.flow_for(key.element_id);
                if (flow == nullptr)
                    throw DataError("measurement " + key.to_string() +
                                    " references an out-of-service branch");
                value = key.quantity == Quantity::P ? flow->p_from_mw : flow->q_from_mvar;
                break;
            }
            case ElementKind::load: {
                const net::Load* load = net.find_load(key.element_id);
                if (load == nullptr || !topo.load_energized(*load))
                    throw DataError("measurement " + key.to_string() +
                                    " references a de-energized load");
                const auto* entry = sol.load_pq.empty() ? nullptr : [&]() -> const LoadScenario::Entry* {
                    for (const auto& e : sol.load_pq)
                        if (e.load_id == key.element_id) return &e;
                    return nullptr;
                }();
                if (entry == nullptr)
                    throw DataError("solution has no load values for " + key.to_string());
                value = key.quantity == Quantity::P ? entry->p_mw : entry->q_mvar;
                break;
            }
        }
        snap.key_ids.push_back(key_id);
        snap.values.push_back(value);
    }
    return snap;
}

}  // namespace rgate::pf
