#include "rgate/estimation.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>

#include "rgate/powerflow.hpp"
#include "rgate/util.hpp"

namespace rgate::se {

using net::BranchKind;
using net::ElementKind;
using net::MeasurementKey;
using net::NetworkModel;
using net::Quantity;
using net::Topology;

StateVector flat_state(const net::Topology& topo) {
    StateVector x;
    x.vm_pu.assign(static_cast<std::size_t>(topo.node_count()), 1.0);
    x.va_rad.assign(static_cast<std::size_t>(topo.node_count()), 0.0);
    x.slack_node = topo.slack_node();
    return x;
}

namespace {

// 2-port admittance of a branch (from/to), tap on the from side.
struct BranchModel {
    int from_node = -1;
    int to_node = -1;
    std::complex<double> yff, yft, ytf, ytt;
};

BranchModel branch_model(const net::Branch& br, const Topology& topo) {
    BranchModel m;
    m.from_node = topo.node(br.from_bus);
    m.to_node = topo.node(br.to_bus);
    const std::complex<double> ys = 1.0 / std::complex<double>{br.resistance_pu, br.reactance_pu};
    const std::complex<double> ysh{0.0, br.shunt_susceptance_pu / 2.0};
    const double tap = (br.kind == BranchKind::transformer) ? br.tap_ratio : 1.0;
    m.yff = (ys + ysh) / (tap * tap);
    m.yft = -ys / tap;
    m.ytf = -ys / tap;
    m.ytt = ys + ysh;
    return m;
}

struct Evaluator {
    const NetworkModel& net;
    const Topology& topo;
    net::YbusMatrix ybus;
    int n_nodes;
    int slack;

    explicit Evaluator(const NetworkModel& network, const Topology& topology)
        : net(network), topo(topology), ybus(net::build_ybus(network, topology)),
          n_nodes(topology.node_count()), slack(topology.slack_node()) {}

    int ang_col(int node) const {
        if (node == slack) return -1;
        return node < slack ? node : node - 1;
    }
    int mag_col(int node) const { return (n_nodes - 1) + node; }

    // Net complex injection (pu) at a node for the given state.
    void injection(const StateVector& x, int i, double& p, double& q) const {
        p = 0.0;
        q = 0.0;
        const auto si = static_cast<std::size_t>(i);
        for (int j = 0; j < n_nodes; ++j) {
            const auto y = ybus.at(i, j);
            if (y.real() == 0.0 && y.imag() == 0.0) continue;
            const auto sj = static_cast<std::size_t>(j);
            const double th = x.va_rad[si] - x.va_rad[sj];
            const double vv = x.vm_pu[si] * x.vm_pu[sj];
            p += vv * (y.real() * std::cos(th) + y.imag() * std::sin(th));
            q += vv * (y.real() * std::sin(th) - y.imag() * std::cos(th));
        }
    }

    // d(injection at node i)/dx into a row of the Jacobian, scaled.
    void injection_partials(const StateVector& x, int i, bool active_power, double scale,
                            double* row) const {
        const auto si = static_cast<std::size_t>(i);
        const double vi = x.vm_pu[si];
        double p_i, q_i;
        injection(x, i, p_i, q_i);
        for (int j = 0; j < n_nodes; ++j) {
            const auto y = ybus.at(i, j);
            const double g = y.real(), b = y.imag();
            if (g == 0.0 && b == 0.0 && j != i) continue;
            const auto sj = static_cast<std::size_t>(j);
            const double th = x.va_rad[si] - x.va_rad[sj];
            const double vj = x.vm_pu[sj];
            double dth, dv;
            if (active_power) {
                if (j == i) {
                    dth = -q_i - b * vi * vi;
                    dv = p_i / vi + g * vi;
                } else {
                    dth = vi * vj * (g * std::sin(th) - b * std::cos(th));
                    dv = vi * (g * std::cos(th) + b * std::sin(th));
                }
            } else {
                if (j == i) {
                    dth = p_i - g * vi * vi;
                    dv = q_i / vi - b * vi;
                } else {
                    dth = -vi * vj * (g * std::cos(th) + b * std::sin(th));
                    dv = vi * (g * std::sin(th) - b * std::cos(th));
                }
            }
            const int ac = ang_col(j);
            if (ac >= 0) row[ac] += scale * dth;
            row[mag_col(j)] += scale * dv;
        }
    }

    // From-end branch power (pu) and partials.
    void branch_flow(const StateVector& x, const BranchModel& bm, double& p, double& q) const {
        const auto f = static_cast<std::size_t>(bm.from_node);
        const auto t = static_cast<std::size_t>(bm.to_node);
        const double vf = x.vm_pu[f], vt = x.vm_pu[t];
        const double th = x.va_rad[f] - x.va_rad[t];
        const double gff = bm.yff.real(), bff = bm.yff.imag();
        const double gft = bm.yft.real(), bft = bm.yft.imag();
        p = vf * vf * gff + vf * vt * (gft * std::cos(th) + bft * std::sin(th));
        q = -vf * vf * bff + vf * vt * (gft * std::sin(th) - bft * std::cos(th));
    }

    void branch_flow_partials(const StateVector& x, const BranchModel& bm, bool active_power,
                              double scale, double* row) const {
        const auto f = static_cast<std::size_t>(bm.from_node);
        const auto t = static_cast<std::size_t>(bm.to_node);
        const double vf = x.vm_pu[f], vt = x.vm_pu[t];
        const double th = x.va_rad[f] - x.va_rad[t];
        const double gff = bm.yff.real(), bff = bm.yff.imag();
        const double gft = bm.yft.real(), bft = bm.yft.imag();
        const double cs = std::cos(th), sn = std::sin(th);
        double dth_f, dvf, dvt;
        if (active_power) {
            dth_f = vf * vt * (-gft * sn + bft * cs);
            dvf = 2.0 * vf * gff + vt * (gft * cs + bft * sn);
            dvt = vf * (gft * cs + bft * sn);
        } else {
            dth_f = vf * vt * (gft * cs + bft * sn);
            dvf = -2.0 * vf * bff + vt * (gft * sn - bft * cs);
            dvt = vf * (gft * sn - bft * cs);
        }
        const int af = ang_col(bm.from_node);
        const int at = ang_col(bm.to_node);
        if (af >= 0) row[af] += scale * dth_f;
        if (at >= 0) row[at] -= scale * dth_f;
        row[mag_col(bm.from_node)] += scale * dvf;
        row[mag_col(bm.to_node)] += scale * dvt;
    }
};

const net::Branch& resolve_branch(const NetworkModel& net, const Topology& topo,
                                  const MeasurementKey& key) {
    const net::Branch* br = net.find_branch(key.element_id);
    if (br == nullptr || !topo.branch_active(key.element_id))
        throw DataError("measurement " + key.to_string() + " references an inactive branch");
    return *br;
}

int resolve_bus_node(const Topology& topo, const MeasurementKey& key) {
    const int node = topo.node(key.element_id);
    if (node < 0)
        throw DataError("measurement " + key.to_string() + " references a de-energized bus");
    return node;
}

int resolve_load_node(const NetworkModel& net, const Topology& topo, const MeasurementKey& key) {
    const net::Load* load = net.find_load(key.element_id);
    if (load == nullptr || !topo.load_energized(*load))
        throw DataError("measurement " + key.to_string() + " references a de-energized load");
    return topo.node(load->bus);
}

}  // namespace

std::vector<double> measurement_function(const NetworkModel& net, const Topology& topo,
                                         const StateVector& x,
                                         const std::vector<MeasurementKey>& keys) {
    const Evaluator ev(net, topo);
    std::vector<double> h;
    h.reserve(keys.size());
    for (const auto& key : keys) {
        double value = 0.0;
        switch (key.element_kind) {
            case ElementKind::bus: {
                const int node = resolve_bus_node(topo, key);
                if (key.quantity == Quantity::V) {
                    value = x.vm_pu[static_cast<std::size_t>(node)];
                } else {
                    double p, q;
                    ev.injection(x, node, p, q);
                    value = (key.quantity == Quantity::P ? p : q) * net.base_mva;
                }
                break;
            }
            case ElementKind::line:
            case ElementKind::transformer: {
                const auto& br = resolve_branch(net, topo, key);
                double p, q;
                ev.branch_flow(x, branch_model(br, topo), p, q);
                value = (key.quantity == Quantity::P ? p : q) * net.base_mva;
                break;
            }
            case ElementKind::load: {
                // Consumption drawn at the load's node (negated injection).
                const int node = resolve_load_node(net, topo, key);
                double p, q;
                ev.injection(x, node, p, q);
                value = -(key.quantity == Quantity::P ? p : q) * net.base_mva;
                break;
            }
        }
        h.push_back(value);
    }
    return h;
}

std::vector<double> measurement_jacobian(const NetworkModel& net, const Topology& topo,
                                         const StateVector& x,
                                         const std::vector<MeasurementKey>& keys) {
    const Evaluator ev(net, topo);
    const std::size_t cols = static_cast<std::size_t>(2 * ev.n_nodes - 1);
    std::vector<double> jac(keys.size() * cols, 0.0);
    for (std::size_t r = 0; r < keys.size(); ++r) {
        const auto& key = keys[r];
        double* row = jac.data() + r * cols;
        switch (key.element_kind) {
            case ElementKind::bus: {
                const int node = resolve_bus_node(topo, key);
                if (key.quantity == Quantity::V) {
                    row[ev.mag_col(node)] = 1.0;
                } else {
                    ev.injection_partials(x, node, key.quantity == Quantity::P, net.base_mva, row);
                }
                break;
            }
            case ElementKind::line:
            case ElementKind::transformer: {
                const auto& br = resolve_branch(net, topo, key);
                ev.branch_flow_partials(x, branch_model(br, topo), key.quantity == Quantity::P,
                                        net.base_mva, row);
                break;
            }
            case ElementKind::load: {
                const int node = resolve_load_node(net, topo, key);
                ev.injection_partials(x, node, key.quantity == Quantity::P, -net.base_mva, row);
                break;
            }
        }
    }
    return jac;
}

double performance_index(const EstimationResult& result) {
    double j = 0.0;
    for (std::size_t i = 0; i < result.residuals.size(); ++i) {
        const double w = result.residuals[i] / result.sigmas[i];
        j += w * w;
    }
    return j;
}

EstimationResult estimate_state(const NetworkModel& net, const Topology& topo,
                                const std::vector<Measurement>& measurements,
                                const EstimationOptions& options) {
    EstimationResult res;
    res.m = static_cast<int>(measurements.size());
    res.n = 2 * topo.node_count() - 1;
    res.dof = res.m - res.n;
    res.sigmas.reserve(measurements.size());
    std::vector<MeasurementKey> keys;
    keys.reserve(measurements.size());
    Eigen::VectorXd z(res.m);
    for (std::size_t i = 0; i < measurements.size(); ++i) {
        if (!(measurements[i].sigma > 0.0))
            throw DataError("measurement " + measurements[i].key.to_string() +
                            " has non-positive sigma");
        keys.push_back(measurements[i].key);
        z(static_cast<Eigen::Index>(i)) = measurements[i].value;
        res.sigmas.push_back(measurements[i].sigma);
    }
    if (res.m < res.n) {
        res.failure = "underdetermined system: m=" + std::to_string(res.m) +
                      " < n=" + std::to_string(res.n);
        return res;
    }

    StateVector x = flat_state(topo);
    const int n_nodes = topo.node_count();
    const Eigen::Index cols = res.n;

    Eigen::VectorXd inv_sigma(res.m);
    for (int i = 0; i < res.m; ++i) inv_sigma(i) = 1.0 / res.sigmas[static_cast<std::size_t>(i)];

    auto weighted_objective = [&](const StateVector& state, Eigen::VectorXd& resid) {
        const auto h = measurement_function(net, topo, state, keys);
        double obj = 0.0;
        for (int i = 0; i < res.m; ++i) {
            resid(i) = z(i) - h[static_cast<std::size_t>(i)];
            const double w = resid(i) * inv_sigma(i);
            obj += w * w;
        }
        return obj;
    };

    Eigen::VectorXd resid(res.m);
    double objective = weighted_objective(x, resid);

    bool converged = false;
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        const auto jac_flat = measurement_jacobian(net, topo, x, keys);
        Eigen::MatrixXd a(res.m, cols);
        for (int r = 0; r < res.m; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                a(r, c) = jac_flat[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                                   static_cast<std::size_t>(c)] *
                          inv_sigma(r);
            }
        }
        Eigen::VectorXd b = resid.cwiseProduct(inv_sigma);

        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        res.rank = static_cast<int>(qr.rank());
        if (res.rank < res.n) {
            res.failure = "unobservable system: weighted Jacobian rank " +
                          std::to_string(res.rank) + " < " + std::to_string(res.n) + " states";
            res.iterations = iter;
            res.x_hat = x;
            res.residuals.assign(resid.data(), resid.data() + res.m);
            res.j_value = objective;
            return res;
        }
        const Eigen::VectorXd dx = qr.solve(b);

        // Full Gauss-Newton step, halved up to 4 times if the
        // objective would increase.
        double alpha = 1.0;
        StateVector trial = x;
        double trial_obj = std::numeric_limits<double>::infinity();
        Eigen::VectorXd trial_resid(res.m);
        bool accepted = false;
        for (int h = 0; h <= 4; ++h) {
            trial = x;
            for (int node = 0; node < n_nodes; ++node) {
                const auto sn = static_cast<std::size_t>(node);
                int ac = node == topo.slack_node() ? -1
                                                   : (node < topo.slack_node() ? node : node - 1);
                if (ac >= 0) trial.va_rad[sn] += alpha * dx(ac);
                trial.vm_pu[sn] += alpha * dx((n_nodes - 1) + node);
            }
            trial_obj = weighted_objective(trial, trial_resid);
            if (trial_obj <= objective) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            res.failure = "step rejected: objective would increase after 4 halvings";
            res.iterations = iter;
            break;
        }

        const double step = alpha * dx.cwiseAbs().maxCoeff();
        x = trial;
        objective = trial_obj;
        resid = trial_resid;
        if (step < options.tolerance) {
            converged = true;
            ++iter;
            break;
        }
    }

    res.x_hat = x;
    res.residuals.assign(resid.data(), resid.data() + res.m);
    res.j_value = objective;
    res.iterations = iter;
    res.converged = converged;
    if (!converged && res.failure.empty()) {
        res.failure = "estimation did not converge in " + std::to_string(options.max_iterations) +
                      " iterations";
    }
    return res;
}

EstimationResult estimate_state(const NetworkModel& net,
                                const std::vector<Measurement>& measurements,
                                const EstimationOptions& options) {
    return estimate_state(net, Topology::resolve(net), measurements, options);
}

BadDataDetector::BadDataDetector(NetworkModel network, double probability_p, SigmaPolicy policy,
                                 EstimationOptions options)
    : net_(std::move(network)), topo_(Topology::resolve(net_)), probability_p_(probability_p),
      options_(options) {
    if (!(probability_p_ > 0.0 && probability_p_ < 1.0))
        throw DataError("detection probability must lie in (0, 1)");
    active_ = net::active_plan(net_, topo_);

    // Nominal (100% load) power flow fixes the per-key sigma scales.
    const auto nominal = pf::solve_ac_powerflow(net_, topo_, pf::nominal_scenario(net_));
    if (!nominal.converged)
        throw RuntimeFailure("nominal power flow failed while calibrating sigmas: " +
                             nominal.failure);
    const auto snap = pf::extract_measurements(net_, topo_, nominal, active_);

    sigma_by_key_.assign(net_.measurement_plan.size(),
                         std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < snap.key_ids.size(); ++i) {
        const auto& key = net_.measurement_plan[snap.key_ids[i]];
        const double scale = key.quantity == Quantity::V ? 1.0 : std::abs(snap.values[i]);
        sigma_by_key_[snap.key_ids[i]] = std::max(policy.relative * scale, policy.floor);
    }
}

double BadDataDetector::sigma_for(std::uint16_t key_id) const {
    if (key_id >= sigma_by_key_.size()) throw DataError("sigma query for unknown key id");
    return sigma_by_key_[key_id];
}

BddVerdict BadDataDetector::detect(const net::MeasurementSnapshot& snapshot) const {
    if (snapshot.key_ids.size() != active_.size() ||
        !std::equal(snapshot.key_ids.begin(), snapshot.key_ids.end(), active_.begin()))
        throw DataError("snapshot does not cover the active measurement plan");

    std::vector<Measurement> measurements;
    measurements.reserve(snapshot.size());
    for (std::size_t i = 0; i < snapshot.size(); ++i) {
        Measurement m;
        m.key = net_.measurement_plan[snapshot.key_ids[i]];
        m.value = snapshot.values[i];
        m.sigma = sigma_by_key_[snapshot.key_ids[i]];
        measurements.push_back(m);
    }

    BddVerdict verdict;
    verdict.probability_p = probability_p_;
    verdict.result = estimate_state(net_, topo_, measurements, options_);
    if (verdict.result.dof < 1) {
        throw DataError("system has no redundancy: dof = " +
                        std::to_string(verdict.result.dof));
    }
    verdict.threshold = chi2_threshold(verdict.result.dof, probability_p_);
    if (!verdict.result.converged) {
        // Fail closed: gross corruption can break Gauss-Newton.
        verdict.bad_data = true;
        verdict.cause = BddCause::estimator_failure;
        return verdict;
    }
    verdict.bad_data = verdict.result.j_value > verdict.threshold;
    verdict.cause = verdict.bad_data ? BddCause::chi2_exceeded : BddCause::none;
    return verdict;
}

BddVerdict detect_bad_data(const NetworkModel& net, const net::MeasurementSnapshot& snapshot,
                           double probability_p) {
    const BadDataDetector detector(net, probability_p);
    return detector.detect(snapshot);
}

}  // namespace rgate::se
