#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rgate/network.hpp"

namespace rgate::se {

/// One input to the estimator: a keyed reading with its standard
/// deviation in the reading's unit (pu for V, MW/Mvar for P/Q).
struct Measurement {
    net::MeasurementKey key;
    double value = 0.0;
    double sigma = 1.0;
};

/// Voltage state over energized electrical nodes. The slack node's
/// angle is the reference (fixed 0), so the free dimension is
/// 2*nodes - 1.
struct StateVector {
    std::vector<double> vm_pu;
    std::vector<double> va_rad;
    int slack_node = 0;

    int node_count() const { return static_cast<int>(vm_pu.size()); }
    int dimension() const { return 2 * node_count() - 1; }
};

/// Flat state (all magnitudes 1, all angles 0) for the topology.
StateVector flat_state(const net::Topology& topo);

struct EstimationOptions {
    double tolerance = 1e-8;  // max |state update| convergence test
    int max_iterations = 30;
};

struct EstimationResult {
    StateVector x_hat;
    std::vector<double> residuals;  // z_i - h_i(x_hat), measurement order
    std::vector<double> sigmas;
    double j_value = 0.0;  // weighted sum of squared residuals
    int m = 0;             // measurements
    int n = 0;             // states
    int dof = 0;           // m - n
    bool converged = false;
    int iterations = 0;
    int rank = 0;  // numerical rank of the weighted Jacobian
    std::string failure;
};

/// Measurement model h(x): the expected reading for each key given the
/// state. Bus V is the node magnitude; bus P/Q the node's net
/// injection; line/transformer P/Q the from-end flow; load P/Q the
/// consumption drawn at the load's node. Units match Measurement.
std::vector<double> measurement_function(const net::NetworkModel& net, const net::Topology& topo,
                                         const StateVector& x,
                                         const std::vector<net::MeasurementKey>& keys);

/// Analytic Jacobian dh/dx, row-major m x (2N-1). Column layout:
/// angles of non-slack nodes in node order, then magnitudes of all
/// nodes in node order.
std::vector<double> measurement_jacobian(const net::NetworkModel& net, const net::Topology& topo,
                                         const StateVector& x,
                                         const std::vector<net::MeasurementKey>& keys);

/// Iterative Gauss-Newton WLS estimate of the network state from
/// redundant measurements. Requires m >= n and an observable system;
/// rank deficiency and non-convergence are reported in the result, not
/// thrown.
EstimationResult estimate_state(const net::NetworkModel& net, const net::Topology& topo,
                                const std::vector<Measurement>& measurements,
                                const EstimationOptions& options = {});
EstimationResult estimate_state(const net::NetworkModel& net,
                                const std::vector<Measurement>& measurements,
                                const EstimationOptions& options = {});

/// J(x_hat) = sum_i [z_i - h_i(x_hat)]^2 / sigma_i^2.
double performance_index(const EstimationResult& result);

/// Regularized lower incomplete gamma based chi-squared CDF.
double chi2_cdf(int dof, double x);

/// Quantile: the x with CDF_{chi2(dof)}(x) = p. Relative error < 1e-10.
double chi2_threshold(int dof, double p);

/// Sigma assignment for snapshot readings: sigma_i = max(relative *
/// |nominal scale|, floor), where the nominal scale is the clean
/// power-flow value at 100% load for P/Q keys and 1.0 pu for V keys.
struct SigmaPolicy {
    double relative = 0.015;
    double floor = 1e-3;
};

enum class BddCause { none, chi2_exceeded, estimator_failure };

struct BddVerdict {
    EstimationResult result;
    double threshold = 0.0;
    double probability_p = 0.0;
    bool bad_data = false;
    BddCause cause = BddCause::none;
};

/// Chi-squared bad-data detector bound to one configured network.
/// Construction runs the nominal power flow once to fix the sigma
/// scales; detect() is then pure and thread-safe.
class BadDataDetector {
  public:
    explicit BadDataDetector(net::NetworkModel net, double probability_p = 0.999,
                             SigmaPolicy policy = {}, EstimationOptions options = {});

    /// Runs WLS + chi-squared test on a snapshot covering the active
    /// plan. Estimator failure (non-convergence, rank loss) is treated
    /// as suspicion: bad_data=true with cause=estimator_failure.
    BddVerdict detect(const net::MeasurementSnapshot& snapshot) const;

    const net::NetworkModel& network() const { return net_; }
    const std::vector<std::uint16_t>& active_keys() const { return active_; }
    double sigma_for(std::uint16_t key_id) const;
    double probability_p() const { return probability_p_; }

  private:
    net::NetworkModel net_;
    net::Topology topo_;
    std::vector<std::uint16_t> active_;
    std::vector<double> sigma_by_key_;  // indexed by plan key id; NaN if inactive
    double probability_p_;
    EstimationOptions options_;
};

/// One-shot convenience wrapper around BadDataDetector.
BddVerdict detect_bad_data(const net::NetworkModel& net, const net::MeasurementSnapshot& snapshot,
                           double probability_p = 0.999);

}  // namespace rgate::se
