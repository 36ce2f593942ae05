#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rgate/network.hpp"

namespace rgate::pf {

/// Per-load real/reactive demand for one solve, in MW/Mvar. Must cover
/// every in-service load exactly once.
struct LoadScenario {
    struct Entry {
        int load_id = 0;
        double p_mw = 0.0;
        double q_mvar = 0.0;
    };
    std::vector<Entry> entries;

    const Entry* find(int load_id) const;
};

/// Scenario with every in-service load at its nominal rating.
LoadScenario nominal_scenario(const net::NetworkModel& net);

/// Scenario with every in-service load scaled by a common factor.
LoadScenario scaled_scenario(const net::NetworkModel& net, double factor);

struct BranchFlow {
    int branch_id = 0;
    // MW / Mvar flowing into the branch at each terminal.
    double p_from_mw = 0.0;
    double q_from_mvar = 0.0;
    double p_to_mw = 0.0;
    double q_to_mvar = 0.0;
};

struct PowerFlowSolution {
    bool converged = false;
    int iterations = 0;
    double max_mismatch_pu = 0.0;  // final max |P,Q| mismatch
    std::string failure;           // set when not converged

    // Indexed by electrical node (see Topology).
    std::vector<double> vm_pu;
    std::vector<double> va_rad;
    std::vector<double> p_injection_mw;   // node net injection
    std::vector<double> q_injection_mvar;

    std::vector<BranchFlow> branch_flows;        // active branches only
    std::vector<LoadScenario::Entry> load_pq;    // energized loads, echo of scenario

    const BranchFlow* flow_for(int branch_id) const;

    /// Total active losses over all branches, MW.
    double total_loss_mw() const;
};

struct PowerFlowOptions {
    double tolerance_pu = 1e-8;
    int max_iterations = 20;
};

/// Newton-Raphson AC power flow from a flat start. Returns a solution
/// with converged=false (and `failure` set) on non-convergence or a
/// singular Jacobian; throws DataError for structural problems such as
/// a scenario not covering the in-service loads.
PowerFlowSolution solve_ac_powerflow(const net::NetworkModel& net,
                                     const net::Topology& topo,
                                     const LoadScenario& scenario,
                                     const PowerFlowOptions& options = {});
PowerFlowSolution solve_ac_powerflow(const net::NetworkModel& net,
                                     const LoadScenario& scenario,
                                     const PowerFlowOptions& options = {});

/// Projects a converged solution onto measurement-plan keys. `keys`
/// holds indices into net.measurement_plan (normally active_plan(net));
/// a key whose element is de-energized raises DataError. Units: V in
/// pu, P in MW, Q in Mvar; branch flows are taken at the from end; bus
/// P/Q are the net injection of the bus's electrical node.
net::MeasurementSnapshot extract_measurements(const net::NetworkModel& net,
                                              const net::Topology& topo,
                                              const PowerFlowSolution& sol,
                                              const std::vector<std::uint16_t>& keys);

}  // namespace rgate::pf
