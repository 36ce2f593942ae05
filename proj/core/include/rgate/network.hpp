#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rgate::net {

enum class BusKind { slack, pv, pq };
enum class BranchKind { line, transformer };
enum class ElementKind { bus, line, transformer, load };
enum class Quantity { V, P, Q };

struct Bus {
    int id = 0;
    double nominal_kv = 0.0;
    BusKind kind = BusKind::pq;
};

struct Branch {
    int id = 0;
    int from_bus = 0;
    int to_bus = 0;
    BranchKind kind = BranchKind::line;
    double resistance_pu = 0.0;
    double reactance_pu = 0.0;
    double shunt_susceptance_pu = 0.0;
    double tap_ratio = 1.0;  // transformer off-nominal ratio, 1.0 for lines
    bool in_service = true;
};

struct Switch {
    int id = 0;
    std::string name;  // e.g. "CB-110"
    int from_bus = 0;
    int to_bus = 0;
    bool closed = false;
};

struct Load {
    int id = 0;
    int bus = 0;
    double p_nominal_mw = 0.0;
    double q_nominal_mvar = 0.0;
    bool in_service = true;
};

/// Identity of one metered quantity. (element_kind, element_id,
/// quantity) is unique across a measurement plan.
struct MeasurementKey {
    ElementKind element_kind = ElementKind::bus;
    int element_id = 0;
    Quantity quantity = Quantity::V;
    int owning_ied = 0;

    bool same_point(const MeasurementKey& o) const {
        return element_kind == o.element_kind && element_id == o.element_id &&
               quantity == o.quantity;
    }
    bool operator==(const MeasurementKey& o) const {
        return same_point(o) && owning_ied == o.owning_ied;
    }

    /// Canonical text form, e.g. "bus:3:V", "line:8:P", "xfmr:26:Q",
    /// "load:7:P". The owning IED is not part of the identity.
    std::string to_string() const;
    static MeasurementKey parse(const std::string& text, int owning_ied = 0);
};

struct NetworkModel {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Switch> switches;
    std::vector<Load> loads;
    double base_mva = 100.0;
    std::vector<MeasurementKey> measurement_plan;

    const Bus* find_bus(int id) const;
    const Branch* find_branch(int id) const;
    const Load* find_load(int id) const;
    const Switch* find_switch_by_name(const std::string& name) const;

    bool operator==(const NetworkModel&) const = default;
};

/// One timestamped vector of keyed measurements. key_ids index into the
/// owning network's measurement_plan and appear in plan order; values
/// are V in pu, P in MW, Q in Mvar.
struct MeasurementSnapshot {
    std::vector<std::uint16_t> key_ids;
    std::vector<double> values;
    std::int64_t timestamp_us = 0;

    std::size_t size() const { return values.size(); }
    std::optional<double> value_for(std::uint16_t key_id) const;
};

/// Operational configurations of the built-in network (Table of
/// switching states; Normal keeps everything in service).
enum class ConfigId { Normal, C1, C2, C3, C4, C5, C6 };

std::string to_string(ConfigId c);
ConfigId parse_config(const std::string& text);

/// Electrical-node view of the network after switch resolution.
/// Closed switches merge buses into one node (zero impedance); buses
/// not connected to the slack through in-service branches and closed
/// switches are de-energized and get node() == -1.
class Topology {
  public:
    static Topology resolve(const NetworkModel& net);

    int node_count() const { return node_count_; }
    int slack_node() const { return slack_node_; }
    /// Electrical node of a bus id, or -1 when de-energized.
    int node(int bus_id) const;
    bool bus_energized(int bus_id) const { return node(bus_id) >= 0; }
    /// In service and both terminals energized.
    bool branch_active(int branch_id) const;
    bool load_energized(const Load& load) const;
    /// Bus ids merged into the given node, ascending.
    const std::vector<int>& buses_in_node(int node) const;

  private:
    friend struct TopologyAccess;
    std::vector<int> bus_ids_;          // ascending
    std::vector<int> node_of_bus_;      // parallel to bus_ids_
    std::vector<bool> branch_active_;   // parallel to NetworkModel::branches
    std::vector<int> branch_ids_;
    std::vector<std::vector<int>> node_members_;
    int node_count_ = 0;
    int slack_node_ = -1;
};

/// Dense complex bus admittance matrix over energized electrical nodes,
/// per unit on the network base.
struct YbusMatrix {
    int n = 0;
    std::vector<std::complex<double>> a;  // row-major n*n

    std::complex<double> at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
    std::complex<double>& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
};

/// Builds the admittance matrix for the resolved topology. Out-of-service
/// branches contribute nothing. Throws DataError when an energized
/// island has no slack (detected during topology resolution).
YbusMatrix build_ybus(const NetworkModel& net, const Topology& topo);
YbusMatrix build_ybus(const NetworkModel& net);

/// The 3-substation test network: S/S-1 fed from the main grid over an
/// intake line, S/S-2 and S/S-3 each dual-fed from S/S-1 via redundant
/// 110 kV feeders, two 110/11 kV step-down transformers per substation,
/// 18 loads, 32 IEDs and a 124-entry measurement plan. Bus-section
/// breakers CB-110/CB-210 (S/S-2) and CB-120/CB-220 (S/S-3) are open.
///
/// Element numbering:
///   buses   1 grid, 2 S1-HV, 3/4 S1-LV-A/B, 5/6 S2-HV-A/B, 7/8 S2-LV-A/B,
///           9 S2 feeder junction, 10/11 S3-HV-A/B, 12/13 S3-LV-A/B,
///           14 S3 feeder junction, 15..32 load buses
///   lines   L1..L4 inter-substation feeders, L5 grid intake,
///           L6..L25 distribution feeders (branch id == line number)
///   xfmrs   26..31 (T1A,T1B,T2A,T2B,T3A,T3B)
///   loads   1..6 S/S-1, 7..12 S/S-2, 13..18 S/S-3
NetworkModel builtin_three_substation();

/// Returns a copy with the configuration's switching state applied:
///   C1: line L1 out of service, CB-120 closed
///   C2: line L2 out of service, CB-110 closed
///   C3..C6: lines L8/L11/L14/L25 out of service, their downstream
///   loads switched off.
NetworkModel apply_configuration(const NetworkModel& net, ConfigId config);

struct Violation {
    std::string code;     // e.g. "zero_reactance"
    std::string message;  // names the offending element
};

/// Structural validation; empty result means the model is usable. All
/// seven built-in configurations must keep energized loads connected to
/// the slack for the built-in network to pass.
std::vector<Violation> validate(const NetworkModel& net);

/// Indices into measurement_plan of keys whose element is energized
/// under the current switch/service state, in plan order.
std::vector<std::uint16_t> active_plan(const NetworkModel& net);
std::vector<std::uint16_t> active_plan(const NetworkModel& net, const Topology& topo);

/// Stable hash of the measurement plan (identity triples in order);
/// datasets embed it so schema drift is detected on load.
std::uint32_t plan_hash(const NetworkModel& net);

/// JSON file round trip. Schema: top-level {base_mva, buses[],
/// branches[], switches[], loads[], measurement_plan[]} with field
/// names exactly as the struct members. Errors carry the offending
/// field path.
NetworkModel load_network(const std::string& path);
void save_network(const NetworkModel& net, const std::string& path);
NetworkModel network_from_json_text(const std::string& text);
std::string network_to_json_text(const NetworkModel& net);

}  // namespace rgate::net
