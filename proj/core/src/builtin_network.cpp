#include "rgate/network.hpp"

namespace rgate::net {

namespace {

// The paper's reference gives only the one-line diagram; impedances and
// ratings here are plausible distribution-scale values (110 kV feed,
// 11 kV secondaries, 25 MVA two-winding transformers at ~10% uk on the
// 100 MVA system base). Export the network to JSON to override any of
// them.
constexpr double kHvKv = 110.0;
constexpr double kLvKv = 11.0;
constexpr double kXfmrR = 0.024;  // pu on 100 MVA
constexpr double kXfmrX = 0.40;

Branch line(int id, int from, int to, double r, double x, double b) {
    Branch br;
    br.id = id;
    br.from_bus = from;
    br.to_bus = to;
    br.kind = BranchKind::line;
    br.resistance_pu = r;
    br.reactance_pu = x;
    br.shunt_susceptance_pu = b;
    return br;
}

Branch xfmr(int id, int from, int to) {
    Branch br;
    br.id = id;
    br.from_bus = from;
    br.to_bus = to;
    br.kind = BranchKind::transformer;
    br.resistance_pu = kXfmrR;
    br.reactance_pu = kXfmrX;
    br.shunt_susceptance_pu = 0.0;
    br.tap_ratio = 1.0;
    return br;
}

}  // namespace

NetworkModel builtin_three_substation() {
    NetworkModel net;
    net.base_mva = 100.0;

    auto bus = [&net](int id, double kv, BusKind kind = BusKind::pq) {
        net.buses.push_back({id, kv, kind});
    };
    bus(1, kHvKv, BusKind::slack);  // grid point of interconnection
    bus(2, kHvKv);                  // S/S-1 HV busbar
    bus(3, kLvKv);                  // S/S-1 LV section A
    bus(4, kLvKv);                  // S/S-1 LV section B
    bus(5, kHvKv);                  // S/S-2 HV section A
    bus(6, kHvKv);                  // S/S-2 HV section B
    bus(7, kLvKv);                  // S/S-2 LV section A
    bus(8, kLvKv);                  // S/S-2 LV section B
    bus(9, kLvKv);                  // S/S-2 feeder junction
    bus(10, kHvKv);                 // S/S-3 HV section A
    bus(11, kHvKv);                 // S/S-3 HV section B
    bus(12, kLvKv);                 // S/S-3 LV section A
    bus(13, kLvKv);                 // S/S-3 LV section B
    bus(14, kLvKv);                 // S/S-3 feeder junction
    for (int id = 15; id <= 32; ++id) bus(id, kLvKv);  // load buses

    // L1..L4: 110 kV inter-substation feeders, L5: grid intake.
    net.branches.push_back(line(1, 2, 10, 0.013, 0.041, 0.0016));
    net.branches.push_back(line(2, 2, 5, 0.012, 0.039, 0.0015));
    net.branches.push_back(line(3, 2, 6, 0.014, 0.042, 0.0016));
    net.branches.push_back(line(4, 2, 11, 0.013, 0.040, 0.0015));
    net.branches.push_back(line(5, 1, 2, 0.016, 0.050, 0.0020));
    // S/S-1 11 kV distribution feeders.
    net.branches.push_back(line(6, 3, 15, 0.31, 0.35, 0.0001));
    net.branches.push_back(line(7, 3, 16, 0.28, 0.33, 0.0001));
    net.branches.push_back(line(8, 3, 17, 0.33, 0.37, 0.0001));
    net.branches.push_back(line(9, 4, 18, 0.27, 0.31, 0.0001));
    net.branches.push_back(line(10, 4, 19, 0.30, 0.35, 0.0001));
    net.branches.push_back(line(11, 4, 20, 0.32, 0.36, 0.0001));
    // S/S-2 feeders; L16 runs to the junction serving E5/E6.
    net.branches.push_back(line(12, 7, 21, 0.29, 0.34, 0.0001));
    net.branches.push_back(line(13, 7, 22, 0.31, 0.36, 0.0001));
    net.branches.push_back(line(14, 7, 23, 0.28, 0.32, 0.0001));
    net.branches.push_back(line(15, 8, 24, 0.30, 0.34, 0.0001));
    net.branches.push_back(line(16, 8, 9, 0.18, 0.21, 0.0001));
    net.branches.push_back(line(17, 9, 25, 0.24, 0.27, 0.0001));
    net.branches.push_back(line(18, 9, 26, 0.26, 0.30, 0.0001));
    // S/S-3 feeders; L23 runs to the junction serving F5/F6.
    net.branches.push_back(line(19, 12, 27, 0.30, 0.34, 0.0001));
    net.branches.push_back(line(20, 12, 28, 0.28, 0.32, 0.0001));
    net.branches.push_back(line(21, 12, 29, 0.32, 0.37, 0.0001));
    net.branches.push_back(line(22, 13, 30, 0.29, 0.33, 0.0001));
    net.branches.push_back(line(23, 13, 14, 0.17, 0.20, 0.0001));
    net.branches.push_back(line(24, 14, 31, 0.25, 0.28, 0.0001));
    net.branches.push_back(line(25, 14, 32, 0.27, 0.31, 0.0001));
    // Two step-down transformers per substation.
    net.branches.push_back(xfmr(26, 2, 3));    // T1A
    net.branches.push_back(xfmr(27, 2, 4));    // T1B
    net.branches.push_back(xfmr(28, 5, 7));    // T2A
    net.branches.push_back(xfmr(29, 6, 8));    // T2B
    net.branches.push_back(xfmr(30, 10, 12));  // T3A
    net.branches.push_back(xfmr(31, 11, 13));  // T3B

    // Bus-section breakers, open under the normal configuration.
    net.switches.push_back({1, "CB-110", 5, 6, false});
    net.switches.push_back({2, "CB-210", 7, 8, false});
    net.switches.push_back({3, "CB-120", 10, 11, false});
    net.switches.push_back({4, "CB-220", 12, 13, false});

    auto load = [&net](int id, int bus_id, double p, double q) {
        net.loads.push_back({id, bus_id, p, q, true});
    };
    load(1, 15, 5.2, 1.8);
    load(2, 16, 3.6, 1.2);
    load(3, 17, 4.4, 1.5);
    load(4, 18, 2.8, 0.9);
    load(5, 19, 3.4, 1.1);
    load(6, 20, 4.0, 1.3);
    load(7, 21, 4.8, 1.6);
    load(8, 22, 3.2, 1.0);
    load(9, 23, 3.8, 1.3);
    load(10, 24, 2.6, 0.8);
    load(11, 25, 3.0, 1.0);
    load(12, 26, 3.5, 1.2);
    load(13, 27, 5.0, 1.7);
    load(14, 28, 3.3, 1.1);
    load(15, 29, 4.1, 1.4);
    load(16, 30, 2.4, 0.8);
    load(17, 31, 2.9, 0.9);
    load(18, 32, 3.7, 1.2);

    // Measurement plan, grouped by owning IED. Busbar IEDs report the
    // section voltage and injection; feeder keys sit with the IED that
    // controls the bay; the larger consumers have dedicated meters.
    auto& plan = net.measurement_plan;
    auto bus_keys = [&plan](int ied, int bus_id) {
        plan.push_back({ElementKind::bus, bus_id, Quantity::V, ied});
        plan.push_back({ElementKind::bus, bus_id, Quantity::P, ied});
        plan.push_back({ElementKind::bus, bus_id, Quantity::Q, ied});
    };
    auto flow_keys = [&plan](int ied, ElementKind kind, int id) {
        plan.push_back({kind, id, Quantity::P, ied});
        plan.push_back({kind, id, Quantity::Q, ied});
    };

    // S/S-1 (IEDs 1-12)
    bus_keys(1, 1);
    flow_keys(1, ElementKind::line, 5);
    bus_keys(2, 2);
    flow_keys(3, ElementKind::line, 1);
    flow_keys(4, ElementKind::line, 2);
    flow_keys(5, ElementKind::line, 3);
    flow_keys(6, ElementKind::line, 4);
    flow_keys(7, ElementKind::transformer, 26);
    flow_keys(8, ElementKind::transformer, 27);
    bus_keys(9, 3);
    flow_keys(9, ElementKind::line, 6);
    flow_keys(9, ElementKind::line, 7);
    flow_keys(9, ElementKind::line, 8);
    bus_keys(10, 4);
    flow_keys(10, ElementKind::line, 9);
    flow_keys(10, ElementKind::line, 10);
    flow_keys(10, ElementKind::line, 11);
    flow_keys(11, ElementKind::load, 1);
    flow_keys(11, ElementKind::load, 2);
    flow_keys(12, ElementKind::load, 3);
    flow_keys(12, ElementKind::load, 4);

    // S/S-2 (IEDs 13-22)
    bus_keys(13, 5);
    bus_keys(14, 6);
    flow_keys(15, ElementKind::transformer, 28);
    flow_keys(16, ElementKind::transformer, 29);
    bus_keys(17, 7);
    flow_keys(17, ElementKind::line, 12);
    flow_keys(17, ElementKind::line, 13);
    flow_keys(17, ElementKind::line, 14);
    bus_keys(18, 8);
    flow_keys(18, ElementKind::line, 15);
    flow_keys(18, ElementKind::line, 16);
    bus_keys(19, 9);
    flow_keys(19, ElementKind::line, 17);
    flow_keys(19, ElementKind::line, 18);
    flow_keys(20, ElementKind::load, 7);
    flow_keys(21, ElementKind::load, 8);
    flow_keys(22, ElementKind::load, 9);

    // S/S-3 (IEDs 23-32)
    bus_keys(23, 10);
    bus_keys(24, 11);
    flow_keys(25, ElementKind::transformer, 30);
    flow_keys(26, ElementKind::transformer, 31);
    bus_keys(27, 12);
    flow_keys(27, ElementKind::line, 19);
    flow_keys(27, ElementKind::line, 20);
    flow_keys(27, ElementKind::line, 21);
    bus_keys(28, 13);
    flow_keys(28, ElementKind::line, 22);
    flow_keys(28, ElementKind::line, 23);
    bus_keys(29, 14);
    flow_keys(29, ElementKind::line, 24);
    flow_keys(29, ElementKind::line, 25);
    flow_keys(30, ElementKind::load, 13);
    flow_keys(31, ElementKind::load, 14);
    flow_keys(32, ElementKind::load, 15);

    return net;
}

}  // namespace rgate::net
