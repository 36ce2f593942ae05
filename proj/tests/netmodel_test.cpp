#include <doctest.h>

#include <filesystem>
#include <set>

#include "rgate/network.hpp"
#include "rgate/powerflow.hpp"
#include "rgate/util.hpp"
#include "support.hpp"

using namespace rgate;
using namespace rgate::testsupport;

TEST_SUITE("netmodel") {

TEST_CASE("builtin network has the documented cardinalities") {
    const auto netm = net::builtin_three_substation();
    CHECK(netm.loads.size() == 18);
    CHECK(netm.measurement_plan.size() == 124);
    CHECK(netm.switches.size() == 4);

    std::set<int> ieds;
    for (const auto& key : netm.measurement_plan) ieds.insert(key.owning_ied);
    CHECK(ieds.size() == 32);
    CHECK(*ieds.begin() == 1);
    CHECK(*ieds.rbegin() == 32);

    std::size_t lines = 0, xfmrs = 0;
    for (const auto& br : netm.branches)
        (br.kind == net::BranchKind::line ? lines : xfmrs) += 1;
    CHECK(lines == 25);
    CHECK(xfmrs == 6);

    for (const char* name : {"CB-110", "CB-210", "CB-120", "CB-220"}) {
        const auto* sw = netm.find_switch_by_name(name);
        REQUIRE(sw != nullptr);
        CHECK_FALSE(sw->closed);
    }

    CHECK(net::validate(netm).empty());
}

TEST_CASE("builtin power flow converges with nonzero load flows") {
    // Construction oracle: the physics module accepts the network.
    const auto netm = net::builtin_three_substation();
    const auto sol = pf::solve_ac_powerflow(netm, pf::nominal_scenario(netm));
    REQUIRE(sol.converged);
    for (const auto& load : netm.loads) {
        bool found = false;
        for (const auto& entry : sol.load_pq) {
            if (entry.load_id == load.id) {
                found = true;
                CHECK(entry.p_mw > 0.0);
            }
        }
        CHECK(found);
    }
    // Every line feeding a load carries real power.
    for (int line_id = 6; line_id <= 25; ++line_id) {
        const auto* flow = sol.flow_for(line_id);
        REQUIRE(flow != nullptr);
        if (line_id == 16 || line_id == 23) continue;  // junction spurs checked via loads
        CHECK(std::abs(flow->p_from_mw) > 0.1);
    }
}

TEST_CASE("apply_configuration: normal is the identity") {
    const auto netm = net::builtin_three_substation();
    const auto same = net::apply_configuration(netm, net::ConfigId::Normal);
    CHECK(same == netm);
}

TEST_CASE("apply_configuration: c1 opens L1 and closes CB-120 without mutating input") {
    const auto netm = net::builtin_three_substation();
    const auto c1 = net::apply_configuration(netm, net::ConfigId::C1);
    CHECK(netm.find_branch(1)->in_service);  // input untouched
    CHECK_FALSE(netm.find_switch_by_name("CB-120")->closed);
    CHECK_FALSE(c1.find_branch(1)->in_service);
    CHECK(c1.find_switch_by_name("CB-120")->closed);
    CHECK(net::validate(c1).empty());
}

TEST_CASE("apply_configuration: c3 de-energizes the load behind L8") {
    const auto netm = net::builtin_three_substation();
    const auto c3 = net::apply_configuration(netm, net::ConfigId::C3);
    CHECK_FALSE(c3.find_branch(8)->in_service);
    CHECK_FALSE(c3.find_load(3)->in_service);  // D3 hangs off L8
    CHECK(net::validate(c3).empty());

    // Its keys leave the active plan: L8 P/Q and the D3 meter.
    const auto active = net::active_plan(c3);
    CHECK(active.size() == 120);
    for (const auto id : active) {
        const auto& key = c3.measurement_plan[id];
        CHECK_FALSE((key.element_kind == net::ElementKind::line && key.element_id == 8));
        CHECK_FALSE((key.element_kind == net::ElementKind::load && key.element_id == 3));
    }
}

TEST_CASE("active plan sizes per configuration") {
    const auto netm = net::builtin_three_substation();
    auto size_for = [&](net::ConfigId c) {
        return net::active_plan(net::apply_configuration(netm, c)).size();
    };
    CHECK(size_for(net::ConfigId::Normal) == 124);
    CHECK(size_for(net::ConfigId::C1) == 122);  // L1 P/Q drop out
    CHECK(size_for(net::ConfigId::C2) == 122);
    CHECK(size_for(net::ConfigId::C3) == 120);  // L8 + metered load D3
    CHECK(size_for(net::ConfigId::C4) == 122);  // D6 has no dedicated meter
    CHECK(size_for(net::ConfigId::C5) == 120);
    CHECK(size_for(net::ConfigId::C6) == 122);
}

TEST_CASE("ybus: single line entry") {
    const auto netm = two_bus_network(0.0, 0.1);
    const auto y = net::build_ybus(netm);
    REQUIRE(y.n == 2);
    CHECK(y.at(0, 1).real() == doctest::Approx(0.0));
    CHECK(y.at(0, 1).imag() == doctest::Approx(10.0));  // -1/(j0.1) = j10
    CHECK(y.at(0, 0).imag() == doctest::Approx(-10.0));
}

TEST_CASE("ybus: dimension equals merged electrical nodes") {
    auto netm = net::builtin_three_substation();
    CHECK(net::build_ybus(netm).n == 32);
    // Closing a bus-section breaker merges two nodes.
    const auto c1 = net::apply_configuration(netm, net::ConfigId::C1);
    CHECK(net::build_ybus(c1).n == 31);
}

TEST_CASE("ybus: out-of-service branch contributes nothing") {
    auto with_branch = four_bus_network();
    net::Branch extra;
    extra.id = 99;
    extra.from_bus = 3;
    extra.to_bus = 4;
    extra.kind = net::BranchKind::line;
    extra.resistance_pu = 0.01;
    extra.reactance_pu = 0.05;
    extra.in_service = false;
    with_branch.branches.push_back(extra);
    const auto ya = net::build_ybus(with_branch);
    const auto yb = net::build_ybus(four_bus_network());
    REQUIRE(ya.n == yb.n);
    for (int i = 0; i < ya.n; ++i)
        for (int j = 0; j < ya.n; ++j) CHECK(ya.at(i, j) == yb.at(i, j));
}

TEST_CASE("ybus symmetry for branch-only networks") {
    const auto netm = net::builtin_three_substation();
    const auto y = net::build_ybus(netm);
    for (int i = 0; i < y.n; ++i)
        for (int j = i + 1; j < y.n; ++j) {
            CHECK(y.at(i, j).real() == doctest::Approx(y.at(j, i).real()).epsilon(1e-12));
            CHECK(y.at(i, j).imag() == doctest::Approx(y.at(j, i).imag()).epsilon(1e-12));
        }
}

TEST_CASE("switch resolution is idempotent and merges closed switches") {
    auto netm = two_bus_network();
    netm.buses.push_back({3, 110.0, net::BusKind::pq});
    netm.switches.push_back({1, "CB-X", 2, 3, true});
    const auto t1 = net::Topology::resolve(netm);
    const auto t2 = net::Topology::resolve(netm);
    CHECK(t1.node_count() == 2);  // buses 2 and 3 merge
    CHECK(t1.node(2) == t1.node(3));
    for (const auto& bus : netm.buses) CHECK(t1.node(bus.id) == t2.node(bus.id));
}

TEST_CASE("validate flags zero reactance naming the branch") {
    auto netm = two_bus_network();
    netm.branches[0].reactance_pu = 0.0;
    netm.branches[0].resistance_pu = 0.0;
    const auto violations = net::validate(netm);
    bool found = false;
    for (const auto& v : violations) {
        if (v.code == "zero_reactance") {
            found = true;
            CHECK(v.message.find("branch 1") != std::string::npos);
        }
    }
    CHECK(found);
}

TEST_CASE("validate flags two slacks in one island") {
    auto netm = two_bus_network();
    netm.buses[1].kind = net::BusKind::slack;
    const auto violations = net::validate(netm);
    bool found = false;
    for (const auto& v : violations) found = found || v.code == "multiple_slacks";
    CHECK(found);
}

TEST_CASE("validate flags unserved in-service loads") {
    auto netm = two_bus_network();
    netm.branches[0].in_service = false;
    const auto violations = net::validate(netm);
    bool found = false;
    for (const auto& v : violations) found = found || v.code == "unserved_load";
    CHECK(found);
}

TEST_CASE("network json round trip") {
    const auto netm = net::builtin_three_substation();
    const auto path = std::filesystem::temp_directory_path() / "rgate_net_roundtrip.json";
    net::save_network(netm, path.string());
    const auto loaded = net::load_network(path.string());
    CHECK(loaded == netm);
    std::filesystem::remove(path);
}

TEST_CASE("network json: missing base_mva is a schema error") {
    CHECK_THROWS_WITH_AS(net::network_from_json_text(R"({"buses": [], "branches": [],
        "switches": [], "loads": [], "measurement_plan": []})"),
                         doctest::Contains("base_mva"), DataError);
}

TEST_CASE("network json: dangling bus reference is named") {
    const std::string text = R"({
      "base_mva": 100.0,
      "buses": [{"id": 1, "nominal_kv": 110.0, "kind": "slack"}],
      "branches": [{"id": 1, "from_bus": 1, "to_bus": 7, "kind": "line",
                    "resistance_pu": 0.0, "reactance_pu": 0.1, "shunt_susceptance_pu": 0.0}],
      "switches": [], "loads": [], "measurement_plan": []
    })";
    CHECK_THROWS_WITH_AS(net::network_from_json_text(text), doctest::Contains("branch 1"),
                         DataError);
}

TEST_CASE("measurement key text form round trips") {
    for (const auto& key : net::builtin_three_substation().measurement_plan) {
        const auto parsed = net::MeasurementKey::parse(key.to_string(), key.owning_ied);
        CHECK(parsed == key);
    }
    CHECK_THROWS_AS(net::MeasurementKey::parse("garbage"), DataError);
    CHECK_THROWS_AS(net::MeasurementKey::parse("bus:1:X"), DataError);
}

TEST_CASE("plan hash is stable and order-sensitive") {
    auto netm = net::builtin_three_substation();
    const auto h1 = net::plan_hash(netm);
    CHECK(h1 == net::plan_hash(netm));
    std::swap(netm.measurement_plan[0], netm.measurement_plan[1]);
    CHECK(h1 != net::plan_hash(netm));
}

}  // TEST_SUITE
