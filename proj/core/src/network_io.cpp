#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rgate/network.hpp"
#include "rgate/util.hpp"

namespace rgate::net {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw DataError("network schema error at " + where + ": " + what);
}

double get_number(const json& obj, const std::string& where, const std::string& field) {
    if (!obj.contains(field)) fail(where, "missing required field \"" + field + "\"");
    const auto& v = obj.at(field);
    if (!v.is_number()) fail(where + "." + field, "expected a number");
    return v.get<double>();
}

int get_int(const json& obj, const std::string& where, const std::string& field) {
    if (!obj.contains(field)) fail(where, "missing required field \"" + field + "\"");
    const auto& v = obj.at(field);
    if (!v.is_number_integer()) fail(where + "." + field, "expected an integer");
    return v.get<int>();
}

std::string get_string(const json& obj, const std::string& where, const std::string& field) {
    if (!obj.contains(field)) fail(where, "missing required field \"" + field + "\"");
    const auto& v = obj.at(field);
    if (!v.is_string()) fail(where + "." + field, "expected a string");
    return v.get<std::string>();
}

bool get_bool(const json& obj, const std::string& where, const std::string& field,
              std::optional<bool> fallback = std::nullopt) {
    if (!obj.contains(field)) {
        if (fallback) return *fallback;
        fail(where, "missing required field \"" + field + "\"");
    }
    const auto& v = obj.at(field);
    if (!v.is_boolean()) fail(where + "." + field, "expected a boolean");
    return v.get<bool>();
}

const json& get_array(const json& obj, const std::string& where, const std::string& field) {
    if (!obj.contains(field)) fail(where, "missing required field \"" + field + "\"");
    const auto& v = obj.at(field);
    if (!v.is_array()) fail(where + "." + field, "expected an array");
    return v;
}

BusKind parse_bus_kind(const std::string& s, const std::string& where) {
    if (s == "slack") return BusKind::slack;
    if (s == "pv") return BusKind::pv;
    if (s == "pq") return BusKind::pq;
    fail(where, "unknown bus kind \"" + s + "\"");
}

BranchKind parse_branch_kind(const std::string& s, const std::string& where) {
    if (s == "line") return BranchKind::line;
    if (s == "transformer") return BranchKind::transformer;
    fail(where, "unknown branch kind \"" + s + "\"");
}

}  // namespace

NetworkModel network_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("network file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw DataError("network file must contain a JSON object");

    NetworkModel net;
    net.base_mva = get_number(doc, "$", "base_mva");

    std::size_t i = 0;
    for (const auto& jb : get_array(doc, "$", "buses")) {
        const std::string where = "buses[" + std::to_string(i++) + "]";
        Bus b;
        b.id = get_int(jb, where, "id");
        b.nominal_kv = get_number(jb, where, "nominal_kv");
        b.kind = parse_bus_kind(get_string(jb, where, "kind"), where + ".kind");
        net.buses.push_back(b);
    }
    i = 0;
    for (const auto& jb : get_array(doc, "$", "branches")) {
        const std::string where = "branches[" + std::to_string(i++) + "]";
        Branch b;
        b.id = get_int(jb, where, "id");
        b.from_bus = get_int(jb, where, "from_bus");
        b.to_bus = get_int(jb, where, "to_bus");
        b.kind = parse_branch_kind(get_string(jb, where, "kind"), where + ".kind");
        b.resistance_pu = get_number(jb, where, "resistance_pu");
        b.reactance_pu = get_number(jb, where, "reactance_pu");
        b.shunt_susceptance_pu = get_number(jb, where, "shunt_susceptance_pu");
        b.tap_ratio = jb.contains("tap_ratio") ? get_number(jb, where, "tap_ratio") : 1.0;
        b.in_service = get_bool(jb, where, "in_service", true);
        net.branches.push_back(b);
    }
    i = 0;
    for (const auto& js : get_array(doc, "$", "switches")) {
        const std::string where = "switches[" + std::to_string(i++) + "]";
        Switch s;
        s.id = get_int(js, where, "id");
        s.name = get_string(js, where, "name");
        s.from_bus = get_int(js, where, "from_bus");
        s.to_bus = get_int(js, where, "to_bus");
        s.closed = get_bool(js, where, "closed");
        net.switches.push_back(s);
    }
    i = 0;
    for (const auto& jl : get_array(doc, "$", "loads")) {
        const std::string where = "loads[" + std::to_string(i++) + "]";
        Load l;
        l.id = get_int(jl, where, "id");
        l.bus = get_int(jl, where, "bus");
        l.p_nominal_mw = get_number(jl, where, "p_nominal_mw");
        l.q_nominal_mvar = get_number(jl, where, "q_nominal_mvar");
        l.in_service = get_bool(jl, where, "in_service", true);
        net.loads.push_back(l);
    }
    i = 0;
    for (const auto& jm : get_array(doc, "$", "measurement_plan")) {
        const std::string where = "measurement_plan[" + std::to_string(i++) + "]";
        MeasurementKey key;
        const std::string kind = get_string(jm, where, "element_kind");
        if (kind == "bus") key.element_kind = ElementKind::bus;
        else if (kind == "line") key.element_kind = ElementKind::line;
        else if (kind == "transformer") key.element_kind = ElementKind::transformer;
        else if (kind == "load") key.element_kind = ElementKind::load;
        else fail(where + ".element_kind", "unknown element kind \"" + kind + "\"");
        key.element_id = get_int(jm, where, "element_id");
        const std::string q = get_string(jm, where, "quantity");
        if (q == "V") key.quantity = Quantity::V;
        else if (q == "P") key.quantity = Quantity::P;
        else if (q == "Q") key.quantity = Quantity::Q;
        else fail(where + ".quantity", "unknown quantity \"" + q + "\"");
        key.owning_ied = get_int(jm, where, "owning_ied");
        net.measurement_plan.push_back(key);
    }

    // Referential integrity is part of the schema contract.
    const auto violations = validate(net);
    for (const auto& v : violations) {
        if (v.code == "dangling_branch" || v.code == "dangling_switch" ||
            v.code == "dangling_load" || v.code == "dangling_measurement" ||
            v.code == "duplicate_bus" || v.code == "duplicate_branch" ||
            v.code == "duplicate_load" || v.code == "duplicate_measurement" ||
            v.code == "bad_base_mva") {
            throw DataError("network schema error: " + v.message);
        }
    }
    return net;
}

std::string network_to_json_text(const NetworkModel& net) {
    json doc;
    doc["base_mva"] = net.base_mva;
    doc["buses"] = json::array();
    for (const auto& b : net.buses) {
        doc["buses"].push_back({
            {"id", b.id},
            {"nominal_kv", b.nominal_kv},
            {"kind", b.kind == BusKind::slack ? "slack" : (b.kind == BusKind::pv ? "pv" : "pq")},
        });
    }
    doc["branches"] = json::array();
    for (const auto& b : net.branches) {
        json jb = {
            {"id", b.id},
            {"from_bus", b.from_bus},
            {"to_bus", b.to_bus},
            {"kind", b.kind == BranchKind::line ? "line" : "transformer"},
            {"resistance_pu", b.resistance_pu},
            {"reactance_pu", b.reactance_pu},
            {"shunt_susceptance_pu", b.shunt_susceptance_pu},
            {"in_service", b.in_service},
        };
        if (b.kind == BranchKind::transformer) jb["tap_ratio"] = b.tap_ratio;
        doc["branches"].push_back(std::move(jb));
    }
    doc["switches"] = json::array();
    for (const auto& s : net.switches) {
        doc["switches"].push_back({
            {"id", s.id},
            {"name", s.name},
            {"from_bus", s.from_bus},
            {"to_bus", s.to_bus},
            {"closed", s.closed},
        });
    }
    doc["loads"] = json::array();
    for (const auto& l : net.loads) {
        doc["loads"].push_back({
            {"id", l.id},
            {"bus", l.bus},
            {"p_nominal_mw", l.p_nominal_mw},
            {"q_nominal_mvar", l.q_nominal_mvar},
            {"in_service", l.in_service},
        });
    }
    doc["measurement_plan"] = json::array();
    for (const auto& key : net.measurement_plan) {
        const char* kind = key.element_kind == ElementKind::bus            ? "bus"
                           : key.element_kind == ElementKind::line        ? "line"
                           : key.element_kind == ElementKind::transformer ? "transformer"
                                                                          : "load";
        const char* q = key.quantity == Quantity::V ? "V" : (key.quantity == Quantity::P ? "P" : "Q");
        doc["measurement_plan"].push_back({
            {"element_kind", kind},
            {"element_id", key.element_id},
            {"quantity", q},
            {"owning_ied", key.owning_ied},
        });
    }
    return doc.dump(2) + "\n";
}

NetworkModel load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open network file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return network_from_json_text(buf.str());
}

void save_network(const NetworkModel& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write network file: " + path);
    out << network_to_json_text(net);
}

}  // namespace rgate::net
