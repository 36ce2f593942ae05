#include "rgate/network.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "rgate/util.hpp"

namespace rgate::net {

namespace {

const char* kind_name(ElementKind k) {
    switch (k) {
        case ElementKind::bus: return "bus";
        case ElementKind::line: return "line";
        case ElementKind::transformer: return "xfmr";
        case ElementKind::load: return "load";
    }
    return "?";
}

char quantity_name(Quantity q) {
    switch (q) {
        case Quantity::V: return 'V';
        case Quantity::P: return 'P';
        case Quantity::Q: return 'Q';
    }
    return '?';
}

}  // namespace

std::string MeasurementKey::to_string() const {
    std::ostringstream os;
    os << kind_name(element_kind) << ':' << element_id << ':' << quantity_name(quantity);
    return os.str();
}

MeasurementKey MeasurementKey::parse(const std::string& text, int owning_ied) {
    const auto c1 = text.find(':');
    const auto c2 = text.rfind(':');
    if (c1 == std::string::npos || c2 == c1) {
        throw DataError("malformed measurement key: \"" + text + "\"");
    }
    MeasurementKey key;
    key.owning_ied = owning_ied;
    const std::string kind = text.substr(0, c1);
    if (kind == "bus") key.element_kind = ElementKind::bus;
    else if (kind == "line") key.element_kind = ElementKind::line;
    else if (kind == "xfmr") key.element_kind = ElementKind::transformer;
    else if (kind == "load") key.element_kind = ElementKind::load;
    else throw DataError("unknown element kind in key \"" + text + "\"");
    try {
        key.element_id = std::stoi(text.substr(c1 + 1, c2 - c1 - 1));
    } catch (const std::exception&) {
        throw DataError("bad element id in key \"" + text + "\"");
    }
    const std::string q = text.substr(c2 + 1);
    if (q == "V") key.quantity = Quantity::V;
    else if (q == "P") key.quantity = Quantity::P;
    else if (q == "Q") key.quantity = Quantity::Q;
    else throw DataError("unknown quantity in key \"" + text + "\"");
    return key;
}

const Bus* NetworkModel::find_bus(int id) const {
    for (const auto& b : buses)
        if (b.id == id) return &b;
    return nullptr;
}

const Branch* NetworkModel::find_branch(int id) const {
    for (const auto& b : branches)
        if (b.id == id) return &b;
    return nullptr;
}

const Load* NetworkModel::find_load(int id) const {
    for (const auto& l : loads)
        if (l.id == id) return &l;
    return nullptr;
}

const Switch* NetworkModel::find_switch_by_name(const std::string& name) const {
    for (const auto& s : switches)
        if (s.name == name) return &s;
    return nullptr;
}

std::optional<double> MeasurementSnapshot::value_for(std::uint16_t key_id) const {
    for (std::size_t i = 0; i < key_ids.size(); ++i) {
        if (key_ids[i] == key_id) return values[i];
    }
    return std::nullopt;
}

std::string to_string(ConfigId c) {
    switch (c) {
        case ConfigId::Normal: return "normal";
        case ConfigId::C1: return "c1";
        case ConfigId::C2: return "c2";
        case ConfigId::C3: return "c3";
        case ConfigId::C4: return "c4";
        case ConfigId::C5: return "c5";
        case ConfigId::C6: return "c6";
    }
    return "?";
}

ConfigId parse_config(const std::string& text) {
    std::string t;
    for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "normal" || t == "c0") return ConfigId::Normal;
    if (t == "c1" || t == "config1") return ConfigId::C1;
    if (t == "c2" || t == "config2") return ConfigId::C2;
    if (t == "c3" || t == "config3") return ConfigId::C3;
    if (t == "c4" || t == "config4") return ConfigId::C4;
    if (t == "c5" || t == "config5") return ConfigId::C5;
    if (t == "c6" || t == "config6") return ConfigId::C6;
    throw DataError("unknown configuration id: \"" + text + "\"");
}

namespace {

class UnionFind {
  public:
    explicit UnionFind(std::size_t n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

  private:
    std::vector<std::size_t> parent_;
};

}  // namespace

Topology Topology::resolve(const NetworkModel& net) {
    Topology topo;
    const std::size_t nb = net.buses.size();
    std::unordered_map<int, std::size_t> bus_index;
    topo.bus_ids_.reserve(nb);
    for (std::size_t i = 0; i < nb; ++i) {
        bus_index[net.buses[i].id] = i;
        topo.bus_ids_.push_back(net.buses[i].id);
    }

    // Closed switches merge buses into electrical nodes.
    UnionFind uf(nb);
    for (const auto& sw : net.switches) {
        if (!sw.closed) continue;
        auto fa = bus_index.find(sw.from_bus);
        auto fb = bus_index.find(sw.to_bus);
        if (fa == bus_index.end() || fb == bus_index.end()) {
            throw DataError("switch " + sw.name + " references unknown bus");
        }
        uf.unite(fa->second, fb->second);
    }

    // Union the in-service branches on top to find energized groups
    // (connectivity to a slack bus). Node merging itself is only done
    // by switches; branches keep distinct nodes.
    UnionFind reach(nb);
    for (std::size_t i = 0; i < nb; ++i) reach.unite(i, uf.find(i));
    for (const auto& br : net.branches) {
        if (!br.in_service) continue;
        auto fa = bus_index.find(br.from_bus);
        auto fb = bus_index.find(br.to_bus);
        if (fa == bus_index.end() || fb == bus_index.end()) {
            throw DataError("branch " + std::to_string(br.id) + " references unknown bus");
        }
        reach.unite(fa->second, fb->second);
    }
    std::vector<bool> energized(nb, false);
    for (std::size_t i = 0; i < nb; ++i) {
        for (std::size_t j = 0; j < nb; ++j) {
            if (net.buses[j].kind == BusKind::slack && reach.find(i) == reach.find(j)) {
                energized[i] = true;
                break;
            }
        }
    }

    // Assign node indices to energized merge-groups in bus order.
    topo.node_of_bus_.assign(nb, -1);
    std::unordered_map<std::size_t, int> node_of_root;
    for (std::size_t i = 0; i < nb; ++i) {
        if (!energized[i]) continue;
        const std::size_t root = uf.find(i);
        auto it = node_of_root.find(root);
        if (it == node_of_root.end()) {
            it = node_of_root.emplace(root, topo.node_count_++).first;
            topo.node_members_.emplace_back();
        }
        topo.node_of_bus_[i] = it->second;
        topo.node_members_[static_cast<std::size_t>(it->second)].push_back(net.buses[i].id);
    }
    for (auto& members : topo.node_members_) std::sort(members.begin(), members.end());

    for (std::size_t i = 0; i < nb; ++i) {
        if (net.buses[i].kind == BusKind::slack && topo.node_of_bus_[i] >= 0) {
            topo.slack_node_ = topo.node_of_bus_[i];
            break;
        }
    }

    topo.branch_active_.reserve(net.branches.size());
    topo.branch_ids_.reserve(net.branches.size());
    for (const auto& br : net.branches) {
        const bool active = br.in_service && topo.node(br.from_bus) >= 0 && topo.node(br.to_bus) >= 0;
        topo.branch_active_.push_back(active);
        topo.branch_ids_.push_back(br.id);
    }
    return topo;
}

int Topology::node(int bus_id) const {
    const auto it = std::lower_bound(bus_ids_.begin(), bus_ids_.end(), bus_id);
    if (it == bus_ids_.end() || *it != bus_id) return -1;
    return node_of_bus_[static_cast<std::size_t>(it - bus_ids_.begin())];
}

bool Topology::branch_active(int branch_id) const {
    for (std::size_t i = 0; i < branch_ids_.size(); ++i) {
        if (branch_ids_[i] == branch_id) return branch_active_[i];
    }
    return false;
}

bool Topology::load_energized(const Load& load) const {
    return load.in_service && node(load.bus) >= 0;
}

const std::vector<int>& Topology::buses_in_node(int node) const {
    return node_members_.at(static_cast<std::size_t>(node));
}

YbusMatrix build_ybus(const NetworkModel& net, const Topology& topo) {
    if (topo.slack_node() < 0) {
        throw DataError("network has no energized slack bus");
    }
    YbusMatrix y;
    y.n = topo.node_count();
    y.a.assign(static_cast<std::size_t>(y.n) * y.n, {0.0, 0.0});
    for (const auto& br : net.branches) {
        if (!topo.branch_active(br.id)) continue;
        const int f = topo.node(br.from_bus);
        const int t = topo.node(br.to_bus);
        if (f == t) continue;  // branch shorted by closed switches
        if (br.reactance_pu == 0.0 && br.resistance_pu == 0.0) {
            throw DataError("branch " + std::to_string(br.id) + " has zero impedance");
        }
        const std::complex<double> z{br.resistance_pu, br.reactance_pu};
        const std::complex<double> ys = 1.0 / z;
        const std::complex<double> ysh{0.0, br.shunt_susceptance_pu / 2.0};
        const double tap = (br.kind == BranchKind::transformer) ? br.tap_ratio : 1.0;
        y.at(f, f) += (ys + ysh) / (tap * tap);
        y.at(t, t) += ys + ysh;
        y.at(f, t) -= ys / tap;
        y.at(t, f) -= ys / tap;
    }
    return y;
}

YbusMatrix build_ybus(const NetworkModel& net) {
    return build_ybus(net, Topology::resolve(net));
}

NetworkModel apply_configuration(const NetworkModel& net, ConfigId config) {
    NetworkModel out = net;
    auto outage_line = [&out](int line_id) {
        for (auto& br : out.branches) {
            if (br.id == line_id) {
                br.in_service = false;
                return;
            }
        }
        throw DataError("configuration refers to missing line " + std::to_string(line_id));
    };
    auto close_switch = [&out](const std::string& name) {
        for (auto& sw : out.switches) {
            if (sw.name == name) {
                sw.closed = true;
                return;
            }
        }
        throw DataError("configuration refers to missing switch " + name);
    };
    switch (config) {
        case ConfigId::Normal:
            return out;
        case ConfigId::C1:
            outage_line(1);
            close_switch("CB-120");
            return out;
        case ConfigId::C2:
            outage_line(2);
            close_switch("CB-110");
            return out;
        case ConfigId::C3:
        case ConfigId::C4:
        case ConfigId::C5:
        case ConfigId::C6: {
            const int line_id = config == ConfigId::C3   ? 8
                                : config == ConfigId::C4 ? 11
                                : config == ConfigId::C5 ? 14
                                                         : 25;
            outage_line(line_id);
            // Loads stranded by the outage are switched off.
            const Topology topo = Topology::resolve(out);
            for (auto& load : out.loads) {
                if (load.in_service && topo.node(load.bus) < 0) load.in_service = false;
            }
            return out;
        }
    }
    throw DataError("unknown configuration id");
}

std::vector<Violation> validate(const NetworkModel& net) {
    std::vector<Violation> out;
    auto add = [&out](std::string code, std::string message) {
        out.push_back({std::move(code), std::move(message)});
    };

    std::set<int> bus_ids;
    for (const auto& b : net.buses) {
        if (!bus_ids.insert(b.id).second)
            add("duplicate_bus", "bus id " + std::to_string(b.id) + " appears twice");
        if (!(b.nominal_kv > 0.0))
            add("bad_nominal_kv", "bus " + std::to_string(b.id) + " has nominal_kv <= 0");
    }
    if (net.base_mva <= 0.0) add("bad_base_mva", "base_mva must be positive");

    std::set<int> branch_ids;
    for (const auto& br : net.branches) {
        const std::string label = "branch " + std::to_string(br.id);
        if (!branch_ids.insert(br.id).second) add("duplicate_branch", label + " appears twice");
        if (br.reactance_pu == 0.0) add("zero_reactance", label + " has reactance_pu == 0");
        if (!(br.tap_ratio > 0.0)) add("bad_tap_ratio", label + " has tap_ratio <= 0");
        if (br.from_bus == br.to_bus) add("self_loop", label + " connects a bus to itself");
        if (!bus_ids.count(br.from_bus) || !bus_ids.count(br.to_bus))
            add("dangling_branch", label + " references a missing bus");
    }
    std::set<int> switch_ids;
    for (const auto& sw : net.switches) {
        if (!switch_ids.insert(sw.id).second)
            add("duplicate_switch", "switch " + sw.name + " id appears twice");
        if (!bus_ids.count(sw.from_bus) || !bus_ids.count(sw.to_bus))
            add("dangling_switch", "switch " + sw.name + " references a missing bus");
    }
    std::set<int> load_ids;
    for (const auto& l : net.loads) {
        const std::string label = "load " + std::to_string(l.id);
        if (!load_ids.insert(l.id).second) add("duplicate_load", label + " appears twice");
        if (l.p_nominal_mw < 0.0) add("negative_load", label + " has p_nominal_mw < 0");
        if (!bus_ids.count(l.bus)) add("dangling_load", label + " references a missing bus");
    }

    // Measurement plan: referential integrity and identity uniqueness.
    std::set<std::string> seen_points;
    for (const auto& key : net.measurement_plan) {
        const std::string text = key.to_string();
        if (!seen_points.insert(text).second)
            add("duplicate_measurement", "measurement " + text + " appears twice in the plan");
        bool exists = false;
        switch (key.element_kind) {
            case ElementKind::bus: exists = bus_ids.count(key.element_id) > 0; break;
            case ElementKind::line: {
                const Branch* br = net.find_branch(key.element_id);
                exists = br != nullptr && br->kind == BranchKind::line;
                break;
            }
            case ElementKind::transformer: {
                const Branch* br = net.find_branch(key.element_id);
                exists = br != nullptr && br->kind == BranchKind::transformer;
                break;
            }
            case ElementKind::load: exists = load_ids.count(key.element_id) > 0; break;
        }
        if (!exists) add("dangling_measurement", "measurement " + text + " references a missing element");
        if (key.element_kind == ElementKind::bus && key.quantity == Quantity::V) {
            // fine: V only meaningful on buses
        } else if (key.element_kind != ElementKind::bus && key.quantity == Quantity::V) {
            add("bad_quantity", "measurement " + text + " puts V on a non-bus element");
        }
        if (key.owning_ied < 1)
            add("bad_owning_ied", "measurement " + text + " has owning_ied < 1");
    }

    // Slack count per switch-merged island (regardless of energization).
    if (!net.buses.empty()) {
        try {
            // Count slacks per connected component of the full graph.
            std::unordered_map<int, std::size_t> bus_index;
            for (std::size_t i = 0; i < net.buses.size(); ++i) bus_index[net.buses[i].id] = i;
            UnionFind comp(net.buses.size());
            for (const auto& br : net.branches) {
                if (!br.in_service) continue;
                if (bus_index.count(br.from_bus) && bus_index.count(br.to_bus))
                    comp.unite(bus_index[br.from_bus], bus_index[br.to_bus]);
            }
            for (const auto& sw : net.switches) {
                if (!sw.closed) continue;
                if (bus_index.count(sw.from_bus) && bus_index.count(sw.to_bus))
                    comp.unite(bus_index[sw.from_bus], bus_index[sw.to_bus]);
            }
            std::map<std::size_t, int> slack_count;
            for (std::size_t i = 0; i < net.buses.size(); ++i) {
                if (net.buses[i].kind == BusKind::slack) slack_count[comp.find(i)]++;
            }
            for (const auto& [root, count] : slack_count) {
                if (count > 1)
                    add("multiple_slacks",
                        "island containing bus " + std::to_string(net.buses[root].id) + " has " +
                            std::to_string(count) + " slack buses");
            }
            // Energized loads must reach a slack.
            const Topology topo = Topology::resolve(net);
            for (const auto& l : net.loads) {
                if (l.in_service && topo.node(l.bus) < 0)
                    add("unserved_load",
                        "load " + std::to_string(l.id) + " is in service but not fed by any slack");
            }
        } catch (const DataError& e) {
            add("topology_error", e.what());
        }
    }
    return out;
}

std::vector<std::uint16_t> active_plan(const NetworkModel& net, const Topology& topo) {
    std::vector<std::uint16_t> out;
    out.reserve(net.measurement_plan.size());
    for (std::size_t i = 0; i < net.measurement_plan.size(); ++i) {
        const auto& key = net.measurement_plan[i];
        bool active = false;
        switch (key.element_kind) {
            case ElementKind::bus:
                active = topo.node(key.element_id) >= 0;
                break;
            case ElementKind::line:
            case ElementKind::transformer:
                active = topo.branch_active(key.element_id);
                break;
            case ElementKind::load: {
                const Load* l = net.find_load(key.element_id);
                active = l != nullptr && topo.load_energized(*l);
                break;
            }
        }
        if (active) out.push_back(static_cast<std::uint16_t>(i));
    }
    return out;
}

std::vector<std::uint16_t> active_plan(const NetworkModel& net) {
    return active_plan(net, Topology::resolve(net));
}

std::uint32_t plan_hash(const NetworkModel& net) {
    std::ostringstream os;
    for (const auto& key : net.measurement_plan) os << key.to_string() << '\n';
    return util::crc32(os.str());
}

}  // namespace rgate::net
