#include "rgate/datagen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rgate::datagen {

using nlohmann::json;

void DatagenSpec::check() const {
    if (!(load_range_lo > 0.0) || load_range_hi < load_range_lo)
        throw DataError("datagen: bad load range");
    if (corrupt_fraction < 0.0 || corrupt_fraction > 1.0)
        throw DataError("datagen: corrupt_fraction must lie in [0, 1]");
    if (reading_fraction < 0.0 || reading_fraction > 1.0)
        throw DataError("datagen: reading_fraction must lie in [0, 1]");
    if (corruption_hi < corruption_lo) throw DataError("datagen: bad corruption range");
    if (exclusion_hi < exclusion_lo) throw DataError("datagen: bad exclusion band");
    if (noise_level < 0.0) throw DataError("datagen: noise_level must be >= 0");
}

pf::LoadScenario sample_loads(const net::NetworkModel& net, const DatagenSpec& spec,
                              util::Rng& rng) {
    pf::LoadScenario scenario;
    for (const auto& load : net.loads) {
        if (!load.in_service) continue;
        const double fp = rng.uniform(spec.load_range_lo, spec.load_range_hi);
        const double fq = rng.uniform(spec.load_range_lo, spec.load_range_hi);
        scenario.entries.push_back({load.id, load.p_nominal_mw * fp, load.q_nominal_mvar * fq});
    }
    return scenario;
}

namespace {

double draw_corruption_factor(const DatagenSpec& spec, util::Rng& rng) {
    // Clip the exclusion band to the factor range and sample the
    // remaining mass directly (no rejection loop).
    const double lo = spec.corruption_lo, hi = spec.corruption_hi;
    const double band_lo = std::max(lo, spec.exclusion_lo);
    const double band_hi = std::min(hi, spec.exclusion_hi);
    if (band_hi <= band_lo) return rng.uniform(lo, hi);
    const double mass_low = band_lo - lo;
    const double mass_high = hi - band_hi;
    if (mass_low + mass_high <= 0.0)
        throw DataError("datagen: exclusion band covers the whole corruption range");
    const double u = rng.uniform01() * (mass_low + mass_high);
    return u < mass_low ? lo + u : band_hi + (u - mass_low);
}

}  // namespace

LabeledSnapshot corrupt_snapshot(const net::MeasurementSnapshot& snapshot,
                                 const DatagenSpec& spec, util::Rng& rng) {
    const std::size_t len = snapshot.size();
    if (spec.reading_fraction * static_cast<double>(len) < 1.0)
        throw DataError("datagen: reading_fraction * snapshot length < 1, nothing to corrupt");
    const auto k = static_cast<std::size_t>(
        std::ceil(spec.reading_fraction * static_cast<double>(len)));

    LabeledSnapshot out;
    out.snapshot = snapshot;
    out.corrupt = true;

    const auto indices = rng.sample_indices(len, k);
    out.provenance.corrupted.reserve(k);
    for (const std::size_t idx : indices) {
        const double factor = draw_corruption_factor(spec, rng);
        out.snapshot.values[idx] *= factor;
        out.provenance.corrupted.push_back({idx, factor});
    }
    std::sort(out.provenance.corrupted.begin(), out.provenance.corrupted.end(),
              [](const CorruptedReading& a, const CorruptedReading& b) { return a.index < b.index; });
    return out;
}

net::MeasurementSnapshot inject_noise(const net::MeasurementSnapshot& snapshot, double level,
                                      util::Rng& rng) {
    if (level < 0.0) throw DataError("datagen: noise level must be >= 0");
    if (level == 0.0) return snapshot;
    net::MeasurementSnapshot out = snapshot;
    for (double& v : out.values) v *= 1.0 + rng.uniform(-level, level);
    return out;
}

Dataset generate_dataset(const net::NetworkModel& base_net, net::ConfigId config,
                         const DatagenSpec& spec, int threads) {
    spec.check();
    const net::NetworkModel cnet = net::apply_configuration(base_net, config);
    const net::Topology topo = net::Topology::resolve(cnet);
    const auto active = net::active_plan(cnet, topo);

    Dataset dataset;
    dataset.config = config;
    dataset.seed = spec.seed;
    dataset.spec = spec;
    dataset.plan_hash = net::plan_hash(cnet);
    const std::size_t n = spec.n_datapoints;
    dataset.rows.resize(n);
    if (n == 0) return dataset;

    const auto corrupt_count =
        static_cast<std::size_t>(util::round_half_up(spec.corrupt_fraction * static_cast<double>(n)));
    const std::size_t failure_budget = std::max<std::size_t>(1, n / 100);
    std::atomic<std::size_t> failures{0};

    util::parallel_for(n, static_cast<std::size_t>(std::max(1, threads)), [&](std::size_t i) {
        const std::uint64_t row_seed = util::derive_seed(spec.seed, i);
        util::Rng rng(row_seed);

        pf::PowerFlowSolution sol;
        pf::LoadScenario scenario;
        for (;;) {
            scenario = sample_loads(cnet, spec, rng);
            sol = pf::solve_ac_powerflow(cnet, topo, scenario);
            if (sol.converged) break;
            const std::size_t seen = failures.fetch_add(1) + 1;
            if (seen > failure_budget) {
                throw RuntimeFailure("datagen: power flow failed on more than 1% of draws (" +
                                     std::to_string(seen) + " failures); last: " + sol.failure);
            }
        }
        auto snap = pf::extract_measurements(cnet, topo, sol, active);

        LabeledSnapshot row;
        if (i < corrupt_count) {
            row = corrupt_snapshot(snap, spec, rng);
        } else {
            row.snapshot = std::move(snap);
            row.corrupt = false;
        }
        row.provenance.scenario_seed = row_seed;
        if (spec.noise_level > 0.0)
            row.snapshot = inject_noise(row.snapshot, spec.noise_level, rng);
        dataset.rows[i] = std::move(row);
    });

    util::Rng shuffle_rng(util::derive_seed(spec.seed, 0x0dd0'0000'0000'0001ULL));
    shuffle_rng.shuffle(dataset.rows);
    return dataset;
}

namespace {

json spec_to_json(const DatagenSpec& spec) {
    return {
        {"n_datapoints", spec.n_datapoints},
        {"load_range", {spec.load_range_lo, spec.load_range_hi}},
        {"corrupt_fraction", spec.corrupt_fraction},
        {"reading_fraction", spec.reading_fraction},
        {"corruption_range", {spec.corruption_lo, spec.corruption_hi}},
        {"exclusion_band", {spec.exclusion_lo, spec.exclusion_hi}},
        {"noise_level", spec.noise_level},
        {"seed", spec.seed},
    };
}

DatagenSpec spec_from_json(const json& j) {
    DatagenSpec spec;
    spec.n_datapoints = j.at("n_datapoints").get<std::size_t>();
    spec.load_range_lo = j.at("load_range").at(0).get<double>();
    spec.load_range_hi = j.at("load_range").at(1).get<double>();
    spec.corrupt_fraction = j.at("corrupt_fraction").get<double>();
    spec.reading_fraction = j.at("reading_fraction").get<double>();
    spec.corruption_lo = j.at("corruption_range").at(0).get<double>();
    spec.corruption_hi = j.at("corruption_range").at(1).get<double>();
    spec.exclusion_lo = j.at("exclusion_band").at(0).get<double>();
    spec.exclusion_hi = j.at("exclusion_band").at(1).get<double>();
    spec.noise_level = j.at("noise_level").get<double>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

}  // namespace

std::string dataset_to_jsonl(const Dataset& dataset) {
    std::ostringstream out;
    json header;
    header["dataset"] = {
        {"config", net::to_string(dataset.config)},
        {"seed", dataset.seed},
        {"plan_hash", dataset.plan_hash},
        {"n", dataset.rows.size()},
        {"spec", spec_to_json(dataset.spec)},
    };
    out << header.dump() << '\n';

    for (const auto& row : dataset.rows) {
        json jrow;
        jrow["config"] = net::to_string(dataset.config);
        jrow["seed"] = row.provenance.scenario_seed;
        jrow["label"] = row.corrupt ? "corrupt" : "legitimate";
        json values = json::array();
        for (std::size_t i = 0; i < row.snapshot.size(); ++i) {
            values.push_back({{"key", row.snapshot.key_ids[i]}, {"value", row.snapshot.values[i]}});
        }
        jrow["values"] = std::move(values);
        json corrupted = json::array();
        for (const auto& c : row.provenance.corrupted)
            corrupted.push_back({{"index", c.index}, {"factor", c.factor}});
        jrow["provenance"] = {
            {"scenario_seed", row.provenance.scenario_seed},
            {"corrupted", std::move(corrupted)},
        };
        out << jrow.dump() << '\n';
    }
    return out.str();
}

Dataset dataset_from_jsonl(const std::string& text, const net::NetworkModel& base_net) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("dataset: empty file");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("dataset: bad header line: ") + e.what());
    }
    if (!header.contains("dataset")) throw DataError("dataset: first line is not a header");
    const json& h = header.at("dataset");

    Dataset dataset;
    dataset.config = net::parse_config(h.at("config").get<std::string>());
    dataset.seed = h.at("seed").get<std::uint64_t>();
    dataset.plan_hash = h.at("plan_hash").get<std::uint32_t>();
    dataset.spec = spec_from_json(h.at("spec"));

    const net::NetworkModel cnet = net::apply_configuration(base_net, dataset.config);
    const std::uint32_t expected_hash = net::plan_hash(cnet);
    if (expected_hash != dataset.plan_hash) {
        std::ostringstream os;
        os << "dataset: measurement-plan hash mismatch (file " << dataset.plan_hash
           << ", network " << expected_hash << ") — wrong network or configuration";
        throw DataError(os.str());
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json jrow;
        try {
            jrow = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("dataset: line " + std::to_string(line_no) + " is not valid JSON: " +
                            e.what());
        }
        LabeledSnapshot row;
        const std::string label = jrow.at("label").get<std::string>();
        if (label == "corrupt") row.corrupt = true;
        else if (label == "legitimate") row.corrupt = false;
        else throw DataError("dataset: line " + std::to_string(line_no) + " has unknown label");
        for (const auto& item : jrow.at("values")) {
            const auto key_id = item.at("key").get<std::uint16_t>();
            if (key_id >= cnet.measurement_plan.size())
                throw DataError("dataset: line " + std::to_string(line_no) +
                                " references key id " + std::to_string(key_id) +
                                " outside the plan");
            row.snapshot.key_ids.push_back(key_id);
            row.snapshot.values.push_back(item.at("value").get<double>());
        }
        const json& prov = jrow.at("provenance");
        row.provenance.scenario_seed = prov.at("scenario_seed").get<std::uint64_t>();
        for (const auto& item : prov.at("corrupted")) {
            row.provenance.corrupted.push_back(
                {item.at("index").get<std::size_t>(), item.at("factor").get<double>()});
        }
        dataset.rows.push_back(std::move(row));
    }
    return dataset;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dataset file: " + path);
    out << dataset_to_jsonl(dataset);
}

Dataset load_dataset(const std::string& path, const net::NetworkModel& base_net) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return dataset_from_jsonl(buf.str(), base_net);
}

}  // namespace rgate::datagen
