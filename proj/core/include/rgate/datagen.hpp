#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rgate/network.hpp"
#include "rgate/powerflow.hpp"
#include "rgate/util.hpp"

namespace rgate::datagen {

/// Recipe for one synthetic dataset: load sampling range, corruption
/// parameters and measurement noise.
struct DatagenSpec {
    std::size_t n_datapoints = 0;
    double load_range_lo = 0.70;   // fraction of nominal rating
    double load_range_hi = 1.00;
    double corrupt_fraction = 0.20;  // of datapoints
    double reading_fraction = 0.30;  // of readings within a corrupt datapoint
    double corruption_lo = 0.7;      // multiplicative factor range
    double corruption_hi = 1.3;
    // Factors inside (exclusion_lo, exclusion_hi) are never drawn, so
    // every corrupted reading differs materially from its true value.
    // Collapse the band (lo == hi) to sample the full factor range.
    double exclusion_lo = 0.98;
    double exclusion_hi = 1.02;
    double noise_level = 0.0;  // uniform multiplicative, e.g. 0.005
    std::uint64_t seed = 0;

    void check() const;  // throws DataError on out-of-range settings
};

struct CorruptedReading {
    std::size_t index = 0;  // position within the snapshot
    double factor = 1.0;
};

struct Provenance {
    std::uint64_t scenario_seed = 0;
    std::vector<CorruptedReading> corrupted;
};

struct LabeledSnapshot {
    net::MeasurementSnapshot snapshot;
    bool corrupt = false;
    Provenance provenance;
};

struct Dataset {
    net::ConfigId config = net::ConfigId::Normal;
    std::uint64_t seed = 0;
    std::uint32_t plan_hash = 0;
    DatagenSpec spec;
    std::vector<LabeledSnapshot> rows;
};

/// Each in-service load's p and q independently scaled by uniform
/// draws from [load_range_lo, load_range_hi].
pf::LoadScenario sample_loads(const net::NetworkModel& net, const DatagenSpec& spec,
                              util::Rng& rng);

/// Multiplies ceil(reading_fraction * len) distinct readings by
/// independent factors from the corruption range minus the exclusion
/// band. The result is labeled corrupt regardless of factor magnitude;
/// provenance records the altered indices and factors.
LabeledSnapshot corrupt_snapshot(const net::MeasurementSnapshot& snapshot,
                                 const DatagenSpec& spec, util::Rng& rng);

/// Each reading multiplied by (1 + u), u uniform in [-level, +level].
/// level == 0 returns the snapshot unchanged without consuming RNG
/// draws.
net::MeasurementSnapshot inject_noise(const net::MeasurementSnapshot& snapshot, double level,
                                      util::Rng& rng);

/// Full recipe: per-datapoint load sampling, power flow, corruption of
/// exactly round(corrupt_fraction * n) datapoints, optional noise,
/// seeded shuffle. Per-datapoint RNG streams are derived from the
/// master seed, so `threads` does not affect the output. Aborts when
/// more than 1% of power-flow attempts fail.
Dataset generate_dataset(const net::NetworkModel& base_net, net::ConfigId config,
                         const DatagenSpec& spec, int threads = 1);

/// JSONL serialization: one header line carrying the spec and plan
/// hash, then one row per line. Loading validates the plan hash
/// against the network.
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path, const net::NetworkModel& base_net);
std::string dataset_to_jsonl(const Dataset& dataset);
Dataset dataset_from_jsonl(const std::string& text, const net::NetworkModel& base_net);

}  // namespace rgate::datagen
