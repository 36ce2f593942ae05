#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rgate/datagen.hpp"
#include "rgate/estimation.hpp"
#include "rgate/gbdt.hpp"
#include "rgate/network.hpp"
#include "rgate/stream.hpp"

namespace rgate::pipeline {

struct PipelineConfig {
    double bdd_probability = 0.999;
    /// Fraction of clean-classified snapshots sent to the BDD anyway.
    double audit_rate = 0.01;
    std::optional<double> decision_threshold;  // overrides the model's
    int worker_pool_size = 2;
    std::size_t bdd_queue_capacity = 64;
    std::uint64_t seed = 0;
};

enum class FinalDecision {
    clean,
    alert,
    recorded,  // shed to record-only mode under BDD overload
};

struct SnapshotDecision {
    std::uint64_t snapshot_id = 0;
    double ml_score = 0.0;
    bool ml_flag = false;
    bool audited = false;
    bool schema_mismatch = false;  // routed straight to BDD (fail closed)
    bool bdd_invoked = false;
    std::optional<se::BddVerdict> bdd_verdict;
    FinalDecision final = FinalDecision::clean;
    std::int64_t ml_latency_us = 0;
    std::int64_t bdd_latency_us = 0;
    std::int64_t total_latency_us = 0;
};

struct LatencyStats {
    std::uint64_t count = 0;
    double mean_us = 0.0;
    double p50_us = 0.0;
    double p99_us = 0.0;

    static LatencyStats from_samples(std::vector<double> samples_us);
};

struct DetectionReport {
    std::uint64_t processed = 0;
    std::uint64_t labeled = 0;
    // Final pipeline decisions vs ground truth (alert == positive).
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
    // ML stage alone vs ground truth.
    std::uint64_t ml_tp = 0, ml_tn = 0, ml_fp = 0, ml_fn = 0;
    std::optional<double> precision, recall;        // undefined when denominator is 0
    std::optional<double> ml_precision, ml_recall;
    std::uint64_t alerts = 0;
    std::uint64_t bdd_invocations = 0;
    std::uint64_t audits = 0;
    std::uint64_t audit_hits = 0;  // audited snapshots the BDD flagged
    std::uint64_t estimator_failures = 0;
    std::uint64_t recorded_only = 0;
    LatencyStats ml_latency, bdd_latency, total_latency;
    double achieved_snapshots_per_s = 0.0;

    void finalize();  // fills the precision/recall fields
};

/// The two-stage detector: every snapshot is scored by the GBDT;
/// flagged or audited snapshots go to the chi-squared BDD, whose
/// verdict is final.
class Pipeline {
  public:
    /// `network` must already have its configuration applied.
    Pipeline(net::NetworkModel network, ml::GbdtModel model, PipelineConfig config);

    SnapshotDecision process(const net::MeasurementSnapshot& snapshot, std::uint64_t snapshot_id);

    /// Batch run over labeled rows: single ML scorer thread, bounded
    /// BDD worker pool. Decisions land in `decisions` (completion
    /// order) when the pointer is non-null.
    DetectionReport run(const std::vector<datagen::LabeledSnapshot>& rows,
                        std::vector<SnapshotDecision>* decisions = nullptr);

    const se::BadDataDetector& detector() const { return detector_; }
    const ml::GbdtModel& model() const { return model_; }
    const net::NetworkModel& network() const { return network_; }
    const PipelineConfig& config() const { return config_; }
    double decision_threshold() const { return threshold_; }

  private:
    bool audit_draw(std::uint64_t snapshot_id) const;

    net::NetworkModel network_;
    ml::GbdtModel model_;
    PipelineConfig config_;
    se::BadDataDetector detector_;
    double threshold_;
};

enum class BenchMode { ml_only, bdd_only, combined };

std::string to_string(BenchMode mode);
BenchMode parse_bench_mode(const std::string& text);

struct BenchResult {
    BenchMode mode = BenchMode::ml_only;
    std::uint64_t snapshots = 0;
    LatencyStats per_snapshot;
    double throughput_per_s = 0.0;
};

/// Times the three detection paths over one identical workload,
/// single-threaded so mode latencies compose additively.
BenchResult bench(Pipeline& pipeline, const std::vector<datagen::LabeledSnapshot>& workload,
                  BenchMode mode);

struct LiveOptions {
    std::uint64_t snapshot_period_us = 100'000;  // cadence when complete
    std::size_t change_threshold = 8;            // early cut after N changed keys
    int idle_stop_ms = 2000;                     // stop after silence
    std::uint64_t max_snapshots = 0;             // 0 = unlimited
};

struct LiveRunResult {
    DetectionReport report;  // unlabeled: only counts and latencies
    std::uint64_t packets_received = 0;
    std::uint64_t packets_rejected = 0;  // decode failures
    std::uint64_t stale_updates = 0;
    std::uint64_t incomplete_cuts = 0;
};

/// Drives the pipeline from a UDP packet stream: decode, update the
/// latest-value table, cut snapshots on the cadence, detect. Returns
/// when the stream goes idle or max_snapshots is reached.
LiveRunResult run_live(Pipeline& pipeline, wire::UdpReceiver& receiver,
                       const LiveOptions& options);

/// JSON forms for the decision log (JSONL) and the report summary.
std::string decision_to_json(const SnapshotDecision& decision);
std::string report_to_json(const DetectionReport& report);

}  // namespace rgate::pipeline
