#include "rgate/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>

#include <json.hpp>

#include "rgate/util.hpp"

namespace rgate::pipeline {

using nlohmann::json;

namespace {

std::int64_t elapsed_us(std::chrono::steady_clock::time_point from,
                        std::chrono::steady_clock::time_point to) {
    return std::chrono::duration_cast<std::chrono::microseconds>(to - from).count();
}

}  // namespace

LatencyStats LatencyStats::from_samples(std::vector<double> samples_us) {
    LatencyStats stats;
    stats.count = samples_us.size();
    if (samples_us.empty()) return stats;
    double sum = 0.0;
    for (double s : samples_us) sum += s;
    stats.mean_us = sum / static_cast<double>(samples_us.size());
    std::sort(samples_us.begin(), samples_us.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(samples_us.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, samples_us.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return samples_us[lo] * (1.0 - frac) + samples_us[hi] * frac;
    };
    stats.p50_us = quantile(0.50);
    stats.p99_us = quantile(0.99);
    return stats;
}

void DetectionReport::finalize() {
    auto ratio = [](std::uint64_t num, std::uint64_t denom) -> std::optional<double> {
        if (denom == 0) return std::nullopt;  // undefined, not 1
        return static_cast<double>(num) / static_cast<double>(denom);
    };
    precision = ratio(tp, tp + fp);
    recall = ratio(tp, tp + fn);
    ml_precision = ratio(ml_tp, ml_tp + ml_fp);
    ml_recall = ratio(ml_tp, ml_tp + ml_fn);
}

Pipeline::Pipeline(net::NetworkModel network, ml::GbdtModel model, PipelineConfig config)
    : network_(std::move(network)), model_(std::move(model)), config_(config),
      detector_(network_, config.bdd_probability),
      threshold_(config.decision_threshold.value_or(model_.decision_threshold)) {
    if (config_.audit_rate < 0.0 || config_.audit_rate > 1.0)
        throw DataError("audit_rate must lie in [0, 1]");
}

bool Pipeline::audit_draw(std::uint64_t snapshot_id) const {
    if (config_.audit_rate <= 0.0) return false;
    if (config_.audit_rate >= 1.0) return true;
    util::Rng rng(util::derive_seed(config_.seed ^ 0xA0D17ULL, snapshot_id));
    return rng.bernoulli(config_.audit_rate);
}

SnapshotDecision Pipeline::process(const net::MeasurementSnapshot& snapshot,
                                   std::uint64_t snapshot_id) {
    SnapshotDecision decision;
    decision.snapshot_id = snapshot_id;

    const auto t0 = std::chrono::steady_clock::now();
    try {
        decision.ml_score =
            model_.predict_score(network_, snapshot, ml::MissingKeyPolicy::zero_fill);
        decision.ml_flag = decision.ml_score >= threshold_;
    } catch (const DataError&) {
        // Snapshot does not fit the model schema: fail closed, let the
        // physics stage decide.
        decision.schema_mismatch = true;
        decision.ml_flag = true;
        decision.ml_score = 1.0;
    }
    const auto t1 = std::chrono::steady_clock::now();
    decision.ml_latency_us = elapsed_us(t0, t1);

    if (!decision.ml_flag) decision.audited = audit_draw(snapshot_id);

    if (decision.ml_flag || decision.audited) {
        decision.bdd_invoked = true;
        const auto t2 = std::chrono::steady_clock::now();
        try {
            decision.bdd_verdict = detector_.detect(snapshot);
            decision.final = decision.bdd_verdict->bad_data ? FinalDecision::alert
                                                            : FinalDecision::clean;
        } catch (const DataError&) {
            // Snapshot does not even map onto the active plan.
            decision.final = FinalDecision::alert;
        }
        decision.bdd_latency_us = elapsed_us(t2, std::chrono::steady_clock::now());
    } else {
        decision.final = FinalDecision::clean;
    }
    decision.total_latency_us = elapsed_us(t0, std::chrono::steady_clock::now());
    return decision;
}

DetectionReport Pipeline::run(const std::vector<datagen::LabeledSnapshot>& rows,
                              std::vector<SnapshotDecision>* decisions) {
    DetectionReport report;
    std::vector<double> ml_samples, bdd_samples, total_samples;
    ml_samples.reserve(rows.size());
    total_samples.reserve(rows.size());

    std::mutex mu;  // guards report counters, samples, decisions
    util::ThreadPool pool(static_cast<std::size_t>(std::max(1, config_.worker_pool_size)),
                          config_.bdd_queue_capacity);

    const auto run_start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        SnapshotDecision decision;
        decision.snapshot_id = i;

        const auto t0 = std::chrono::steady_clock::now();
        try {
            decision.ml_score =
                model_.predict_score(network_, row.snapshot, ml::MissingKeyPolicy::zero_fill);
            decision.ml_flag = decision.ml_score >= threshold_;
        } catch (const DataError&) {
            decision.schema_mismatch = true;
            decision.ml_flag = true;
            decision.ml_score = 1.0;
        }
        decision.ml_latency_us = elapsed_us(t0, std::chrono::steady_clock::now());
        if (!decision.ml_flag) decision.audited = audit_draw(i);

        auto settle = [&, t0](SnapshotDecision d) {
            d.total_latency_us = elapsed_us(t0, std::chrono::steady_clock::now());
            std::lock_guard lock(mu);
            ++report.processed;
            ++report.labeled;
            ml_samples.push_back(static_cast<double>(d.ml_latency_us));
            total_samples.push_back(static_cast<double>(d.total_latency_us));
            if (d.bdd_invoked) {
                ++report.bdd_invocations;
                bdd_samples.push_back(static_cast<double>(d.bdd_latency_us));
            }
            if (d.audited) {
                ++report.audits;
                if (d.final == FinalDecision::alert) ++report.audit_hits;
            }
            if (d.bdd_verdict && d.bdd_verdict->cause == se::BddCause::estimator_failure)
                ++report.estimator_failures;
            if (d.final == FinalDecision::recorded) ++report.recorded_only;

            const bool truth = rows[d.snapshot_id].corrupt;
            const bool alert = d.final == FinalDecision::alert;
            if (alert) ++report.alerts;
            if (alert && truth) ++report.tp;
            else if (alert && !truth) ++report.fp;
            else if (!alert && truth) ++report.fn;
            else ++report.tn;
            if (d.ml_flag && truth) ++report.ml_tp;
            else if (d.ml_flag && !truth) ++report.ml_fp;
            else if (!d.ml_flag && truth) ++report.ml_fn;
            else ++report.ml_tn;
            if (decisions) decisions->push_back(std::move(d));
        };

        if (decision.ml_flag || decision.audited) {
            decision.bdd_invoked = true;
            auto task = [this, &rows, decision, settle]() mutable {
                const auto& snapshot = rows[decision.snapshot_id].snapshot;
                const auto t2 = std::chrono::steady_clock::now();
                try {
                    decision.bdd_verdict = detector_.detect(snapshot);
                    decision.final = decision.bdd_verdict->bad_data ? FinalDecision::alert
                                                                    : FinalDecision::clean;
                } catch (const DataError&) {
                    decision.final = FinalDecision::alert;
                }
                decision.bdd_latency_us = elapsed_us(t2, std::chrono::steady_clock::now());
                settle(std::move(decision));
            };
            if (!pool.try_submit(task)) {
                // Worker pool saturated: shed to record-only mode.
                decision.bdd_invoked = false;
                decision.final = FinalDecision::recorded;
                settle(std::move(decision));
            }
        } else {
            decision.final = FinalDecision::clean;
            settle(std::move(decision));
        }
    }
    pool.wait_idle();

    const double wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count();
    report.ml_latency = LatencyStats::from_samples(std::move(ml_samples));
    report.bdd_latency = LatencyStats::from_samples(std::move(bdd_samples));
    report.total_latency = LatencyStats::from_samples(std::move(total_samples));
    if (wall_s > 0.0 && report.processed > 0)
        report.achieved_snapshots_per_s = static_cast<double>(report.processed) / wall_s;
    report.finalize();
    return report;
}

std::string to_string(BenchMode mode) {
    switch (mode) {
        case BenchMode::ml_only: return "ml_only";
        case BenchMode::bdd_only: return "bdd_only";
        case BenchMode::combined: return "combined";
    }
    return "?";
}

BenchMode parse_bench_mode(const std::string& text) {
    if (text == "ml_only" || text == "ml") return BenchMode::ml_only;
    if (text == "bdd_only" || text == "bdd") return BenchMode::bdd_only;
    if (text == "combined") return BenchMode::combined;
    throw DataError("unknown bench mode: \"" + text + "\"");
}

BenchResult bench(Pipeline& pipeline, const std::vector<datagen::LabeledSnapshot>& workload,
                  BenchMode mode) {
    BenchResult result;
    result.mode = mode;
    result.snapshots = workload.size();
    if (workload.empty()) return result;

    // Touch every path once so first-call effects stay out of the
    // measurements.
    (void)pipeline.model().predict_score(pipeline.network(), workload.front().snapshot,
                                         ml::MissingKeyPolicy::zero_fill);
    (void)pipeline.detector().detect(workload.front().snapshot);

    std::vector<double> samples;
    samples.reserve(workload.size());
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < workload.size(); ++i) {
        const auto& snapshot = workload[i].snapshot;
        const auto t0 = std::chrono::steady_clock::now();
        switch (mode) {
            case BenchMode::ml_only:
                (void)pipeline.model().predict_score(pipeline.network(), snapshot,
                                                     ml::MissingKeyPolicy::zero_fill);
                break;
            case BenchMode::bdd_only:
                (void)pipeline.detector().detect(snapshot);
                break;
            case BenchMode::combined: {
                const double score = pipeline.model().predict_score(
                    pipeline.network(), snapshot, ml::MissingKeyPolicy::zero_fill);
                if (score >= pipeline.decision_threshold())
                    (void)pipeline.detector().detect(snapshot);
                break;
            }
        }
        samples.push_back(static_cast<double>(
            elapsed_us(t0, std::chrono::steady_clock::now())));
    }
    const double wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.per_snapshot = LatencyStats::from_samples(std::move(samples));
    if (wall_s > 0.0)
        result.throughput_per_s = static_cast<double>(workload.size()) / wall_s;
    return result;
}

LiveRunResult run_live(Pipeline& pipeline, wire::UdpReceiver& receiver,
                       const LiveOptions& options) {
    LiveRunResult result;
    const auto& net = pipeline.network();
    const auto active = pipeline.detector().active_keys();
    wire::SnapshotTable table(net.measurement_plan.size());

    std::vector<double> ml_samples, bdd_samples, total_samples;
    std::uint64_t last_cut_us = 0;
    std::uint64_t now_us = 0;
    std::uint64_t snapshot_id = 0;
    bool saw_packet = false;

    auto maybe_cut = [&](bool force) {
        const bool periodic = now_us >= last_cut_us + options.snapshot_period_us;
        const bool burst = table.changed_keys() >= options.change_threshold;
        if (!force && !periodic && !burst) return;
        const auto taken = table.take_snapshot(active, now_us);
        if (!taken.complete) {
            ++result.incomplete_cuts;
            if (periodic) last_cut_us = now_us;
            return;
        }
        table.reset_changed_keys();
        last_cut_us = now_us;
        auto decision = pipeline.process(taken.snapshot, snapshot_id++);
        ml_samples.push_back(static_cast<double>(decision.ml_latency_us));
        total_samples.push_back(static_cast<double>(decision.total_latency_us));
        ++result.report.processed;
        if (decision.bdd_invoked) {
            ++result.report.bdd_invocations;
            bdd_samples.push_back(static_cast<double>(decision.bdd_latency_us));
        }
        if (decision.audited) ++result.report.audits;
        if (decision.final == FinalDecision::alert) ++result.report.alerts;
    };

    const auto wall_start = std::chrono::steady_clock::now();
    for (;;) {
        if (options.max_snapshots > 0 && snapshot_id >= options.max_snapshots) break;
        auto datagram = receiver.receive(options.idle_stop_ms);
        if (!datagram) {
            if (saw_packet) break;  // stream went idle
            break;                  // nothing ever arrived
        }
        saw_packet = true;
        ++result.packets_received;
        try {
            const auto packet = wire::decode_packet(*datagram, net.measurement_plan.size());
            table.update(packet);
            now_us = std::max(now_us, packet.timestamp_us);
        } catch (const DataError&) {
            ++result.packets_rejected;
            continue;
        }
        maybe_cut(false);
    }
    maybe_cut(true);

    result.stale_updates = table.stale_updates();
    const double wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    result.report.ml_latency = LatencyStats::from_samples(std::move(ml_samples));
    result.report.bdd_latency = LatencyStats::from_samples(std::move(bdd_samples));
    result.report.total_latency = LatencyStats::from_samples(std::move(total_samples));
    if (wall_s > 0.0 && result.report.processed > 0)
        result.report.achieved_snapshots_per_s =
            static_cast<double>(result.report.processed) / wall_s;
    result.report.finalize();
    return result;
}

std::string decision_to_json(const SnapshotDecision& decision) {
    json j;
    j["snapshot_id"] = decision.snapshot_id;
    j["ml_score"] = decision.ml_score;
    j["ml_flag"] = decision.ml_flag;
    j["audited"] = decision.audited;
    j["schema_mismatch"] = decision.schema_mismatch;
    j["bdd_invoked"] = decision.bdd_invoked;
    if (decision.bdd_verdict) {
        const auto& v = *decision.bdd_verdict;
        j["bdd"] = {
            {"j_value", v.result.j_value},
            {"dof", v.result.dof},
            {"threshold", v.threshold},
            {"bad_data", v.bad_data},
            {"cause", v.cause == se::BddCause::none              ? "none"
                      : v.cause == se::BddCause::chi2_exceeded   ? "chi2_exceeded"
                                                                 : "estimator_failure"},
        };
    }
    j["final"] = decision.final == FinalDecision::clean   ? "clean"
                 : decision.final == FinalDecision::alert ? "alert"
                                                          : "recorded";
    j["ml_latency_us"] = decision.ml_latency_us;
    j["bdd_latency_us"] = decision.bdd_latency_us;
    j["total_latency_us"] = decision.total_latency_us;
    return j.dump();
}

std::string report_to_json(const DetectionReport& report) {
    json j;
    j["processed"] = report.processed;
    j["labeled"] = report.labeled;
    j["confusion"] = {{"tp", report.tp}, {"tn", report.tn}, {"fp", report.fp}, {"fn", report.fn}};
    j["ml_confusion"] = {{"tp", report.ml_tp}, {"tn", report.ml_tn}, {"fp", report.ml_fp},
                         {"fn", report.ml_fn}};
    auto opt = [](const std::optional<double>& v) {
        return v ? json(*v) : json(nullptr);  // undefined stays null
    };
    j["precision"] = opt(report.precision);
    j["recall"] = opt(report.recall);
    j["ml_precision"] = opt(report.ml_precision);
    j["ml_recall"] = opt(report.ml_recall);
    j["alerts"] = report.alerts;
    j["bdd_invocations"] = report.bdd_invocations;
    j["audits"] = report.audits;
    j["audit_hits"] = report.audit_hits;
    j["estimator_failures"] = report.estimator_failures;
    j["recorded_only"] = report.recorded_only;
    auto lat = [](const LatencyStats& stats) {
        return json{{"count", stats.count},
                    {"mean_us", stats.mean_us},
                    {"p50_us", stats.p50_us},
                    {"p99_us", stats.p99_us}};
    };
    j["ml_latency"] = lat(report.ml_latency);
    j["bdd_latency"] = lat(report.bdd_latency);
    j["total_latency"] = lat(report.total_latency);
    j["achieved_snapshots_per_s"] = report.achieved_snapshots_per_s;
    return j.dump(2);
}

}  // namespace rgate::pipeline
