#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <json.hpp>

#include "rgate/datagen.hpp"
#include "rgate/estimation.hpp"
#include "rgate/gbdt.hpp"
#include "rgate/network.hpp"
#include "rgate/pipeline.hpp"
#include "rgate/stream.hpp"
#include "rgate/util.hpp"

namespace rgate::cli {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

net::NetworkModel load_source(const NetworkSource& source) {
    net::NetworkModel base =
        source.builtin ? net::builtin_three_substation() : net::load_network(source.path);
    const auto violations = net::validate(base);
    if (!violations.empty()) {
        std::string msg = "network fails validation:";
        for (const auto& v : violations) msg += "\n  [" + v.code + "] " + v.message;
        throw DataError(msg);
    }
    return base;
}

/// Writes <output>.manifest.json describing how the artifact was made.
class Manifest {
  public:
    Manifest(const CommonOptions& common, std::string command)
        : started_(util::iso8601_now()) {
        doc_["command"] = std::move(command);
        doc_["argv"] = common.argv;
        doc_["tool_version"] = kVersion;
        doc_["seed"] = common.seed;
        doc_["inputs"] = json::array();
        doc_["outputs"] = json::array();
    }

    void config(json j) { doc_["config"] = std::move(j); }

    void input(const std::string& path) {
        doc_["inputs"].push_back({{"path", path}, {"crc32", util::crc32_file(path)}});
    }

    void output(const std::string& path) {
        doc_["outputs"].push_back({{"path", path}, {"crc32", util::crc32_file(path)}});
    }

    void write(const std::string& beside_output) {
        doc_["started"] = started_;
        doc_["finished"] = util::iso8601_now();
        const std::string path = beside_output + ".manifest.json";
        std::ofstream out(path);
        if (!out) throw DataError("cannot write manifest: " + path);
        out << doc_.dump(2) << "\n";
    }

  private:
    json doc_;
    std::string started_;
};

datagen::DatagenSpec make_spec(const GenDataOptions& options, std::uint64_t seed) {
    datagen::DatagenSpec spec;
    spec.n_datapoints = options.n;
    spec.corrupt_fraction = options.corrupt_fraction;
    spec.reading_fraction = options.reading_fraction;
    if (options.factor_range.size() != 2) throw DataError("--factor-range needs lo,hi");
    if (options.exclusion_band.size() != 2) throw DataError("--exclusion-band needs lo,hi");
    spec.corruption_lo = options.factor_range[0];
    spec.corruption_hi = options.factor_range[1];
    spec.exclusion_lo = options.exclusion_band[0];
    spec.exclusion_hi = options.exclusion_band[1];
    spec.noise_level = options.noise;
    spec.seed = seed;
    return spec;
}

std::string fmt(double v, int precision = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v, int precision = 4) {
    return v ? fmt(*v, precision) : std::string("undef");
}

}  // namespace

int CommonOptions::effective_threads() const {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 2 : static_cast<int>(hw);
}

int cmd_gen_data(const CommonOptions& common, const GenDataOptions& options) {
    const auto base = load_source(options.network);
    const auto config = net::parse_config(options.network.config);
    const auto spec = make_spec(options, common.seed);

    Manifest manifest(common, "gen-data");
    if (!options.network.builtin) manifest.input(options.network.path);

    const auto dataset = datagen::generate_dataset(base, config, spec, common.effective_threads());
    datagen::save_dataset(dataset, options.out);

    std::size_t corrupt = 0;
    for (const auto& row : dataset.rows) corrupt += row.corrupt ? 1 : 0;
    std::cout << "wrote " << dataset.rows.size() << " snapshots (" << corrupt << " corrupt, "
              << (dataset.rows.size() - corrupt) << " legitimate) for config "
              << net::to_string(config) << " to " << options.out << "\n";

    manifest.config({{"config", net::to_string(config)},
                     {"n", options.n},
                     {"corrupt_fraction", options.corrupt_fraction},
                     {"reading_fraction", options.reading_fraction},
                     {"factor_range", options.factor_range},
                     {"exclusion_band", options.exclusion_band},
                     {"noise", options.noise},
                     {"plan_hash", dataset.plan_hash}});
    manifest.output(options.out);
    manifest.write(options.out);
    return 0;
}

namespace {

std::vector<ml::TrainingRow> to_training_rows(const datagen::Dataset& dataset) {
    std::vector<ml::TrainingRow> rows;
    rows.reserve(dataset.rows.size());
    for (const auto& row : dataset.rows) rows.push_back({row.snapshot, row.corrupt});
    return rows;
}

void print_cv_table(const ml::GridSearchResult& result, std::ostream& os) {
    os << "n_estimators,max_depth,learning_rate,mean_f1";
    const std::size_t folds = result.table.empty() ? 0 : result.table.front().fold_f1.size();
    for (std::size_t f = 0; f < folds; ++f) os << ",fold" << f;
    os << "\n";
    for (const auto& cell : result.table) {
        os << cell.hp.n_estimators << ',' << cell.hp.max_depth << ',' << cell.hp.learning_rate
           << ',' << fmt(cell.mean_f1, 6);
        for (double f1 : cell.fold_f1) os << ',' << fmt(f1, 6);
        os << "\n";
    }
}

}  // namespace

int cmd_train(const CommonOptions& common, const TrainOptions& options) {
    const auto base = load_source(options.network);

    Manifest manifest(common, "train");
    manifest.input(options.data);
    if (!options.network.builtin) manifest.input(options.network.path);

    const auto dataset = datagen::load_dataset(options.data, base);
    const auto cnet = net::apply_configuration(base, dataset.config);
    const auto rows = to_training_rows(dataset);

    ml::Hyperparams best;
    std::string cv_csv;
    if (options.grid == "none") {
        best.n_estimators = options.n_estimators;
        best.max_depth = options.max_depth;
        best.learning_rate = options.learning_rate;
        best.min_samples_leaf = options.min_samples_leaf;
        best.subsample = options.subsample;
    } else if (options.grid == "paper" || options.grid == "stage1") {
        const int threads = common.effective_threads();
        auto stage1 = ml::grid_search(cnet, rows, ml::GridSpec::paper_stage1(), options.folds,
                                      common.seed, threads);
        std::cout << "stage-1 best: n_estimators=" << stage1.best.n_estimators
                  << " max_depth=" << stage1.best.max_depth
                  << " learning_rate=" << stage1.best.learning_rate
                  << " (mean F1 " << fmt(stage1.best_mean_f1, 6) << ")\n";
        ml::GridSearchResult final_result = stage1;
        if (options.grid == "paper") {
            auto stage2 = ml::grid_search(
                cnet, rows,
                ml::GridSpec::paper_stage2(stage1.best.max_depth, stage1.best.learning_rate),
                options.folds, common.seed, threads);
            std::cout << "stage-2 best: n_estimators=" << stage2.best.n_estimators
                      << " (mean F1 " << fmt(stage2.best_mean_f1, 6) << ")\n";
            final_result.best = stage2.best;
            final_result.best_mean_f1 = stage2.best_mean_f1;
            for (const auto& cell : stage2.table) final_result.table.push_back(cell);
        }
        best = final_result.best;
        best.min_samples_leaf = options.min_samples_leaf;
        best.subsample = options.subsample;
        std::ostringstream cv;
        print_cv_table(final_result, cv);
        cv_csv = cv.str();
        std::cout << cv_csv;
    } else {
        throw DataError("unknown --grid mode: " + options.grid);
    }

    auto model = ml::train(cnet, rows, best, common.seed);
    model.decision_threshold = options.decision_threshold;
    ml::save_model(model, options.out);
    std::cout << "trained " << model.trees.size() << " trees on " << rows.size()
              << " rows; model written to " << options.out << "\n";
    if (!model.schema.dropped.empty()) {
        std::cout << "dropped " << model.schema.dropped.size()
                  << " zero-variance features (constant readings)\n";
    }

    if (!cv_csv.empty()) {
        const std::string cv_path =
            options.cv_out.empty() ? options.out + ".cv.csv" : options.cv_out;
        std::ofstream cv_file(cv_path);
        if (!cv_file) throw DataError("cannot write CV table: " + cv_path);
        cv_file << cv_csv;
        manifest.output(cv_path);
    }
    manifest.config({{"grid", options.grid},
                     {"folds", options.folds},
                     {"n_estimators", best.n_estimators},
                     {"max_depth", best.max_depth},
                     {"learning_rate", best.learning_rate},
                     {"min_samples_leaf", best.min_samples_leaf},
                     {"subsample", best.subsample},
                     {"decision_threshold", options.decision_threshold}});
    manifest.output(options.out);
    manifest.write(options.out);
    return 0;
}

namespace {

struct EvalRow {
    std::string config;
    double noise = 0.0;
    std::uint64_t ml_tn = 0, ml_tp = 0, ml_fn = 0, ml_fp = 0;
    std::optional<double> ml_precision, ml_recall;
    std::uint64_t bdd_tn = 0, bdd_tp = 0, bdd_fn = 0, bdd_fp = 0;
    std::optional<double> bdd_precision, bdd_recall;
    std::uint64_t pipe_tn = 0, pipe_tp = 0, pipe_fn = 0, pipe_fp = 0;
    std::optional<double> pipe_precision, pipe_recall;
};

std::optional<double> ratio(std::uint64_t num, std::uint64_t denom) {
    if (denom == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(denom);
}

EvalRow evaluate_dataset(const net::NetworkModel& base, const ml::GbdtModel& model,
                         const datagen::Dataset& dataset, const EvaluateOptions& options,
                         std::uint64_t seed, int threads) {
    EvalRow row;
    row.config = net::to_string(dataset.config);
    row.noise = dataset.spec.noise_level;

    const auto cnet = net::apply_configuration(base, dataset.config);

    // ML alone.
    for (const auto& item : dataset.rows) {
        const double score =
            model.predict_score(cnet, item.snapshot, ml::MissingKeyPolicy::zero_fill);
        const bool flagged =
            score >= options.decision_threshold.value_or(model.decision_threshold);
        if (flagged && item.corrupt) ++row.ml_tp;
        else if (flagged && !item.corrupt) ++row.ml_fp;
        else if (!flagged && item.corrupt) ++row.ml_fn;
        else ++row.ml_tn;
    }
    row.ml_precision = ratio(row.ml_tp, row.ml_tp + row.ml_fp);
    row.ml_recall = ratio(row.ml_tp, row.ml_tp + row.ml_fn);

    // BDD alone over all datapoints (optionally a seeded sample).
    std::vector<std::size_t> bdd_rows(dataset.rows.size());
    for (std::size_t i = 0; i < bdd_rows.size(); ++i) bdd_rows[i] = i;
    if (options.bdd_sample > 0 && options.bdd_sample < bdd_rows.size()) {
        util::Rng rng(util::derive_seed(seed, 0xBDD));
        bdd_rows = rng.sample_indices(dataset.rows.size(), options.bdd_sample);
    }
    {
        const se::BadDataDetector detector(cnet);
        std::vector<std::uint8_t> bad(bdd_rows.size(), 0);
        util::parallel_for(bdd_rows.size(), static_cast<std::size_t>(threads), [&](std::size_t i) {
            bad[i] = detector.detect(dataset.rows[bdd_rows[i]].snapshot).bad_data ? 1 : 0;
        });
        for (std::size_t i = 0; i < bdd_rows.size(); ++i) {
            const bool truth = dataset.rows[bdd_rows[i]].corrupt;
            if (bad[i] && truth) ++row.bdd_tp;
            else if (bad[i] && !truth) ++row.bdd_fp;
            else if (!bad[i] && truth) ++row.bdd_fn;
            else ++row.bdd_tn;
        }
    }
    row.bdd_precision = ratio(row.bdd_tp, row.bdd_tp + row.bdd_fp);
    row.bdd_recall = ratio(row.bdd_tp, row.bdd_tp + row.bdd_fn);

    // Combined pipeline.
    pipeline::PipelineConfig pconfig;
    pconfig.audit_rate = options.audit_rate;
    pconfig.decision_threshold = options.decision_threshold;
    pconfig.seed = seed;
    pconfig.worker_pool_size = threads;
    pipeline::Pipeline pipe(cnet, model, pconfig);
    const auto report = pipe.run(dataset.rows);
    row.pipe_tp = report.tp;
    row.pipe_tn = report.tn;
    row.pipe_fp = report.fp;
    row.pipe_fn = report.fn;
    row.pipe_precision = report.precision;
    row.pipe_recall = report.recall;
    return row;
}

void print_eval_table(const std::vector<EvalRow>& rows, std::ostream& os) {
    os << "config  noise   ML TN/TP/FN/FP           ML prec  ML rec   "
          "BDD prec BDD rec  pipe prec pipe rec\n";
    for (const auto& r : rows) {
        char line[256];
        std::snprintf(line, sizeof(line), "%-7s %-7.4f %5llu/%4llu/%3llu/%3llu      %8s %8s %8s %8s %9s %8s\n",
                      r.config.c_str(), r.noise, static_cast<unsigned long long>(r.ml_tn),
                      static_cast<unsigned long long>(r.ml_tp),
                      static_cast<unsigned long long>(r.ml_fn),
                      static_cast<unsigned long long>(r.ml_fp), fmt_opt(r.ml_precision).c_str(),
                      fmt_opt(r.ml_recall).c_str(), fmt_opt(r.bdd_precision).c_str(),
                      fmt_opt(r.bdd_recall).c_str(), fmt_opt(r.pipe_precision).c_str(),
                      fmt_opt(r.pipe_recall).c_str());
        os << line;
    }
}

std::string eval_csv(const std::vector<EvalRow>& rows) {
    std::ostringstream os;
    os << "config,noise,ml_tn,ml_tp,ml_fn,ml_fp,ml_precision,ml_recall,"
          "bdd_tn,bdd_tp,bdd_fn,bdd_fp,bdd_precision,bdd_recall,"
          "pipe_tn,pipe_tp,pipe_fn,pipe_fp,pipe_precision,pipe_recall\n";
    for (const auto& r : rows) {
        os << r.config << ',' << r.noise << ',' << r.ml_tn << ',' << r.ml_tp << ',' << r.ml_fn
           << ',' << r.ml_fp << ',' << fmt_opt(r.ml_precision, 6) << ','
           << fmt_opt(r.ml_recall, 6) << ',' << r.bdd_tn << ',' << r.bdd_tp << ',' << r.bdd_fn
           << ',' << r.bdd_fp << ',' << fmt_opt(r.bdd_precision, 6) << ','
           << fmt_opt(r.bdd_recall, 6) << ',' << r.pipe_tn << ',' << r.pipe_tp << ','
           << r.pipe_fn << ',' << r.pipe_fp << ',' << fmt_opt(r.pipe_precision, 6) << ','
           << fmt_opt(r.pipe_recall, 6) << "\n";
    }
    return os.str();
}

}  // namespace

int cmd_evaluate(const CommonOptions& common, const EvaluateOptions& options) {
    const auto base = load_source(options.network);
    const auto model = ml::load_model(options.model);
    const int threads = common.effective_threads();

    Manifest manifest(common, "evaluate");
    manifest.input(options.model);
    if (!options.network.builtin) manifest.input(options.network.path);

    std::vector<EvalRow> rows;
    if (!options.data.empty()) {
        for (const auto& path : options.data) {
            manifest.input(path);
            const auto dataset = datagen::load_dataset(path, base);
            rows.push_back(evaluate_dataset(base, model, dataset, options, common.seed, threads));
        }
    } else {
        // Generate the sweep on the fly: configs x noise levels.
        if (options.configs.empty() || options.noise_levels.empty())
            throw DataError("evaluate needs --data files or --config plus --noise levels");
        std::uint64_t stream = 0;
        for (const double noise : options.noise_levels) {
            for (const auto& config_name : options.configs) {
                datagen::DatagenSpec spec;
                spec.n_datapoints = options.n;
                spec.corrupt_fraction = options.corrupt_fraction;
                spec.noise_level = noise;
                spec.seed = util::derive_seed(common.seed, 0xE0A1 + stream++);
                const auto dataset = datagen::generate_dataset(
                    base, net::parse_config(config_name), spec, threads);
                rows.push_back(
                    evaluate_dataset(base, model, dataset, options, common.seed, threads));
            }
        }
    }

    print_eval_table(rows, std::cout);
    if (rows.empty()) std::cout << "(no datasets evaluated)\n";
    if (!options.out.empty()) {
        std::ofstream out(options.out);
        if (!out) throw DataError("cannot write report: " + options.out);
        out << eval_csv(rows);
        manifest.output(options.out);
        manifest.write(options.out);
    }
    return 0;
}

int cmd_replay(const CommonOptions& common, const ReplayOptions& options) {
    const auto base = load_source(options.network);
    const auto config = net::parse_config(options.network.config);
    const auto cnet = net::apply_configuration(base, config);
    const auto model = ml::load_model(options.model);
    const auto dataset = datagen::load_dataset(options.data, base);
    if (net::to_string(dataset.config) != net::to_string(config))
        throw DataError("dataset was generated for config " + net::to_string(dataset.config) +
                        ", replay requested " + net::to_string(config));

    std::vector<net::MeasurementSnapshot> source;
    source.reserve(dataset.rows.size());
    for (const auto& row : dataset.rows) source.push_back(row.snapshot);

    pipeline::PipelineConfig pconfig;
    pconfig.audit_rate = options.audit_rate;
    pconfig.seed = common.seed;
    pipeline::Pipeline pipe(cnet, model, pconfig);

    wire::ReplayOptions ropts;
    ropts.schedule.mode = options.event_mode == "all"
                              ? wire::TransmissionSchedule::Mode::event
                              : wire::TransmissionSchedule::Mode::normal;
    ropts.time_scale = options.time_scale;
    ropts.repeats = options.repeats;

    wire::ReplayStats stats;
    pipeline::LiveRunResult live;
    if (options.mode == "udp") {
        wire::UdpReceiver receiver(options.port);
        std::thread ingest([&] {
            pipeline::LiveOptions lopts;
            lopts.idle_stop_ms = 1500;
            live = pipeline::run_live(pipe, receiver, lopts);
        });
        {
            wire::UdpSender sender(options.host, receiver.port());
            stats = wire::replay(cnet, source, ropts,
                                 [&](const std::vector<std::uint8_t>& datagram) {
                                     return sender.send(datagram);
                                 });
        }
        ingest.join();
    } else if (options.mode == "inproc") {
        // Deterministic in-process loop: decode straight into a table.
        wire::SnapshotTable table(cnet.measurement_plan.size());
        const auto active = pipe.detector().active_keys();
        std::uint64_t snapshot_id = 0;
        std::uint64_t last_cut = 0;
        stats = wire::replay(cnet, source, ropts,
                             [&](const std::vector<std::uint8_t>& datagram) {
            const auto packet = wire::decode_packet(datagram, cnet.measurement_plan.size());
            table.update(packet);
            ++live.packets_received;
            if (packet.timestamp_us >= last_cut + 1'000'000) {
                const auto taken = table.take_snapshot(active, packet.timestamp_us);
                if (taken.complete) {
                    last_cut = packet.timestamp_us;
                    const auto decision = pipe.process(taken.snapshot, snapshot_id++);
                    ++live.report.processed;
                    if (decision.bdd_invoked) ++live.report.bdd_invocations;
                    if (decision.final == pipeline::FinalDecision::alert) ++live.report.alerts;
                } else {
                    ++live.incomplete_cuts;
                }
            }
            return true;
        });
        live.stale_updates = table.stale_updates();
        live.report.finalize();
    } else {
        throw DataError("unknown replay mode: " + options.mode);
    }

    std::cout << "replay: offered " << stats.packets_offered << " packets ("
              << fmt(stats.offered_rate_per_s, 1) << "/s simulated), sent " << stats.packets_sent
              << ", dropped " << stats.packets_dropped << ", wall " << fmt(stats.wall_seconds, 2)
              << " s\n";
    std::cout << "pipeline: received " << live.packets_received << " packets, rejected "
              << live.packets_rejected << ", processed " << live.report.processed
              << " snapshots, alerts " << live.report.alerts << ", bdd invocations "
              << live.report.bdd_invocations << ", achieved "
              << fmt(live.report.achieved_snapshots_per_s, 1) << " snapshots/s\n";

    if (!options.out.empty()) {
        Manifest manifest(common, "replay");
        manifest.input(options.model);
        manifest.input(options.data);
        std::ofstream out(options.out);
        if (!out) throw DataError("cannot write report: " + options.out);
        json j = json::parse(pipeline::report_to_json(live.report));
        j["replay"] = {{"packets_offered", stats.packets_offered},
                       {"packets_sent", stats.packets_sent},
                       {"packets_dropped", stats.packets_dropped},
                       {"offered_rate_per_s", stats.offered_rate_per_s},
                       {"wall_seconds", stats.wall_seconds}};
        j["stream"] = {{"packets_received", live.packets_received},
                       {"packets_rejected", live.packets_rejected},
                       {"stale_updates", live.stale_updates},
                       {"incomplete_cuts", live.incomplete_cuts}};
        out << j.dump(2) << "\n";
        manifest.output(options.out);
        manifest.write(options.out);
    }
    return 0;
}

int cmd_bench(const CommonOptions& common, const BenchOptions& options) {
    const auto base = load_source(options.network);
    const auto config = net::parse_config(options.network.config);
    const auto cnet = net::apply_configuration(base, config);
    const auto model = ml::load_model(options.model);

    datagen::Dataset dataset;
    if (!options.data.empty()) {
        dataset = datagen::load_dataset(options.data, base);
    } else {
        datagen::DatagenSpec spec;
        spec.n_datapoints = options.n;
        spec.corrupt_fraction = options.corrupt_fraction;
        spec.noise_level = options.noise;
        spec.seed = common.seed;
        dataset = datagen::generate_dataset(base, config, spec, common.effective_threads());
    }

    pipeline::PipelineConfig pconfig;
    pconfig.audit_rate = 0.0;  // pure path timing
    pconfig.seed = common.seed;
    pipeline::Pipeline pipe(cnet, model, pconfig);

    std::vector<pipeline::BenchMode> modes;
    if (options.mode == "all") {
        modes = {pipeline::BenchMode::ml_only, pipeline::BenchMode::bdd_only,
                 pipeline::BenchMode::combined};
    } else {
        modes = {pipeline::parse_bench_mode(options.mode)};
    }

    json table = json::array();
    std::printf("%-10s %10s %12s %12s %12s %14s\n", "mode", "snapshots", "mean(us)", "p50(us)",
                "p99(us)", "snapshots/s");
    for (const auto mode : modes) {
        const auto result = pipeline::bench(pipe, dataset.rows, mode);
        std::printf("%-10s %10llu %12.1f %12.1f %12.1f %14.1f\n",
                    pipeline::to_string(mode).c_str(),
                    static_cast<unsigned long long>(result.snapshots),
                    result.per_snapshot.mean_us, result.per_snapshot.p50_us,
                    result.per_snapshot.p99_us, result.throughput_per_s);
        table.push_back({{"mode", pipeline::to_string(mode)},
                         {"snapshots", result.snapshots},
                         {"mean_us", result.per_snapshot.mean_us},
                         {"p50_us", result.per_snapshot.p50_us},
                         {"p99_us", result.per_snapshot.p99_us},
                         {"throughput_per_s", result.throughput_per_s}});
    }

    if (!options.out.empty()) {
        Manifest manifest(common, "bench");
        manifest.input(options.model);
        if (!options.data.empty()) manifest.input(options.data);
        std::ofstream out(options.out);
        if (!out) throw DataError("cannot write bench table: " + options.out);
        out << table.dump(2) << "\n";
        manifest.output(options.out);
        manifest.write(options.out);
    }
    return 0;
}

int cmd_export_network(const CommonOptions& common, const ExportNetworkOptions& options) {
    const auto base = load_source(options.network);
    const auto config = net::parse_config(options.network.config);
    const auto cnet = net::apply_configuration(base, config);
    net::save_network(cnet, options.out);
    std::cout << "wrote network (" << cnet.buses.size() << " buses, " << cnet.branches.size()
              << " branches, " << cnet.measurement_plan.size() << " measurement keys) to "
              << options.out << "\n";
    Manifest manifest(common, "export-network");
    if (!options.network.builtin) manifest.input(options.network.path);
    manifest.config({{"config", net::to_string(config)}});
    manifest.output(options.out);
    manifest.write(options.out);
    return 0;
}

}  // namespace rgate::cli
