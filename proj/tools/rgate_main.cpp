#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "rgate/util.hpp"

namespace {

using rgate::cli::CommonOptions;

void add_network_flags(CLI::App* cmd, rgate::cli::NetworkSource& source, bool with_config = true) {
    auto* builtin = cmd->add_flag("--builtin", source.builtin, "use the built-in 3-substation network");
    auto* path = cmd->add_option("--network", source.path, "network JSON file");
    path->excludes(builtin);
    if (with_config)
        cmd->add_option("--config", source.config, "operating configuration (normal, c1..c6)");
}

std::uint64_t seed_fallback() {
    if (const char* env = std::getenv("RG_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw rgate::DataError("RG_SEED is not a valid unsigned integer");
        }
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rgate: substation-edge bad-data detection gateway"};
    app.require_subcommand(1);

    CommonOptions common;
    for (int i = 0; i < argc; ++i) common.argv.emplace_back(argv[i]);
    bool seed_given = false;
    app.add_option("--seed", common.seed, "master RNG seed (default $RG_SEED or 1)")
        ->each([&seed_given](const std::string&) { seed_given = true; });
    app.add_option("--threads", common.threads, "worker threads (default: hardware)");

    rgate::cli::GenDataOptions gen;
    auto* cmd_gen = app.add_subcommand("gen-data", "generate a labeled snapshot dataset");
    add_network_flags(cmd_gen, gen.network);
    cmd_gen->add_option("--n", gen.n, "number of snapshots")->required();
    cmd_gen->add_option("--corrupt", gen.corrupt_fraction, "fraction of corrupt snapshots");
    cmd_gen->add_option("--reading-fraction", gen.reading_fraction,
                        "fraction of readings corrupted per corrupt snapshot");
    cmd_gen->add_option("--factor-range", gen.factor_range, "corruption factor range lo hi")
        ->expected(2);
    cmd_gen->add_option("--exclusion-band", gen.exclusion_band,
                        "factor band around 1.0 never drawn (lo hi; use 1 1 to disable)")
        ->expected(2);
    cmd_gen->add_option("--noise", gen.noise, "uniform measurement noise level (e.g. 0.005)");
    cmd_gen->add_option("--out", gen.out, "output JSONL path")->required();

    rgate::cli::TrainOptions train;
    auto* cmd_train = app.add_subcommand("train", "train the GBDT classifier");
    add_network_flags(cmd_train, train.network, false);
    cmd_train->add_option("--data", train.data, "training dataset (JSONL)")->required();
    cmd_train->add_option("--out", train.out, "model output path")->required();
    cmd_train->add_option("--grid", train.grid, "search mode: paper, stage1 or none");
    cmd_train->add_option("--folds", train.folds, "cross-validation folds");
    cmd_train->add_option("--n-estimators", train.n_estimators, "boosting stages (--grid none)");
    cmd_train->add_option("--max-depth", train.max_depth, "tree depth limit (--grid none)");
    cmd_train->add_option("--lr", train.learning_rate, "learning rate (--grid none)");
    cmd_train->add_option("--min-samples-leaf", train.min_samples_leaf, "leaf size floor");
    cmd_train->add_option("--subsample", train.subsample, "per-stage row subsample in (0,1]");
    cmd_train->add_option("--decision-threshold", train.decision_threshold,
                          "probability threshold for the suspicious class");
    cmd_train->add_option("--cv-out", train.cv_out, "CV table CSV path");

    rgate::cli::EvaluateOptions eval;
    auto* cmd_eval = app.add_subcommand("evaluate", "score a model against labeled datasets");
    add_network_flags(cmd_eval, eval.network, false);
    cmd_eval->add_option("--model", eval.model, "model file")->required();
    cmd_eval->add_option("--data", eval.data, "labeled dataset files (repeatable)");
    cmd_eval->add_option("--config", eval.configs, "configs to generate when no --data given");
    cmd_eval->add_option("--noise", eval.noise_levels, "noise levels for the generated sweep");
    cmd_eval->add_option("--n", eval.n, "snapshots per generated dataset");
    cmd_eval->add_option("--corrupt", eval.corrupt_fraction, "corrupt fraction for generation");
    cmd_eval->add_option("--bdd-sample", eval.bdd_sample,
                         "sample size for the BDD-alone sweep (0 = all datapoints)");
    cmd_eval->add_option("--audit-rate", eval.audit_rate, "pipeline audit rate");
    double eval_threshold = -1.0;
    cmd_eval->add_option("--decision-threshold", eval_threshold,
                         "override the model decision threshold");
    cmd_eval->add_option("--out", eval.out, "CSV report path");

    rgate::cli::ReplayOptions replay;
    auto* cmd_replay = app.add_subcommand("replay", "stream a dataset through the live pipeline");
    add_network_flags(cmd_replay, replay.network);
    cmd_replay->add_option("--model", replay.model, "model file")->required();
    cmd_replay->add_option("--data", replay.data, "dataset to replay")->required();
    cmd_replay->add_option("--mode", replay.mode, "udp or inproc");
    cmd_replay->add_option("--host", replay.host, "replay target host");
    cmd_replay->add_option("--port", replay.port, "replay target UDP port (0 = ephemeral)");
    cmd_replay->add_option("--event-mode", replay.event_mode,
                           "fast-transmission schedule: none or all (every IED)");
    cmd_replay->add_option("--time-scale", replay.time_scale,
                           "simulated us per wall us (0 = as fast as possible)");
    cmd_replay->add_option("--repeats", replay.repeats, "number of passes over the dataset");
    cmd_replay->add_option("--audit-rate", replay.audit_rate, "pipeline audit rate");
    cmd_replay->add_option("--out", replay.out, "report JSON path");

    rgate::cli::BenchOptions bench;
    auto* cmd_bench = app.add_subcommand("bench", "latency/throughput of the detection paths");
    add_network_flags(cmd_bench, bench.network);
    cmd_bench->add_option("--model", bench.model, "model file")->required();
    cmd_bench->add_option("--data", bench.data, "workload dataset (generated when omitted)");
    cmd_bench->add_option("--mode", bench.mode, "ml_only, bdd_only, combined or all");
    cmd_bench->add_option("--n", bench.n, "workload size when generating");
    cmd_bench->add_option("--corrupt", bench.corrupt_fraction, "workload corrupt fraction");
    cmd_bench->add_option("--noise", bench.noise, "workload noise level");
    cmd_bench->add_option("--out", bench.out, "bench table JSON path");

    rgate::cli::ExportNetworkOptions export_net;
    auto* cmd_export = app.add_subcommand("export-network",
                                          "write a network model (with impedances) to JSON");
    add_network_flags(cmd_export, export_net.network);
    cmd_export->add_option("--out", export_net.out, "output JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (!seed_given) common.seed = seed_fallback();
        if (eval_threshold >= 0.0) eval.decision_threshold = eval_threshold;
        if (cmd_gen->parsed()) return rgate::cli::cmd_gen_data(common, gen);
        if (cmd_train->parsed()) return rgate::cli::cmd_train(common, train);
        if (cmd_eval->parsed()) return rgate::cli::cmd_evaluate(common, eval);
        if (cmd_replay->parsed()) return rgate::cli::cmd_replay(common, replay);
        if (cmd_bench->parsed()) return rgate::cli::cmd_bench(common, bench);
        if (cmd_export->parsed()) return rgate::cli::cmd_export_network(common, export_net);
    } catch (const rgate::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
