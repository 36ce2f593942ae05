#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rgate::cli {

/// Options shared by every subcommand.
struct CommonOptions {
    std::uint64_t seed = 1;  // --seed, falling back to $RG_SEED
    int threads = 0;         // 0 = hardware concurrency
    std::vector<std::string> argv;

    int effective_threads() const;
};

struct NetworkSource {
    bool builtin = false;
    std::string path;  // network JSON when not builtin
    std::string config = "normal";
};

struct GenDataOptions {
    NetworkSource network;
    std::size_t n = 0;
    double corrupt_fraction = 0.2;
    double reading_fraction = 0.3;
    std::vector<double> factor_range{0.7, 1.3};
    std::vector<double> exclusion_band{0.98, 1.02};
    double noise = 0.0;
    std::string out;
};

struct TrainOptions {
    NetworkSource network;
    std::string data;
    std::string out;
    std::string grid = "paper";  // paper | stage1 | none
    int folds = 5;
    double decision_threshold = 0.5;
    // Direct hyperparameters for --grid none.
    int n_estimators = 250;
    int max_depth = 3;
    double learning_rate = 0.1;
    int min_samples_leaf = 5;
    double subsample = 1.0;
    std::string cv_out;  // defaults to <out>.cv.csv
};

struct EvaluateOptions {
    NetworkSource network;  // config ignored; per-dataset configs apply
    std::string model;
    std::vector<std::string> data;  // pre-generated datasets
    // On-the-fly sweep generation (used when data is empty).
    std::vector<std::string> configs;
    std::vector<double> noise_levels;
    std::size_t n = 2500;
    double corrupt_fraction = 0.2;
    std::size_t bdd_sample = 0;  // 0 = all datapoints
    double audit_rate = 0.01;
    std::optional<double> decision_threshold;
    std::string out;  // CSV
};

struct ReplayOptions {
    NetworkSource network;
    std::string model;
    std::string data;
    std::string mode = "udp";  // udp | inproc
    std::string host = "127.0.0.1";
    int port = 47620;
    std::string event_mode = "none";  // none | all
    double time_scale = 200.0;        // simulated us per wall us
    int repeats = 1;
    double audit_rate = 0.01;
    std::string out;  // report JSON
};

struct BenchOptions {
    NetworkSource network;
    std::string model;
    std::string data;  // optional pre-generated workload
    std::string mode = "all";
    std::size_t n = 500;
    double corrupt_fraction = 0.2;
    double noise = 0.005;
    std::string out;  // table JSON
};

struct ExportNetworkOptions {
    NetworkSource network;
    std::string out;
};

int cmd_gen_data(const CommonOptions& common, const GenDataOptions& options);
int cmd_train(const CommonOptions& common, const TrainOptions& options);
int cmd_evaluate(const CommonOptions& common, const EvaluateOptions& options);
int cmd_replay(const CommonOptions& common, const ReplayOptions& options);
int cmd_bench(const CommonOptions& common, const BenchOptions& options);
int cmd_export_network(const CommonOptions& common, const ExportNetworkOptions& options);

}  // namespace rgate::cli
