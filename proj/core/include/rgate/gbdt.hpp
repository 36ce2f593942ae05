#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rgate/network.hpp"

namespace rgate::ml {

/// Feature layout fitted at training time: the ordered measurement
/// keys plus per-feature z-score parameters. Features with zero
/// variance on the training set are dropped and recorded.
struct FeatureSchema {
    std::vector<net::MeasurementKey> keys;
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<net::MeasurementKey> dropped;

    std::size_t size() const { return keys.size(); }
};

/// Controls how a snapshot missing some schema keys is vectorized.
/// De-energized elements stop reporting, so the pipeline treats their
/// readings as zero (what a dead bay physically measures); strict mode
/// keeps missing keys an error.
enum class MissingKeyPolicy { error, zero_fill };

struct Hyperparams {
    int n_estimators = 250;
    double learning_rate = 0.1;
    int max_depth = 3;
    int min_samples_leaf = 5;
    double subsample = 1.0;
};

/// Binary regression tree over normalized features; nodes are stored
/// in a flat vector, index 0 is the root.
struct RegressionTree {
    struct Node {
        std::int32_t feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        double value = 0.0;  // leaf weight
    };
    std::vector<Node> nodes;

    double predict(std::span<const double> features) const;
    int depth() const;
};

/// Gradient boosted trees for binary classification on logistic loss.
/// Positive class = corrupt/suspicious snapshot.
struct GbdtModel {
    FeatureSchema schema;
    double initial_score = 0.0;  // prior log-odds
    double learning_rate = 0.1;
    double decision_threshold = 0.5;  // on probability
    Hyperparams hyperparams;
    std::vector<RegressionTree> trees;

    /// Normalized feature vector for a snapshot, resolved by key.
    /// Throws DataError on extra keys, and on missing keys under the
    /// strict policy.
    std::vector<double> vectorize(const net::NetworkModel& net,
                                  const net::MeasurementSnapshot& snapshot,
                                  MissingKeyPolicy policy = MissingKeyPolicy::error) const;

    /// Probability that the feature vector is corrupt.
    double score_features(std::span<const double> normalized) const;

    /// sigmoid(initial_score + lr * sum of tree outputs).
    double predict_score(const net::NetworkModel& net, const net::MeasurementSnapshot& snapshot,
                         MissingKeyPolicy policy = MissingKeyPolicy::error) const;

    bool classify(double score) const { return score >= decision_threshold; }
};

/// One training example: the active-plan snapshot and its label.
struct TrainingRow {
    net::MeasurementSnapshot snapshot;
    bool corrupt = false;
};

/// Trains a GBDT on logistic loss. The feature schema is fitted on the
/// first row's key set; all rows must share it. Throws DataError for
/// empty or single-class data.
GbdtModel train(const net::NetworkModel& net, const std::vector<TrainingRow>& data,
                const Hyperparams& hp, std::uint64_t seed);

/// The grid of the two hyperparameter search stages.
struct GridSpec {
    std::vector<int> n_estimators;
    std::vector<int> max_depth;
    std::vector<double> learning_rate;

    /// First-stage search space used in the evaluation study.
    static GridSpec paper_stage1();
    /// Second-stage refinement of n_estimators in [200, 300] step 10.
    static GridSpec paper_stage2(int best_depth, double best_lr);
};

struct CvCell {
    Hyperparams hp;
    double mean_f1 = 0.0;
    std::vector<double> fold_f1;
};

struct GridSearchResult {
    Hyperparams best;
    double best_mean_f1 = 0.0;
    std::vector<CvCell> table;
};

/// Stratified k-fold cross-validation over the grid, selecting the
/// point with the highest mean validation F1 (ties: smaller
/// n_estimators, then smaller max_depth, then smaller learning_rate).
/// Boosting prefixes are reused, so the n_estimators axis costs one
/// training per (depth, lr) pair per fold.
GridSearchResult grid_search(const net::NetworkModel& net, const std::vector<TrainingRow>& data,
                             const GridSpec& grid, int k_folds, std::uint64_t seed,
                             int threads = 1);

/// Versioned JSON container with a CRC-32 over the model payload;
/// load(save(m)) reproduces bit-identical predictions.
void save_model(const GbdtModel& model, const std::string& path);
GbdtModel load_model(const std::string& path);
std::string model_to_json_text(const GbdtModel& model);
GbdtModel model_from_json_text(const std::string& text);

}  // namespace rgate::ml
