#include "rgate/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "rgate/util.hpp"

namespace rgate::ml {

using net::MeasurementKey;
using net::MeasurementSnapshot;
using net::NetworkModel;

namespace {

double sigmoid(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

double RegressionTree::predict(std::span<const double> features) const {
    int idx = 0;
    while (true) {
        const Node& node = nodes[static_cast<std::size_t>(idx)];
        if (node.feature < 0) return node.value;
        idx = features[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                 : node.right;
    }
}

int RegressionTree::depth() const {
    // Leaf-only tree has depth 0.
    std::vector<std::pair<int, int>> stack{{0, 0}};
    int deepest = 0;
    while (!stack.empty()) {
        auto [idx, d] = stack.back();
        stack.pop_back();
        const Node& node = nodes[static_cast<std::size_t>(idx)];
        if (node.feature < 0) {
            deepest = std::max(deepest, d);
        } else {
            stack.push_back({node.left, d + 1});
            stack.push_back({node.right, d + 1});
        }
    }
    return deepest;
}

std::vector<double> GbdtModel::vectorize(const NetworkModel& net,
                                         const MeasurementSnapshot& snapshot,
                                         MissingKeyPolicy policy) const {
    std::unordered_map<std::string, double> by_key;
    by_key.reserve(snapshot.size());
    for (std::size_t i = 0; i < snapshot.size(); ++i) {
        if (snapshot.key_ids[i] >= net.measurement_plan.size())
            throw DataError("snapshot key id out of range for this network");
        by_key[net.measurement_plan[snapshot.key_ids[i]].to_string()] = snapshot.values[i];
    }

    std::vector<double> out(schema.size());
    std::size_t used = 0;
    for (std::size_t f = 0; f < schema.size(); ++f) {
        const std::string name = schema.keys[f].to_string();
        const auto it = by_key.find(name);
        double raw;
        if (it != by_key.end()) {
            raw = it->second;
            ++used;
        } else if (policy == MissingKeyPolicy::zero_fill) {
            raw = 0.0;  // a de-energized element reads zero
        } else {
            throw DataError("snapshot is missing schema key " + name);
        }
        out[f] = (raw - schema.mean[f]) / schema.stddev[f];
    }
    // Keys that are neither schema features nor recorded zero-variance
    // drops mean the snapshot comes from a different plan.
    std::size_t dropped_seen = 0;
    for (const auto& key : schema.dropped) {
        if (by_key.count(key.to_string())) ++dropped_seen;
    }
    if (used + dropped_seen != by_key.size()) {
        throw DataError("snapshot carries keys outside the model schema");
    }
    return out;
}

double GbdtModel::score_features(std::span<const double> normalized) const {
    double f = initial_score;
    for (const auto& tree : trees) f += learning_rate * tree.predict(normalized);
    return sigmoid(f);
}

double GbdtModel::predict_score(const NetworkModel& net, const MeasurementSnapshot& snapshot,
                                MissingKeyPolicy policy) const {
    const auto features = vectorize(net, snapshot, policy);
    return score_features(features);
}

namespace {

FeatureSchema fit_schema(const NetworkModel& net, const std::vector<TrainingRow>& data) {
    const auto& first = data.front().snapshot;
    for (const auto& row : data) {
        if (row.snapshot.key_ids != first.key_ids)
            throw DataError("training rows disagree on their measurement keys");
    }
    const std::size_t n = data.size();
    FeatureSchema schema;
    for (std::size_t k = 0; k < first.key_ids.size(); ++k) {
        if (first.key_ids[k] >= net.measurement_plan.size())
            throw DataError("training snapshot key id out of range for this network");
        const MeasurementKey& key = net.measurement_plan[first.key_ids[k]];

        // Accumulate in value order so the fitted schema does not
        // depend on row ordering.
        std::vector<double> values(n);
        for (std::size_t r = 0; r < n; ++r) values[r] = data[r].snapshot.values[k];
        std::sort(values.begin(), values.end());
        double sum = 0.0;
        for (double v : values) sum += v;
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(n));

        if (sd == 0.0) {
            schema.dropped.push_back(key);
        } else {
            schema.keys.push_back(key);
            schema.mean.push_back(mean);
            schema.stddev.push_back(sd);
        }
    }
    if (schema.keys.empty()) throw DataError("all features are degenerate after normalization");
    return schema;
}

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// One frontier node during tree growth: per-feature row lists kept in
// ascending feature-value order.
struct GrowNode {
    int node_index = -1;
    int depth = 0;
    std::vector<std::vector<std::int32_t>> order;
    double sum_grad = 0.0;
    double sum_hess = 0.0;
};

}  // namespace

GbdtModel train(const NetworkModel& net, const std::vector<TrainingRow>& data,
                const Hyperparams& hp, std::uint64_t seed) {
    if (data.empty()) throw DataError("training data is empty");
    if (hp.n_estimators < 0) throw DataError("n_estimators must be >= 0");
    if (hp.learning_rate < 0.0) throw DataError("learning_rate must be >= 0");
    if (hp.max_depth < 1) throw DataError("max_depth must be >= 1");
    if (!(hp.subsample > 0.0 && hp.subsample <= 1.0))
        throw DataError("subsample must lie in (0, 1]");

    std::size_t positives = 0;
    for (const auto& row : data) positives += row.corrupt ? 1 : 0;
    if (positives == 0 || positives == data.size())
        throw DataError("training data contains a single class");

    GbdtModel model;
    model.schema = fit_schema(net, data);
    model.learning_rate = hp.learning_rate;
    model.hyperparams = hp;

    const std::size_t n = data.size();
    const std::size_t n_features = model.schema.size();

    // Column-major normalized matrix.
    std::vector<std::size_t> slot(n_features);
    {
        std::unordered_map<std::string, std::size_t> pos;
        const auto& first = data.front().snapshot;
        for (std::size_t k = 0; k < first.key_ids.size(); ++k)
            pos[net.measurement_plan[first.key_ids[k]].to_string()] = k;
        for (std::size_t f = 0; f < n_features; ++f)
            slot[f] = pos.at(model.schema.keys[f].to_string());
    }
    std::vector<std::vector<double>> col(n_features, std::vector<double>(n));
    for (std::size_t f = 0; f < n_features; ++f) {
        const double mu = model.schema.mean[f];
        const double sd = model.schema.stddev[f];
        for (std::size_t r = 0; r < n; ++r)
            col[f][r] = (data[r].snapshot.values[slot[f]] - mu) / sd;
    }
    std::vector<std::vector<std::int32_t>> global_order(n_features);
    for (std::size_t f = 0; f < n_features; ++f) {
        auto& ord = global_order[f];
        ord.resize(n);
        std::iota(ord.begin(), ord.end(), 0);
        const auto& c = col[f];
        std::stable_sort(ord.begin(), ord.end(),
                         [&c](std::int32_t a, std::int32_t b) { return c[a] < c[b]; });
    }

    const double prior = static_cast<double>(positives) / static_cast<double>(n);
    model.initial_score = std::log(prior / (1.0 - prior));

    std::vector<double> score(n, model.initial_score);
    std::vector<double> grad(n), hess(n);
    std::vector<std::uint8_t> in_sample(n, 1);

    const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, hp.min_samples_leaf));

    for (int stage = 0; stage < hp.n_estimators; ++stage) {
        for (std::size_t r = 0; r < n; ++r) {
            const double p = sigmoid(score[r]);
            grad[r] = (data[r].corrupt ? 1.0 : 0.0) - p;
            hess[r] = std::max(p * (1.0 - p), 1e-12);
        }

        // Per-stage row subsample; the RNG stream is derived from
        // (seed, stage) so earlier stages are unaffected by later ones.
        if (hp.subsample < 1.0) {
            std::fill(in_sample.begin(), in_sample.end(), 0);
            util::Rng rng(util::derive_seed(seed, static_cast<std::uint64_t>(stage)));
            const std::size_t k = std::max<std::size_t>(
                1, static_cast<std::size_t>(util::round_half_up(hp.subsample * static_cast<double>(n))));
            for (std::size_t idx : rng.sample_indices(n, k)) in_sample[idx] = 1;
        }

        RegressionTree tree;
        // Root node lists: sampled rows in presorted order.
        GrowNode root;
        root.depth = 0;
        root.order.resize(n_features);
        for (std::size_t f = 0; f < n_features; ++f) {
            auto& ord = root.order[f];
            if (hp.subsample >= 1.0) {
                ord = global_order[f];
            } else {
                ord.reserve(n);
                for (std::int32_t r : global_order[f])
                    if (in_sample[static_cast<std::size_t>(r)]) ord.push_back(r);
            }
        }
        for (std::int32_t r : root.order[0]) {
            root.sum_grad += grad[static_cast<std::size_t>(r)];
            root.sum_hess += hess[static_cast<std::size_t>(r)];
        }

        tree.nodes.emplace_back();
        root.node_index = 0;

        std::vector<GrowNode> frontier;
        frontier.push_back(std::move(root));
        while (!frontier.empty()) {
            GrowNode node = std::move(frontier.back());
            frontier.pop_back();
            const std::size_t node_rows = node.order[0].size();

            SplitChoice best;
            if (node.depth < hp.max_depth && node_rows >= 2 * min_leaf) {
                const double parent_score =
                    node.sum_grad * node.sum_grad / static_cast<double>(node_rows);
                for (std::size_t f = 0; f < n_features; ++f) {
                    const auto& ord = node.order[f];
                    const auto& values = col[f];
                    double left_sum = 0.0;
                    for (std::size_t i = 0; i + 1 < node_rows; ++i) {
                        const auto row = static_cast<std::size_t>(ord[i]);
                        left_sum += grad[row];
                        const double v = values[row];
                        const double v_next = values[static_cast<std::size_t>(ord[i + 1])];
                        if (v == v_next) continue;
                        const std::size_t nl = i + 1;
                        const std::size_t nr = node_rows - nl;
                        if (nl < min_leaf || nr < min_leaf) continue;
                        const double right_sum = node.sum_grad - left_sum;
                        // Variance reduction of the residual fit. Ties
                        // keep the first candidate in scan order
                        // (lowest feature, lowest threshold).
                        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                                            right_sum * right_sum / static_cast<double>(nr) -
                                            parent_score;
                        if (gain > 1e-12 && (!best.found || gain > best.gain)) {
                            best.found = true;
                            best.feature = static_cast<int>(f);
                            best.threshold = 0.5 * (v + v_next);
                            best.gain = gain;
                        }
                    }
                }
            }

            auto& stored = tree.nodes[static_cast<std::size_t>(node.node_index)];
            if (!best.found) {
                // One Newton step on the logistic loss per leaf.
                stored.feature = -1;
                stored.value = node.sum_grad / node.sum_hess;
                continue;
            }
            stored.feature = best.feature;
            stored.threshold = best.threshold;

            GrowNode left, right;
            left.depth = right.depth = node.depth + 1;
            left.order.resize(n_features);
            right.order.resize(n_features);
            const auto& split_col = col[static_cast<std::size_t>(best.feature)];
            for (std::size_t f = 0; f < n_features; ++f) {
                left.order[f].reserve(node.order[f].size());
                right.order[f].reserve(node.order[f].size());
                for (std::int32_t r : node.order[f]) {
                    if (split_col[static_cast<std::size_t>(r)] <= best.threshold)
                        left.order[f].push_back(r);
                    else
                        right.order[f].push_back(r);
                }
            }
            for (std::int32_t r : left.order[0]) {
                left.sum_grad += grad[static_cast<std::size_t>(r)];
                left.sum_hess += hess[static_cast<std::size_t>(r)];
            }
            right.sum_grad = node.sum_grad - left.sum_grad;
            right.sum_hess = node.sum_hess - left.sum_hess;

            left.node_index = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            right.node_index = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes[static_cast<std::size_t>(node.node_index)].left = left.node_index;
            tree.nodes[static_cast<std::size_t>(node.node_index)].right = right.node_index;
            frontier.push_back(std::move(left));
            frontier.push_back(std::move(right));
        }

        // Update scores on all rows, sampled or not.
        std::vector<double> features(n_features);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t f = 0; f < n_features; ++f) features[f] = col[f][r];
            score[r] += hp.learning_rate * tree.predict(features);
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

GridSpec GridSpec::paper_stage1() {
    GridSpec g;
    g.n_estimators = {100, 200, 250, 300, 350, 400, 500};
    g.max_depth = {1, 2, 3, 4, 5};
    g.learning_rate = {0.001, 0.01, 0.1, 1.0};
    return g;
}

GridSpec GridSpec::paper_stage2(int best_depth, double best_lr) {
    GridSpec g;
    for (int n = 200; n <= 300; n += 10) g.n_estimators.push_back(n);
    g.max_depth = {best_depth};
    g.learning_rate = {best_lr};
    return g;
}

namespace {

double f1_score(std::size_t tp, std::size_t fp, std::size_t fn) {
    const double denom = static_cast<double>(2 * tp + fp + fn);
    if (denom == 0.0) return 0.0;
    return 2.0 * static_cast<double>(tp) / denom;
}

}  // namespace

GridSearchResult grid_search(const NetworkModel& net, const std::vector<TrainingRow>& data,
                             const GridSpec& grid, int k_folds, std::uint64_t seed, int threads) {
    if (grid.n_estimators.empty() || grid.max_depth.empty() || grid.learning_rate.empty())
        throw DataError("hyperparameter grid is empty");
    if (k_folds < 2) throw DataError("k_folds must be >= 2");
    if (data.size() < static_cast<std::size_t>(2 * k_folds))
        throw DataError("not enough rows for the requested fold count");

    // Stratified fold assignment: shuffle within each class, deal
    // round-robin.
    std::vector<std::size_t> pos_rows, neg_rows;
    for (std::size_t i = 0; i < data.size(); ++i)
        (data[i].corrupt ? pos_rows : neg_rows).push_back(i);
    if (pos_rows.empty() || neg_rows.empty())
        throw DataError("training data contains a single class");
    {
        util::Rng rng(util::derive_seed(seed, 0xF01D5));
        rng.shuffle(pos_rows);
        rng.shuffle(neg_rows);
    }
    std::vector<int> fold_of(data.size());
    for (std::size_t i = 0; i < pos_rows.size(); ++i)
        fold_of[pos_rows[i]] = static_cast<int>(i % static_cast<std::size_t>(k_folds));
    for (std::size_t i = 0; i < neg_rows.size(); ++i)
        fold_of[neg_rows[i]] = static_cast<int>(i % static_cast<std::size_t>(k_folds));
    for (int f = 0; f < k_folds; ++f) {
        std::size_t val_pos = 0, val_neg = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (fold_of[i] != f) continue;
            (data[i].corrupt ? val_pos : val_neg)++;
        }
        if (val_pos == 0 || val_neg == 0)
            throw DataError("fold " + std::to_string(f) + " contains a single class");
    }

    std::vector<int> sorted_n_est = grid.n_estimators;
    std::sort(sorted_n_est.begin(), sorted_n_est.end());
    const int max_n_est = sorted_n_est.back();

    // One training run per (depth, lr, fold); all n_estimators values
    // are prefix evaluations of that run.
    struct Task {
        int depth;
        double lr;
        int fold;
    };
    std::vector<Task> tasks;
    for (int depth : grid.max_depth)
        for (double lr : grid.learning_rate)
            for (int fold = 0; fold < k_folds; ++fold) tasks.push_back({depth, lr, fold});

    // f1[(depth,lr) group][n_est index][fold]
    const std::size_t groups = grid.max_depth.size() * grid.learning_rate.size();
    std::vector<std::vector<std::vector<double>>> f1(
        groups, std::vector<std::vector<double>>(sorted_n_est.size(),
                                                 std::vector<double>(static_cast<std::size_t>(k_folds), 0.0)));

    auto group_index = [&](int depth, double lr) {
        std::size_t di = 0, li = 0;
        for (std::size_t i = 0; i < grid.max_depth.size(); ++i)
            if (grid.max_depth[i] == depth) di = i;
        for (std::size_t i = 0; i < grid.learning_rate.size(); ++i)
            if (grid.learning_rate[i] == lr) li = i;
        return di * grid.learning_rate.size() + li;
    };

    util::parallel_for(tasks.size(), static_cast<std::size_t>(std::max(1, threads)),
                       [&](std::size_t ti) {
        const Task& task = tasks[ti];
        std::vector<TrainingRow> train_rows;
        std::vector<std::size_t> val_rows;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (fold_of[i] == task.fold) val_rows.push_back(i);
            else train_rows.push_back(data[i]);
        }
        Hyperparams hp;
        hp.n_estimators = max_n_est;
        hp.max_depth = task.depth;
        hp.learning_rate = task.lr;
        const GbdtModel model =
            train(net, train_rows, hp, util::derive_seed(seed, 1000 + static_cast<std::uint64_t>(task.fold)));

        // Staged validation: confusion at every prefix in the grid.
        std::vector<std::vector<double>> val_features;
        val_features.reserve(val_rows.size());
        for (std::size_t i : val_rows)
            val_features.push_back(model.vectorize(net, data[i].snapshot));
        std::vector<double> f_val(val_rows.size(), model.initial_score);

        const std::size_t gi = group_index(task.depth, task.lr);
        std::size_t next_prefix = 0;
        for (int t = 0; t <= max_n_est; ++t) {
            while (next_prefix < sorted_n_est.size() && sorted_n_est[next_prefix] == t) {
                std::size_t tp = 0, fp = 0, fn = 0;
                for (std::size_t i = 0; i < val_rows.size(); ++i) {
                    const bool flagged = sigmoid(f_val[i]) >= model.decision_threshold;
                    const bool truth = data[val_rows[i]].corrupt;
                    if (flagged && truth) ++tp;
                    else if (flagged && !truth) ++fp;
                    else if (!flagged && truth) ++fn;
                }
                f1[gi][next_prefix][static_cast<std::size_t>(task.fold)] = f1_score(tp, fp, fn);
                ++next_prefix;
            }
            if (t == max_n_est) break;
            const auto& tree = model.trees[static_cast<std::size_t>(t)];
            for (std::size_t i = 0; i < val_rows.size(); ++i)
                f_val[i] += model.learning_rate * tree.predict(val_features[i]);
        }
    });

    GridSearchResult result;
    bool have_best = false;
    for (std::size_t di = 0; di < grid.max_depth.size(); ++di) {
        for (std::size_t li = 0; li < grid.learning_rate.size(); ++li) {
            const std::size_t gi = di * grid.learning_rate.size() + li;
            for (std::size_t ni = 0; ni < sorted_n_est.size(); ++ni) {
                CvCell cell;
                cell.hp.n_estimators = sorted_n_est[ni];
                cell.hp.max_depth = grid.max_depth[di];
                cell.hp.learning_rate = grid.learning_rate[li];
                cell.fold_f1 = f1[gi][ni];
                cell.mean_f1 = std::accumulate(cell.fold_f1.begin(), cell.fold_f1.end(), 0.0) /
                               static_cast<double>(k_folds);
                result.table.push_back(cell);

                const auto better = [&](const CvCell& a) {
                    if (a.mean_f1 != result.best_mean_f1)
                        return a.mean_f1 > result.best_mean_f1;
                    if (a.hp.n_estimators != result.best.n_estimators)
                        return a.hp.n_estimators < result.best.n_estimators;
                    if (a.hp.max_depth != result.best.max_depth)
                        return a.hp.max_depth < result.best.max_depth;
                    return a.hp.learning_rate < result.best.learning_rate;
                };
                if (!have_best || better(cell)) {
                    have_best = true;
                    result.best = cell.hp;
                    result.best_mean_f1 = cell.mean_f1;
                }
            }
        }
    }
    return result;
}

}  // namespace rgate::ml
