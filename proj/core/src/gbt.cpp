#include "matchflow/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "matchflow/errors.hpp"

namespace matchflow::gbt {
namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Per-feature histogram layout: boundaries are strictly increasing cut
// values lying between distinct data values; bin code of x = number of
// boundaries strictly below x, so code(x) <= b  <=>  x <= boundaries[b].
struct BinnedData {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::vector<double>> boundaries;  // per feature
    std::vector<std::uint16_t> codes;             // rows*cols, row-major

    std::uint16_t code(std::size_t r, std::size_t c) const { return codes[r * cols + c]; }
};

std::vector<double> make_boundaries(std::vector<double> values, int max_bins) {
    std::sort(values.begin(), values.end());
    std::vector<double> distinct;
    distinct.reserve(values.size());
    for (double v : values)
        if (distinct.empty() || distinct.back() != v) distinct.push_back(v);

    std::vector<double> bounds;
    if (distinct.size() <= 1) return bounds;

    if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
        bounds.reserve(distinct.size() - 1);
        for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
            bounds.push_back(0.5 * (distinct[i] + distinct[i + 1]));
        return bounds;
    }

    // Equal-frequency cuts, snapped to midpoints between distinct values.
    const std::size_t n = values.size();
    std::size_t next_distinct = 0;
    std::vector<std::size_t> distinct_counts(distinct.size(), 0);
    for (double v : values) {
        while (distinct[next_distinct] != v) ++next_distinct;
        ++distinct_counts[next_distinct];
    }

    double cum = 0.0;
    int emitted = 0;
    const double per_bin = static_cast<double>(n) / max_bins;
    for (std::size_t i = 0; i + 1 < distinct.size() && emitted < max_bins - 1; ++i) {
        cum += static_cast<double>(distinct_counts[i]);
        if (cum >= per_bin * (emitted + 1)) {
            bounds.push_back(0.5 * (distinct[i] + distinct[i + 1]));
            ++emitted;
        }
    }
    return bounds;
}

BinnedData bin_matrix(const NumericMatrix& matrix, int max_bins) {
    BinnedData binned;
    binned.rows = matrix.rows;
    binned.cols = matrix.cols;
    binned.boundaries.resize(matrix.cols);
    binned.codes.assign(matrix.rows * matrix.cols, 0);

    std::vector<double> column(matrix.rows);
    for (std::size_t c = 0; c < matrix.cols; ++c) {
        for (std::size_t r = 0; r < matrix.rows; ++r) column[r] = matrix.at(r, c);
        binned.boundaries[c] = make_boundaries(column, max_bins);
        const auto& bounds = binned.boundaries[c];
        for (std::size_t r = 0; r < matrix.rows; ++r) {
            const double x = matrix.at(r, c);
            const auto it = std::lower_bound(bounds.begin(), bounds.end(), x);
            binned.codes[r * matrix.cols + c] =
                static_cast<std::uint16_t>(std::distance(bounds.begin(), it));
        }
    }
    return binned;
}

struct SplitChoice {
    bool found = false;
    double gain = 0.0;
    int feature = -1;
    int bin = -1;  // left = codes <= bin
    double threshold = 0.0;
    double g_left = 0.0, h_left = 0.0;
    double g_right = 0.0, h_right = 0.0;
};

struct GrowNode {
    std::vector<std::uint32_t> rows;
    double g_sum = 0.0;
    double h_sum = 0.0;
    int depth = 0;
    int node_id = 0;  // index into Tree::nodes
    SplitChoice best;
};

double leaf_objective_score(double g, double h, double lambda) {
    return g * g / (h + lambda);
}

SplitChoice best_split(const BinnedData& binned, const GrowNode& node,
                       std::span<const double> g, std::span<const double> h,
                       const GbtConfig& config) {
    SplitChoice best;
    if (node.rows.empty()) return best;
    const double parent_score = leaf_objective_score(node.g_sum, node.h_sum, config.lambda);

    std::vector<double> hist_g, hist_h;
    std::vector<std::uint32_t> hist_n;
    for (std::size_t c = 0; c < binned.cols; ++c) {
        const auto& bounds = binned.boundaries[c];
        if (bounds.empty()) continue;
        const std::size_t nbins = bounds.size() + 1;
        hist_g.assign(nbins, 0.0);
        hist_h.assign(nbins, 0.0);
        hist_n.assign(nbins, 0);
        for (std::uint32_t r : node.rows) {
            const std::uint16_t code = binned.code(r, c);
            hist_g[code] += g[r];
            hist_h[code] += h[r];
            ++hist_n[code];
        }

        double gl = 0.0, hl = 0.0;
        std::uint32_t nl = 0;
        for (std::size_t b = 0; b + 1 < nbins; ++b) {
            gl += hist_g[b];
            hl += hist_h[b];
            nl += hist_n[b];
            if (nl == 0) continue;
            if (nl == node.rows.size()) break;
            const double gr = node.g_sum - gl;
            const double hr = node.h_sum - hl;
            const double gain = 0.5 * (leaf_objective_score(gl, hl, config.lambda) +
                                       leaf_objective_score(gr, hr, config.lambda) -
                                       parent_score) -
                                config.gamma;
            const double threshold = bounds[b];
            const bool better =
                !best.found || gain > best.gain ||
                (gain == best.gain &&
                 (static_cast<int>(c) < best.feature ||
                  (static_cast<int>(c) == best.feature && threshold < best.threshold)));
            if (better) {
                best.found = true;
                best.gain = gain;
                best.feature = static_cast<int>(c);
                best.bin = static_cast<int>(b);
                best.threshold = threshold;
                best.g_left = gl;
                best.h_left = hl;
                best.g_right = gr;
                best.h_right = hr;
            }
        }
    }
    return best;
}

void finalize_leaf(Tree& tree, const GrowNode& node, double lambda) {
    TreeNode& n = tree.nodes[node.node_id];
    n.feature = -1;
    n.weight = -node.g_sum / (node.h_sum + lambda);
}

// Splits `node`, appends children to the tree, and returns them.
std::pair<GrowNode, GrowNode> apply_split(Tree& tree, BinnedData const& binned, GrowNode& node) {
    TreeNode& parent = tree.nodes[node.node_id];
    parent.feature = node.best.feature;
    parent.threshold = node.best.threshold;
    parent.gain = node.best.gain;

    GrowNode left, right;
    left.depth = right.depth = node.depth + 1;
    left.g_sum = node.best.g_left;
    left.h_sum = node.best.h_left;
    right.g_sum = node.best.g_right;
    right.h_sum = node.best.h_right;
    left.rows.reserve(node.rows.size());
    for (std::uint32_t r : node.rows) {
        if (binned.code(r, node.best.feature) <= node.best.bin) left.rows.push_back(r);
        else right.rows.push_back(r);
    }

    left.node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes.back().cover = left.h_sum;
    right.node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes.back().cover = right.h_sum;
    tree.nodes[node.node_id].left = left.node_id;
    tree.nodes[node.node_id].right = right.node_id;

    node.rows.clear();
    node.rows.shrink_to_fit();
    return {std::move(left), std::move(right)};
}

Tree grow_tree(const BinnedData& binned, std::span<const double> g, std::span<const double> h,
               const std::vector<std::uint32_t>& sample_rows, const GbtConfig& config) {
    Tree tree;
    tree.nodes.push_back({});

    GrowNode root;
    root.rows = sample_rows;
    root.node_id = 0;
    root.depth = 0;
    for (std::uint32_t r : root.rows) {
        root.g_sum += g[r];
        root.h_sum += h[r];
    }
    tree.nodes[0].cover = root.h_sum;

    int leaves = 1;
    auto can_split = [&](const GrowNode& n) {
        return n.depth < config.max_depth && n.best.found && n.best.gain > 0.0 &&
               leaves < config.max_leaves;
    };

    auto scan = [&](GrowNode& n) {
        if (n.depth < config.max_depth) n.best = best_split(binned, n, g, h, config);
    };

    if (config.growth == Growth::level_wise) {
        std::vector<GrowNode> frontier;
        scan(root);
        frontier.push_back(std::move(root));
        while (!frontier.empty()) {
            std::vector<GrowNode> next;
            for (GrowNode& node : frontier) {
                if (!can_split(node)) {
                    finalize_leaf(tree, node, config.lambda);
                    continue;
                }
                auto [left, right] = apply_split(tree, binned, node);
                ++leaves;
                scan(left);
                scan(right);
                next.push_back(std::move(left));
                next.push_back(std::move(right));
            }
            frontier = std::move(next);
        }
    } else {  // leaf_wise
        std::vector<GrowNode> open;
        scan(root);
        open.push_back(std::move(root));
        while (true) {
            int pick = -1;
            for (std::size_t i = 0; i < open.size(); ++i) {
                if (!can_split(open[i])) continue;
                if (pick < 0 || open[i].best.gain > open[pick].best.gain ||
                    (open[i].best.gain == open[pick].best.gain &&
                     open[i].node_id < open[pick].node_id))
                    pick = static_cast<int>(i);
            }
            if (pick < 0) break;
            GrowNode node = std::move(open[pick]);
            open.erase(open.begin() + pick);
            auto [left, right] = apply_split(tree, binned, node);
            ++leaves;
            scan(left);
            scan(right);
            open.push_back(std::move(left));
            open.push_back(std::move(right));
        }
        for (GrowNode& node : open) finalize_leaf(tree, node, config.lambda);
    }
    return tree;
}

void validate_config(const GbtConfig& config) {
    if (config.rounds < 0) throw DomainError("rounds must be >= 0");
    if (config.learning_rate <= 0.0) throw DomainError("learning_rate must be positive");
    if (config.max_depth < 1) throw DomainError("max_depth must be >= 1");
    if (config.max_leaves < 2) throw DomainError("max_leaves must be >= 2");
    if (config.lambda < 0.0) throw DomainError("lambda must be >= 0");
    if (config.gamma < 0.0) throw DomainError("gamma must be >= 0");
    if (config.bins < 2) throw DomainError("bins must be >= 2");
    if (!(config.subsample > 0.0 && config.subsample <= 1.0))
        throw DomainError("subsample must lie in (0, 1]");
}

}  // namespace

double Tree::value(std::span<const double> row) const {
    int node = 0;
    while (!nodes[node].is_leaf())
        node = row[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                                 : nodes[node].right;
    return nodes[node].weight;
}

int Tree::leaf_count() const {
    int count = 0;
    for (const auto& n : nodes) count += n.is_leaf() ? 1 : 0;
    return count;
}

int Tree::depth() const {
    // node depth by walking parents is not stored; recompute via BFS
    std::vector<int> depth(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].is_leaf()) continue;
        depth[nodes[i].left] = depth[i] + 1;
        depth[nodes[i].right] = depth[i] + 1;
        best = std::max({best, depth[nodes[i].left], depth[nodes[i].right]});
    }
    return best;
}

double GbtModel::margin(std::span<const double> row) const {
    double acc = base_score;
    for (const auto& tree : trees) acc += learning_rate * tree.value(row);
    return acc;
}

double GbtModel::predict_value(std::span<const double> row) const {
    const double m = margin(row);
    return objective == Objective::logistic ? sigmoid(m) : m;
}

std::vector<double> GbtModel::predict_margin(const NumericMatrix& matrix) const {
    if (!feature_names.empty() && matrix.cols != feature_names.size())
        throw DomainError("prediction matrix arity " + std::to_string(matrix.cols) +
                          " differs from model arity " + std::to_string(feature_names.size()));
    std::vector<double> out(matrix.rows);
    for (std::size_t r = 0; r < matrix.rows; ++r) out[r] = margin(matrix.row(r));
    return out;
}

std::vector<double> GbtModel::predict(const NumericMatrix& matrix) const {
    std::vector<double> out = predict_margin(matrix);
    if (objective == Objective::logistic)
        for (double& v : out) v = sigmoid(v);
    return out;
}

std::string GbtModel::to_json() const {
    nlohmann::json j;
    j["objective"] = objective == Objective::logistic ? "logistic" : "squared_error";
    j["base_score"] = base_score;
    j["learning_rate"] = learning_rate;
    j["feature_names"] = feature_names;
    nlohmann::json jtrees = nlohmann::json::array();
    for (const auto& tree : trees) {
        nlohmann::json jnodes = nlohmann::json::array();
        for (const auto& n : tree.nodes) {
            jnodes.push_back({{"feature", n.feature},
                              {"threshold", n.threshold},
                              {"left", n.left},
                              {"right", n.right},
                              {"weight", n.weight},
                              {"gain", n.gain},
                              {"cover", n.cover}});
        }
        jtrees.push_back({{"nodes", jnodes}});
    }
    j["trees"] = jtrees;
    return j.dump();
}

GbtModel GbtModel::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    GbtModel model;
    model.objective =
        j.at("objective").get<std::string>() == "logistic" ? Objective::logistic
                                                           : Objective::squared_error;
    model.base_score = j.at("base_score").get<double>();
    model.learning_rate = j.at("learning_rate").get<double>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    for (const auto& jtree : j.at("trees")) {
        Tree tree;
        for (const auto& jn : jtree.at("nodes")) {
            TreeNode n;
            n.feature = jn.at("feature").get<int>();
            n.threshold = jn.at("threshold").get<double>();
            n.left = jn.at("left").get<int>();
            n.right = jn.at("right").get<int>();
            n.weight = jn.at("weight").get<double>();
            n.gain = jn.at("gain").get<double>();
            n.cover = jn.at("cover").get<double>();
            tree.nodes.push_back(n);
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

TrainResult train_gbt(const NumericMatrix& matrix, std::span<const double> labels,
                      const GbtConfig& config, std::vector<std::string> feature_names) {
    validate_config(config);
    if (matrix.rows == 0 || matrix.cols == 0) throw DomainError("training matrix is empty");
    if (labels.size() != matrix.rows)
        throw DomainError("label count differs from matrix rows");
    for (double v : matrix.data)
        if (!std::isfinite(v)) throw DomainError("training matrix contains non-finite values");
    for (double y : labels) {
        if (!std::isfinite(y)) throw DomainError("labels contain non-finite values");
        if (config.objective == Objective::logistic && y != 0.0 && y != 1.0)
            throw DomainError("logistic labels must be 0 or 1");
    }
    if (!feature_names.empty() && feature_names.size() != matrix.cols)
        throw DomainError("feature name count differs from matrix arity");

    const std::size_t n = matrix.rows;
    TrainResult result;
    GbtModel& model = result.model;
    model.objective = config.objective;
    model.learning_rate = config.learning_rate;
    model.feature_names = std::move(feature_names);

    if (config.base_score) {
        model.base_score = *config.base_score;
    } else {
        double mean = 0.0;
        for (double y : labels) mean += y;
        mean /= static_cast<double>(n);
        if (config.objective == Objective::logistic) {
            const double p = std::clamp(mean, 1e-12, 1.0 - 1e-12);
            model.base_score = std::log(p / (1.0 - p));
        } else {
            model.base_score = mean;
        }
    }

    const BinnedData binned = bin_matrix(matrix, config.bins);

    std::vector<double> margin(n, model.base_score);
    std::vector<double> g(n), h(n);
    std::vector<std::uint32_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), 0);

    auto mean_loss = [&]() {
        double acc = 0.0;
        if (config.objective == Objective::logistic) {
            for (std::size_t i = 0; i < n; ++i) {
                const double p = std::clamp(sigmoid(margin[i]), 1e-15, 1.0 - 1e-15);
                acc += labels[i] == 1.0 ? -std::log(p) : -std::log(1.0 - p);
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                const double d = margin[i] - labels[i];
                acc += d * d;
            }
        }
        return acc / static_cast<double>(n);
    };

    for (int round = 0; round < config.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            if (config.objective == Objective::logistic) {
                const double p = sigmoid(margin[i]);
                g[i] = p - labels[i];
                h[i] = std::max(p * (1.0 - p), 1e-16);
            } else {
                g[i] = margin[i] - labels[i];
                h[i] = 1.0;
            }
        }

        std::vector<std::uint32_t> rows;
        if (config.subsample >= 1.0) {
            rows = all_rows;
        } else {
            const std::size_t take =
                std::max<std::size_t>(1, static_cast<std::size_t>(config.subsample * n));
            std::vector<std::uint32_t> pool = all_rows;
            std::mt19937_64 gen(config.seed + static_cast<std::uint64_t>(round));
            for (std::size_t i = 0; i < take; ++i) {
                const std::size_t j = i + gen() % (pool.size() - i);
                std::swap(pool[i], pool[j]);
            }
            rows.assign(pool.begin(), pool.begin() + take);
            std::sort(rows.begin(), rows.end());
        }

        Tree tree = grow_tree(binned, g, h, rows, config);
        for (std::size_t i = 0; i < n; ++i)
            margin[i] += config.learning_rate * tree.value(matrix.row(i));
        model.trees.push_back(std::move(tree));
        result.loss_trace.push_back(mean_loss());
    }
    return result;
}

std::vector<FeatureImportance> feature_importance(const GbtModel& model, ImportanceKind kind) {
    std::vector<double> total;   // accumulated gain or cover
    std::vector<long long> count;
    auto ensure = [&](int feature) {
        if (static_cast<std::size_t>(feature) >= total.size()) {
            total.resize(feature + 1, 0.0);
            count.resize(feature + 1, 0);
        }
    };
    for (const auto& tree : model.trees) {
        for (const auto& n : tree.nodes) {
            if (n.is_leaf()) continue;
            ensure(n.feature);
            ++count[n.feature];
            total[n.feature] += kind == ImportanceKind::cover ? n.cover : n.gain;
        }
    }

    std::vector<FeatureImportance> ranking;
    for (std::size_t f = 0; f < total.size(); ++f) {
        if (count[f] == 0) continue;
        double value = 0.0;
        switch (kind) {
            case ImportanceKind::weight: value = static_cast<double>(count[f]); break;
            case ImportanceKind::gain: value = total[f] / static_cast<double>(count[f]); break;
            case ImportanceKind::cover: value = total[f] / static_cast<double>(count[f]); break;
        }
        ranking.push_back({static_cast<int>(f), value});
    }
    std::sort(ranking.begin(), ranking.end(), [](const auto& x, const auto& y) {
        if (x.value != y.value) return x.value > y.value;
        return x.feature < y.feature;
    });
    return ranking;
}

SplitEvalResult evaluate_split_train_test(const NumericMatrix& matrix,
                                          std::span<const double> labels, double fraction,
                                          const GbtConfig& config,
                                          std::vector<std::string> feature_names) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw DomainError("split fraction must lie in (0, 1)");
    if (labels.size() != matrix.rows)
        throw DomainError("label count differs from matrix rows");
    const std::size_t train_n = static_cast<std::size_t>(fraction * static_cast<double>(matrix.rows));
    const std::size_t test_n = matrix.rows - train_n;
    if (train_n == 0 || test_n == 0)
        throw DomainError("degenerate chronological split: one side is empty");
    for (double y : labels)
        if (y != 0.0 && y != 1.0)
            throw DomainError("evaluate_split_train_test needs binary labels");

    NumericMatrix train(train_n, matrix.cols), test(test_n, matrix.cols);
    std::copy(matrix.data.begin(), matrix.data.begin() + train_n * matrix.cols,
              train.data.begin());
    std::copy(matrix.data.begin() + train_n * matrix.cols, matrix.data.end(), test.data.begin());

    TrainResult trained = train_gbt(train, labels.subspan(0, train_n), config,
                                    std::move(feature_names));

    const std::vector<double> scores = trained.model.predict(test);
    std::vector<int> test_labels(test_n);
    for (std::size_t i = 0; i < test_n; ++i)
        test_labels[i] = labels[train_n + i] == 1.0 ? 1 : 0;

    SplitEvalResult out;
    out.model = std::move(trained.model);
    out.loss_trace = std::move(trained.loss_trace);
    out.report = metrics::evaluate_scores(test_labels, scores, 0.5);
    out.train_rows = train_n;
    out.test_rows = test_n;
    return out;
}

}  // namespace matchflow::gbt
