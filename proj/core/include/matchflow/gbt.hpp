#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "matchflow/matrix.hpp"
#include "matchflow/metrics.hpp"

namespace matchflow::gbt {

enum class Growth { level_wise, leaf_wise };
enum class Objective { squared_error, logistic };

struct GbtConfig {
    int rounds = 200;            // K
    double learning_rate = 0.1;  // eta
    int max_depth = 6;
    int max_leaves = 31;
    double lambda = 1.0;  // L2 penalty on leaf weights
    double gamma = 0.0;   // per-leaf penalty subtracted from split gain
    Growth growth = Growth::level_wise;
    int bins = 64;  // histogram bin budget per feature
    Objective objective = Objective::squared_error;
    std::optional<double> base_score;  // default: mean label / log-odds of it
    std::uint64_t seed = 0;
    double subsample = 1.0;  // per-round row fraction in (0, 1]
};

// Binary tree stored as a node array; node 0 is the root.  Internal nodes
// route x[feature] <= threshold to `left`.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;  // leaf value, without shrinkage
    double gain = 0.0;    // split gain (internal nodes)
    double cover = 0.0;   // hessian sum reaching the node

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;

    double value(std::span<const double> row) const;
    int leaf_count() const;
    int depth() const;
};

// Additive ensemble: margin(x) = base_score + eta * sum_k f_k(x).
struct GbtModel {
    std::vector<Tree> trees;
    double base_score = 0.0;
    double learning_rate = 0.1;
    Objective objective = Objective::squared_error;
    std::vector<std::string> feature_names;

    double margin(std::span<const double> row) const;
    double predict_value(std::span<const double> row) const;  // sigmoid for logistic
    std::vector<double> predict(const NumericMatrix& matrix) const;
    std::vector<double> predict_margin(const NumericMatrix& matrix) const;

    std::string to_json() const;
    static GbtModel from_json(const std::string& text);
};

struct TrainResult {
    GbtModel model;
    std::vector<double> loss_trace;  // mean training loss after each round
};

TrainResult train_gbt(const NumericMatrix& matrix, std::span<const double> labels,
                      const GbtConfig& config, std::vector<std::string> feature_names = {});

enum class ImportanceKind { weight, gain, cover };

struct FeatureImportance {
    int feature = 0;
    double value = 0.0;
};

// weight = split count; gain = mean split gain; cover = mean hessian sum at
// splits.  Descending by value, ties toward the lower feature id.
std::vector<FeatureImportance> feature_importance(const GbtModel& model, ImportanceKind kind);

struct SplitEvalResult {
    GbtModel model;
    std::vector<double> loss_trace;
    metrics::EvalReport report;  // on the held-out tail
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
};

// Chronological split: the first floor(fraction*n) rows train, the rest test.
// Labels must be binary for the metric report.
SplitEvalResult evaluate_split_train_test(const NumericMatrix& matrix,
                                          std::span<const double> labels, double fraction,
                                          const GbtConfig& config,
                                          std::vector<std::string> feature_names = {});

}  // namespace matchflow::gbt
