#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace matchflow::metrics {

// Binary confusion counts; the positive class is label 1.
struct ConfusionMatrix {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    long long tn = 0;

    long long total() const { return tp + fp + fn + tn; }
};

// Zero-denominator ratios come back as 0 with the matching flag cleared.
struct ClassificationReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_defined = true;
    bool recall_defined = true;
    bool f1_defined = true;
};

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  // predict positive when score >= threshold
};

// Non-decreasing from (0,0) to (1,1); thresholds are the distinct scores in
// descending order, preceded by a +inf anchor.
struct RocCurve {
    std::vector<RocPoint> points;
};

struct RocAuc {
    RocCurve curve;
    double auc = 0.0;
};

// Full evaluation bundle for one classifier run.
struct EvalReport {
    ConfusionMatrix confusion;
    ClassificationReport cls;
    double auc = 0.0;
    RocCurve roc;
};

ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> predictions);

ClassificationReport classification_report(const ConfusionMatrix& cm);

// AUC is the Mann-Whitney statistic (ties count 1/2), identical to the
// trapezoidal area under the returned curve.  Both classes must be present.
RocAuc roc_auc(std::span<const int> labels, std::span<const double> scores);

// Product-moment correlation; throws for length < 2 or constant input.
double pearson(std::span<const double> x, std::span<const double> y);

// Threshold scores at `threshold`, then assemble confusion + report + ROC.
EvalReport evaluate_scores(std::span<const int> labels, std::span<const double> scores,
                           double threshold = 0.5);

// {"accuracy":..,"auc":..,"recall":..,"f1":..,"precision":..,
//  "confusion":{...},"roc":[[fpr,tpr,thr],...]}
std::string eval_report_to_json(const EvalReport& report);

void write_roc_csv(std::ostream& out, const RocCurve& curve);

}  // namespace matchflow::metrics
