#include "matchflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "matchflow/errors.hpp"

namespace matchflow::metrics {

ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> predictions) {
    if (labels.size() != predictions.size())
        throw DomainError("labels and predictions differ in length");
    if (labels.empty()) throw DomainError("cannot build a confusion matrix from no samples");

    ConfusionMatrix cm;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool actual = labels[i] == 1;
        const bool predicted = predictions[i] == 1;
        if (actual && predicted) ++cm.tp;
        else if (!actual && predicted) ++cm.fp;
        else if (actual && !predicted) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

ClassificationReport classification_report(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw DomainError("empty confusion matrix");

    ClassificationReport r;
    r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());

    if (cm.tp + cm.fp > 0) {
        r.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
    } else {
        r.precision_defined = false;
    }
    if (cm.tp + cm.fn > 0) {
        r.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    } else {
        r.recall_defined = false;
    }
    if (2 * cm.tp + cm.fp + cm.fn > 0) {
        r.f1 = static_cast<double>(2 * cm.tp) / static_cast<double>(2 * cm.tp + cm.fp + cm.fn);
    } else {
        r.f1_defined = false;
    }
    return r;
}

RocAuc roc_auc(std::span<const int> labels, std::span<const double> scores) {
    if (labels.size() != scores.size())
        throw DomainError("labels and scores differ in length");
    const std::size_t n = labels.size();
    long long positives = 0;
    for (int y : labels) positives += y == 1 ? 1 : 0;
    const long long negatives = static_cast<long long>(n) - positives;
    if (positives == 0 || negatives == 0)
        throw DomainError("roc_auc needs both classes present");

    // Rank-sum AUC with average ranks on ties: equals pairwise Mann-Whitney
    // counting with half-credit for tied pairs.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    const double p = static_cast<double>(positives);
    const double q = static_cast<double>(negatives);

    RocAuc result;
    result.auc = (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * q);

    // Curve: sweep distinct thresholds descending, predicting score >= thr.
    result.curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    long long tp = 0, fp = 0;
    for (std::size_t k = n; k-- > 0;) {
        const std::size_t idx = order[k];
        if (labels[idx] == 1) ++tp;
        else ++fp;
        const bool last_of_tie = k == 0 || scores[order[k - 1]] != scores[idx];
        if (last_of_tie) {
            result.curve.points.push_back({static_cast<double>(fp) / q,
                                           static_cast<double>(tp) / p, scores[idx]});
        }
    }
    return result;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("pearson inputs differ in length");
    if (x.size() < 2) throw DomainError("pearson needs at least 2 samples");
    const double n = static_cast<double>(x.size());

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;

    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DomainError("pearson input is constant");
    return sxy / std::sqrt(sxx * syy);
}

EvalReport evaluate_scores(std::span<const int> labels, std::span<const double> scores,
                           double threshold) {
    std::vector<int> predictions(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        predictions[i] = scores[i] >= threshold ? 1 : 0;

    EvalReport report;
    report.confusion = confusion(labels, predictions);
    report.cls = classification_report(report.confusion);
    RocAuc ra = roc_auc(labels, scores);
    report.auc = ra.auc;
    report.roc = std::move(ra.curve);
    return report;
}

std::string eval_report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["accuracy"] = report.cls.accuracy;
    j["auc"] = report.auc;
    j["recall"] = report.cls.recall;
    j["f1"] = report.cls.f1;
    j["precision"] = report.cls.precision;
    j["undefined"] = nlohmann::json::array();
    if (!report.cls.precision_defined) j["undefined"].push_back("precision");
    if (!report.cls.recall_defined) j["undefined"].push_back("recall");
    if (!report.cls.f1_defined) j["undefined"].push_back("f1");
    j["confusion"] = {{"tp", report.confusion.tp},
                      {"fp", report.confusion.fp},
                      {"fn", report.confusion.fn},
                      {"tn", report.confusion.tn}};
    nlohmann::json roc = nlohmann::json::array();
    for (const auto& pt : report.roc.points) {
        // +inf anchors are not valid JSON numbers; emit null for that slot
        nlohmann::json thr;
        if (std::isfinite(pt.threshold)) thr = pt.threshold;
        roc.push_back({pt.fpr, pt.tpr, thr});
    }
    j["roc"] = roc;
    return j.dump(2);
}

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
    out << "fpr,tpr,threshold\n";
    for (const auto& pt : curve.points) {
        out << nlohmann::json(pt.fpr).dump() << ',' << nlohmann::json(pt.tpr).dump() << ',';
        if (std::isfinite(pt.threshold)) out << nlohmann::json(pt.threshold).dump();
        else out << "inf";
        out << '\n';
    }
}

}  // namespace matchflow::metrics
