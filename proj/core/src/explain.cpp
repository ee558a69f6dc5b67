#include "matchflow/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "matchflow/errors.hpp"

namespace matchflow::explain {
namespace {

constexpr int kMaxShapleyFeatures = 16;

double checked_predict(const PredictFn& predict, std::span<const double> row) {
    const double y = predict(row);
    if (!std::isfinite(y)) throw EvalError("predict handle returned a non-finite value");
    return y;
}

}  // namespace

ShapleyAttribution exact_shapley(const PredictFn& predict, const NumericMatrix& background,
                                 std::span<const double> instance, std::size_t instance_id) {
    const std::size_t p = instance.size();
    if (p == 0) throw DomainError("instance has no features");
    if (p > kMaxShapleyFeatures)
        throw CapacityError("exact Shapley enumeration is capped at " +
                            std::to_string(kMaxShapleyFeatures) + " features, got " +
                            std::to_string(p));
    if (background.rows == 0) throw DomainError("background sample is empty");
    if (background.cols != p)
        throw DomainError("background arity differs from instance arity");

    // v[mask]: mean prediction with instance values on the mask features and
    // background values elsewhere.
    const std::size_t n_masks = std::size_t{1} << p;
    std::vector<double> v(n_masks, 0.0);
    std::vector<double> composite(p);
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
        double acc = 0.0;
        for (std::size_t b = 0; b < background.rows; ++b) {
            const auto bg = background.row(b);
            for (std::size_t j = 0; j < p; ++j)
                composite[j] = (mask >> j) & 1u ? instance[j] : bg[j];
            acc += checked_predict(predict, composite);
        }
        v[mask] = acc / static_cast<double>(background.rows);
    }

    // Shapley kernel weights |S|!(p-|S|-1)!/p! are exact in double for p<=16.
    std::vector<double> weight(p);
    auto factorial = [](std::size_t k) {
        double f = 1.0;
        for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
        return f;
    };
    for (std::size_t s = 0; s < p; ++s)
        weight[s] = factorial(s) * factorial(p - s - 1) / factorial(p);

    ShapleyAttribution attr;
    attr.phi.assign(p, 0.0);
    attr.phi0 = v[0];
    attr.instance_id = instance_id;
    attr.background_size = background.rows;
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
        const double w = weight[static_cast<std::size_t>(std::popcount(mask))];
        for (std::size_t j = 0; j < p; ++j) {
            if ((mask >> j) & 1u) continue;
            attr.phi[j] += w * (v[mask | (std::size_t{1} << j)] - v[mask]);
        }
    }
    return attr;
}

std::vector<RankedFeature> shap_summary(const std::vector<ShapleyAttribution>& attributions) {
    if (attributions.empty()) throw DomainError("no attributions to summarize");
    const std::size_t p = attributions.front().phi.size();
    for (const auto& a : attributions)
        if (a.phi.size() != p) throw DomainError("attribution arity mismatch");

    std::vector<RankedFeature> out(p);
    for (std::size_t j = 0; j < p; ++j) {
        double abs_sum = 0.0, sign_sum = 0.0;
        for (const auto& a : attributions) {
            abs_sum += std::abs(a.phi[j]);
            sign_sum += a.phi[j] > 0.0 ? 1.0 : (a.phi[j] < 0.0 ? -1.0 : 0.0);
        }
        out[j].feature = static_cast<int>(j);
        out[j].mean_abs_phi = abs_sum / static_cast<double>(attributions.size());
        out[j].sign_balance = sign_sum / static_cast<double>(attributions.size());
    }
    std::sort(out.begin(), out.end(), [](const RankedFeature& x, const RankedFeature& y) {
        if (x.mean_abs_phi != y.mean_abs_phi) return x.mean_abs_phi > y.mean_abs_phi;
        return x.feature < y.feature;
    });
    return out;
}

std::vector<DependencePoint> dependence_pairs(const NumericMatrix& values,
                                              const std::vector<ShapleyAttribution>& attributions,
                                              int feature_a, int feature_b) {
    if (feature_a < 0 || static_cast<std::size_t>(feature_a) >= values.cols ||
        feature_b < 0 || static_cast<std::size_t>(feature_b) >= values.cols)
        throw DomainError("unknown feature index in dependence pair");

    std::vector<DependencePoint> out;
    out.reserve(attributions.size());
    for (const auto& a : attributions) {
        if (a.instance_id >= values.rows)
            throw DomainError("attribution instance_id outside the value matrix");
        if (static_cast<std::size_t>(feature_a) >= a.phi.size())
            throw DomainError("attribution arity does not cover feature_a");
        out.push_back({values.at(a.instance_id, feature_a), values.at(a.instance_id, feature_b),
                       a.phi[feature_a]});
    }
    std::stable_sort(out.begin(), out.end(), [](const DependencePoint& x, const DependencePoint& y) {
        return x.value_a < y.value_a;
    });
    return out;
}

SobolIndices sobol_indices(const PredictFn& predict,
                           const std::vector<std::pair<double, double>>& bounds,
                           std::size_t n_base, std::uint64_t seed,
                           std::size_t bootstrap_rounds) {
    const std::size_t p = bounds.size();
    if (p == 0) throw DomainError("sobol needs at least one input");
    if (n_base < 2 || (n_base & (n_base - 1)) != 0)
        throw DomainError("n_base must be a power of two >= 2");
    if (bootstrap_rounds < 100) bootstrap_rounds = 100;
    for (const auto& [lo, hi] : bounds) {
        if (!std::isfinite(lo) || !std::isfinite(hi))
            throw DomainError("sobol bounds must be finite");
        if (!(lo < hi)) throw DomainError("sobol bounds must satisfy lo < hi");
    }

    // Independent uniform designs A and B, then the AB_i column swaps.
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw_matrix = [&](NumericMatrix& m) {
        m = NumericMatrix(n_base, p);
        for (std::size_t r = 0; r < n_base; ++r)
            for (std::size_t c = 0; c < p; ++c)
                m.at(r, c) = bounds[c].first + (bounds[c].second - bounds[c].first) * unit(gen);
    };
    NumericMatrix a, b;
    draw_matrix(a);
    draw_matrix(b);

    auto eval_matrix = [&](const NumericMatrix& m) {
        std::vector<double> out(m.rows);
        for (std::size_t r = 0; r < m.rows; ++r) {
            const double y = predict(m.row(r));
            if (!std::isfinite(y))
                throw EvalError("predict returned a non-finite value at sample row " +
                                std::to_string(r));
            out[r] = y;
        }
        return out;
    };

    const std::vector<double> f_a = eval_matrix(a);
    const std::vector<double> f_b = eval_matrix(b);
    std::vector<std::vector<double>> f_ab(p);
    NumericMatrix ab = a;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t r = 0; r < n_base; ++r) ab.at(r, i) = b.at(r, i);
        f_ab[i] = eval_matrix(ab);
        for (std::size_t r = 0; r < n_base; ++r) ab.at(r, i) = a.at(r, i);
    }

    // Estimators over a subsample of row indices (identity for the point
    // estimate, resampled for the bootstrap).
    auto estimate = [&](std::span<const std::uint32_t> idx, std::vector<double>& s1,
                        std::vector<double>& st) -> bool {
        const double n = static_cast<double>(idx.size());
        double mean = 0.0;
        for (std::uint32_t r : idx) mean += f_a[r] + f_b[r];
        mean /= 2.0 * n;
        double var = 0.0;
        for (std::uint32_t r : idx) {
            var += (f_a[r] - mean) * (f_a[r] - mean);
            var += (f_b[r] - mean) * (f_b[r] - mean);
        }
        var /= 2.0 * n;
        if (var <= 0.0) return false;

        for (std::size_t i = 0; i < p; ++i) {
            double v_i = 0.0, e_t = 0.0;
            for (std::uint32_t r : idx) {
                v_i += f_b[r] * (f_ab[i][r] - f_a[r]);
                const double d = f_a[r] - f_ab[i][r];
                e_t += d * d;
            }
            s1[i] = v_i / n / var;
            st[i] = e_t / (2.0 * n) / var;
        }
        return true;
    };

    SobolIndices out;
    out.n_base = n_base;
    out.seed = seed;
    out.s1.assign(p, 0.0);
    out.st.assign(p, 0.0);
    out.s1_ci.assign(p, 0.0);
    out.st_ci.assign(p, 0.0);

    std::vector<std::uint32_t> identity(n_base);
    std::iota(identity.begin(), identity.end(), 0);
    if (!estimate(identity, out.s1, out.st)) {
        out.variance_zero = true;
        return out;
    }

    std::mt19937_64 boot_gen(seed + 1);
    std::vector<double> s1_r(p), st_r(p);
    std::vector<double> s1_sum(p, 0.0), s1_sq(p, 0.0), st_sum(p, 0.0), st_sq(p, 0.0);
    std::vector<std::uint32_t> resample(n_base);
    std::size_t effective = 0;
    for (std::size_t round = 0; round < bootstrap_rounds; ++round) {
        for (auto& r : resample)
            r = static_cast<std::uint32_t>(boot_gen() % n_base);
        if (!estimate(resample, s1_r, st_r)) continue;  // degenerate resample
        ++effective;
        for (std::size_t i = 0; i < p; ++i) {
            s1_sum[i] += s1_r[i];
            s1_sq[i] += s1_r[i] * s1_r[i];
            st_sum[i] += st_r[i];
            st_sq[i] += st_r[i] * st_r[i];
        }
    }
    if (effective > 1) {
        for (std::size_t i = 0; i < p; ++i) {
            const double n = static_cast<double>(effective);
            const double var_s1 = std::max(0.0, s1_sq[i] / n - (s1_sum[i] / n) * (s1_sum[i] / n));
            const double var_st = std::max(0.0, st_sq[i] / n - (st_sum[i] / n) * (st_sum[i] / n));
            out.s1_ci[i] = 1.96 * std::sqrt(var_s1);
            out.st_ci[i] = 1.96 * std::sqrt(var_st);
        }
    }
    return out;
}

std::string attributions_to_csv(const NumericMatrix& values,
                                const std::vector<ShapleyAttribution>& attributions,
                                const std::vector<std::string>& feature_names) {
    std::string out = "sample_id,feature,value,phi\n";
    for (const auto& a : attributions) {
        for (std::size_t j = 0; j < a.phi.size(); ++j) {
            out += std::to_string(a.instance_id);
            out += ',';
            out += j < feature_names.size() ? feature_names[j] : "f" + std::to_string(j);
            out += ',';
            out += nlohmann::json(values.at(a.instance_id, j)).dump();
            out += ',';
            out += nlohmann::json(a.phi[j]).dump();
            out += '\n';
        }
    }
    return out;
}

std::string sobol_to_json(const SobolIndices& indices,
                          const std::vector<std::string>& feature_names) {
    nlohmann::json j;
    j["s1"] = indices.s1;
    j["st"] = indices.st;
    nlohmann::json ci = nlohmann::json::array();
    for (std::size_t i = 0; i < indices.s1_ci.size(); ++i)
        ci.push_back({{"s1", indices.s1_ci[i]}, {"st", indices.st_ci[i]}});
    j["ci"] = ci;
    j["n"] = indices.n_base;
    j["seed"] = indices.seed;
    j["variance_zero"] = indices.variance_zero;
    if (!feature_names.empty()) j["features"] = feature_names;
    return j.dump(2);
}

}  // namespace matchflow::explain
