#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "matchflow/matrix.hpp"

namespace matchflow::explain {

using PredictFn = std::function<double(std::span<const double>)>;

// Exact Shapley attribution of one prediction.
// phi0 + sum(phi) equals the instance prediction (efficiency).
struct ShapleyAttribution {
    std::vector<double> phi;
    double phi0 = 0.0;  // mean prediction over the background sample
    std::size_t instance_id = 0;
    std::size_t background_size = 0;
};

// Interventional value function: v(S) is the mean prediction over background
// rows with the instance's values patched in on S.  Enumerates all 2^p
// subsets; p is capped at 16.
ShapleyAttribution exact_shapley(const PredictFn& predict, const NumericMatrix& background,
                                 std::span<const double> instance, std::size_t instance_id = 0);

struct RankedFeature {
    int feature = 0;
    double mean_abs_phi = 0.0;
    double sign_balance = 0.0;  // mean sign of phi across samples
};

// Descending by mean |phi|; exact ties order by feature id.
std::vector<RankedFeature> shap_summary(const std::vector<ShapleyAttribution>& attributions);

struct DependencePoint {
    double value_a = 0.0;
    double value_b = 0.0;
    double phi_a = 0.0;
};

// One triple per attribution, looked up by instance_id row in `values`,
// ordered by value_a (stable).
std::vector<DependencePoint> dependence_pairs(const NumericMatrix& values,
                                              const std::vector<ShapleyAttribution>& attributions,
                                              int feature_a, int feature_b);

struct SobolIndices {
    std::vector<double> s1;     // first-order effects
    std::vector<double> st;     // total effects
    std::vector<double> s1_ci;  // bootstrap half-widths
    std::vector<double> st_ci;
    std::size_t n_base = 0;
    std::uint64_t seed = 0;
    bool variance_zero = false;  // constant output; all indices forced to 0
};

// Saltelli A/B/AB_i design with the Saltelli-2010 S1 estimator and the
// Jansen ST estimator; half-widths from seeded bootstrap resampling.
// n_base must be a power of two.
SobolIndices sobol_indices(const PredictFn& predict,
                           const std::vector<std::pair<double, double>>& bounds,
                           std::size_t n_base, std::uint64_t seed,
                           std::size_t bootstrap_rounds = 200);

// CSV rows: sample_id, feature, value, phi (one row per feature per sample).
std::string attributions_to_csv(const NumericMatrix& values,
                                const std::vector<ShapleyAttribution>& attributions,
                                const std::vector<std::string>& feature_names);

// {"s1":[...],"st":[...],"ci":[{"s1":..,"st":..},...],"n":..,"seed":..}
std::string sobol_to_json(const SobolIndices& indices,
                          const std::vector<std::string>& feature_names);

}  // namespace matchflow::explain
