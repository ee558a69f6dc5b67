#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matchflow/observation.hpp"

namespace matchflow::hmm {

// Discrete HMM over N hidden states and M observation symbols.
// pi, every row of a and every row of b are probability distributions.
struct HmmModel {
    int n = 2;                // state count
    int m = 2;                // symbol count
    std::vector<double> pi;   // n
    std::vector<double> a;    // n*n, row-major: a[i*n+j] = P(state j at t+1 | state i at t)
    std::vector<double> b;    // n*m, row-major: b[j*m+k] = P(symbol k | state j)

    static HmmModel uniform(int n, int m);

    double trans(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
    double emit(int j, int k) const { return b[static_cast<std::size_t>(j) * m + k]; }

    // Throws DomainError when shapes disagree or a row leaves the simplex
    // by more than 1e-9.
    void validate() const;

    // {"n":..,"m":..,"pi":[..],"a":[..],"b":[..]} with row-major matrices.
    // Doubles are emitted in shortest round-trip form, so parse(dump(x)) == x.
    std::string to_json() const;
    static HmmModel from_json(const std::string& text);
};

struct ForwardResult {
    std::vector<double> alpha;  // T*n, rows normalized to sum 1
    std::vector<double> scale;  // T, per-step normalizers
    double log_likelihood = 0.0;
};

struct PosteriorSet {
    std::size_t t = 0;          // sequence length
    int n = 0;
    std::vector<double> gamma;  // T*n state posteriors
    std::vector<double> xi;     // (T-1)*n*n pairwise transition posteriors
    double log_likelihood = 0.0;

    double g(std::size_t step, int state) const { return gamma[step * n + state]; }
    double x(std::size_t step, int i, int j) const {
        return xi[(step * n + i) * n + j];
    }
};

struct ViterbiResult {
    std::vector<int> path;          // length T, most probable state sequence
    double log_probability = 0.0;   // log joint probability of (path, obs)
};

struct TrainConfig {
    int max_iterations = 100;
    double tolerance = 1e-6;    // stop when log-likelihood gain drops below this
    std::uint64_t seed = 1;
    int restarts = 4;           // independent inits; best final likelihood wins
    double floor = 1e-6;        // minimum probability mass after each M-step
};

struct TrainResult {
    HmmModel model;
    std::vector<double> log_likelihood_trace;  // one entry per E-step of the winning restart
    std::uint64_t winning_seed = 0;
};

// Scaled forward pass.  log_likelihood = sum of log scale factors.
// Throws DomainError when the observation probability collapses to zero at
// some step (message names the step).
ForwardResult forward(const HmmModel& model, const ObservationSequence& obs);

// Scaled backward pass using forward's scale factors: beta[T-1][j] = 1 and
// sum_j alpha[t][j]*beta[t][j] == 1 at every step.
std::vector<double> backward(const HmmModel& model, const ObservationSequence& obs,
                             const ForwardResult& fwd);

PosteriorSet posteriors(const HmmModel& model, const ObservationSequence& obs);

// Most probable state path; ties resolve toward the lower state index.
ViterbiResult viterbi(const HmmModel& model, const ObservationSequence& obs);

// Baum-Welch EM over one or more sequences sharing the same symbol alphabet.
// The per-iteration trace is non-decreasing (up to 1e-9); the best of
// config.restarts seeded initializations is returned.
TrainResult baum_welch(const std::vector<ObservationSequence>& sequences, int n, int m,
                       const TrainConfig& config);

}  // namespace matchflow::hmm
