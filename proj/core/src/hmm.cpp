#include "matchflow/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <json.hpp>

#include "matchflow/errors.hpp"

namespace matchflow::hmm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_obs(const HmmModel& model, const ObservationSequence& obs) {
    if (obs.symbols.empty()) throw DomainError("observation sequence is empty");
    for (std::size_t t = 0; t < obs.symbols.size(); ++t) {
        const int s = obs.symbols[t];
        if (s < 0 || s >= model.m)
            throw DomainError("observation symbol " + std::to_string(s) + " at step " +
                              std::to_string(t) + " outside [0, " + std::to_string(model.m) + ")");
    }
}

void check_simplex(const std::vector<double>& v, std::size_t offset, std::size_t len,
                   const std::string& what) {
    double sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        const double x = v[offset + i];
        if (!(x >= 0.0)) throw DomainError(what + " has a negative entry");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw DomainError(what + " sums to " + std::to_string(sum) + ", not 1");
}

// Raise sub-floor entries and renormalize the [offset, offset+len) row.
void floor_row(std::vector<double>& v, std::size_t offset, std::size_t len, double floor) {
    double sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        if (v[offset + i] < floor) v[offset + i] = floor;
        sum += v[offset + i];
    }
    for (std::size_t i = 0; i < len; ++i) v[offset + i] /= sum;
}

}  // namespace

HmmModel HmmModel::uniform(int n, int m) {
    if (n < 1 || m < 1) throw DomainError("state and symbol counts must be positive");
    HmmModel model;
    model.n = n;
    model.m = m;
    model.pi.assign(n, 1.0 / n);
    model.a.assign(static_cast<std::size_t>(n) * n, 1.0 / n);
    model.b.assign(static_cast<std::size_t>(n) * m, 1.0 / m);
    return model;
}

void HmmModel::validate() const {
    if (n < 1 || m < 1) throw DomainError("state and symbol counts must be positive");
    if (pi.size() != static_cast<std::size_t>(n) ||
        a.size() != static_cast<std::size_t>(n) * n ||
        b.size() != static_cast<std::size_t>(n) * m)
        throw DomainError("model matrices do not match n/m");
    check_simplex(pi, 0, n, "pi");
    for (int i = 0; i < n; ++i) {
        check_simplex(a, static_cast<std::size_t>(i) * n, n, "a row " + std::to_string(i));
        check_simplex(b, static_cast<std::size_t>(i) * m, m, "b row " + std::to_string(i));
    }
}

std::string HmmModel::to_json() const {
    nlohmann::json j;
    j["n"] = n;
    j["m"] = m;
    j["pi"] = pi;
    j["a"] = a;
    j["b"] = b;
    return j.dump();
}

HmmModel HmmModel::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    HmmModel model;
    model.n = j.at("n").get<int>();
    model.m = j.at("m").get<int>();
    model.pi = j.at("pi").get<std::vector<double>>();
    model.a = j.at("a").get<std::vector<double>>();
    model.b = j.at("b").get<std::vector<double>>();
    model.validate();
    return model;
}

ForwardResult forward(const HmmModel& model, const ObservationSequence& obs) {
    check_obs(model, obs);
    const int n = model.n;
    const std::size_t T = obs.symbols.size();

    ForwardResult res;
    res.alpha.assign(T * n, 0.0);
    res.scale.assign(T, 0.0);

    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = model.pi[i] * model.emit(i, obs.symbols[0]);
        res.alpha[i] = v;
        sum += v;
    }
    if (sum <= 0.0)
        throw DomainError("degenerate likelihood: all forward mass zero at step 0");
    res.scale[0] = sum;
    for (int i = 0; i < n; ++i) res.alpha[i] /= sum;

    for (std::size_t t = 1; t < T; ++t) {
        const double* prev = res.alpha.data() + (t - 1) * n;
        double* cur = res.alpha.data() + t * n;
        sum = 0.0;
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += prev[i] * model.trans(i, j);
            const double v = acc * model.emit(j, obs.symbols[t]);
            cur[j] = v;
            sum += v;
        }
        if (sum <= 0.0)
            throw DomainError("degenerate likelihood: all forward mass zero at step " +
                              std::to_string(t));
        res.scale[t] = sum;
        for (int j = 0; j < n; ++j) cur[j] /= sum;
    }

    res.log_likelihood = 0.0;
    for (double s : res.scale) res.log_likelihood += std::log(s);
    return res;
}

std::vector<double> backward(const HmmModel& model, const ObservationSequence& obs,
                             const ForwardResult& fwd) {
    check_obs(model, obs);
    const int n = model.n;
    const std::size_t T = obs.symbols.size();
    if (fwd.scale.size() != T) throw DomainError("forward result does not match sequence");

    std::vector<double> beta(T * n, 0.0);
    for (int j = 0; j < n; ++j) beta[(T - 1) * n + j] = 1.0;

    for (std::size_t t = T - 1; t-- > 0;) {
        const double* next = beta.data() + (t + 1) * n;
        double* cur = beta.data() + t * n;
        const int sym = obs.symbols[t + 1];
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += model.trans(i, j) * model.emit(j, sym) * next[j];
            cur[i] = acc / fwd.scale[t + 1];
        }
    }
    return beta;
}

PosteriorSet posteriors(const HmmModel& model, const ObservationSequence& obs) {
    const ForwardResult fwd = forward(model, obs);
    const std::vector<double> beta = backward(model, obs, fwd);
    const int n = model.n;
    const std::size_t T = obs.symbols.size();

    PosteriorSet post;
    post.t = T;
    post.n = n;
    post.log_likelihood = fwd.log_likelihood;
    post.gamma.assign(T * n, 0.0);
    for (std::size_t t = 0; t < T; ++t)
        for (int i = 0; i < n; ++i)
            post.gamma[t * n + i] = fwd.alpha[t * n + i] * beta[t * n + i];

    if (T > 1) {
        post.xi.assign((T - 1) * static_cast<std::size_t>(n) * n, 0.0);
        for (std::size_t t = 0; t + 1 < T; ++t) {
            const int sym = obs.symbols[t + 1];
            for (int i = 0; i < n; ++i) {
                const double ai = fwd.alpha[t * n + i];
                for (int j = 0; j < n; ++j) {
                    post.xi[(t * n + i) * n + j] = ai * model.trans(i, j) * model.emit(j, sym) *
                                                   beta[(t + 1) * n + j] / fwd.scale[t + 1];
                }
            }
        }
    }
    return post;
}

ViterbiResult viterbi(const HmmModel& model, const ObservationSequence& obs) {
    check_obs(model, obs);
    const int n = model.n;
    const std::size_t T = obs.symbols.size();

    auto logp = [](double p) { return p > 0.0 ? std::log(p) : kNegInf; };

    std::vector<double> delta(T * n, kNegInf);
    std::vector<int> argmax(T * n, 0);

    for (int i = 0; i < n; ++i)
        delta[i] = logp(model.pi[i]) + logp(model.emit(i, obs.symbols[0]));

    for (std::size_t t = 1; t < T; ++t) {
        for (int j = 0; j < n; ++j) {
            double best = kNegInf;
            int best_i = 0;
            for (int i = 0; i < n; ++i) {
                const double cand = delta[(t - 1) * n + i] + logp(model.trans(i, j));
                if (cand > best) {  // strict: ties keep the lower index
                    best = cand;
                    best_i = i;
                }
            }
            delta[t * n + j] = best + logp(model.emit(j, obs.symbols[t]));
            argmax[t * n + j] = best_i;
        }
    }

    double best = kNegInf;
    int last = 0;
    for (int j = 0; j < n; ++j) {
        if (delta[(T - 1) * n + j] > best) {
            best = delta[(T - 1) * n + j];
            last = j;
        }
    }
    if (best == kNegInf)
        throw DomainError("degenerate decode: every state path has zero probability");

    ViterbiResult res;
    res.log_probability = best;
    res.path.assign(T, 0);
    res.path[T - 1] = last;
    for (std::size_t t = T - 1; t-- > 0;) res.path[t] = argmax[(t + 1) * n + res.path[t + 1]];
    return res;
}

namespace {

HmmModel perturbed_uniform(int n, int m, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> noise(-0.05, 0.05);
    HmmModel model = HmmModel::uniform(n, m);
    auto jitter = [&](std::vector<double>& row, std::size_t offset, std::size_t len) {
        double sum = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            double v = row[offset + i] + noise(gen);
            if (v < 1e-3) v = 1e-3;
            row[offset + i] = v;
            sum += v;
        }
        for (std::size_t i = 0; i < len; ++i) row[offset + i] /= sum;
    };
    jitter(model.pi, 0, n);
    for (int i = 0; i < n; ++i) jitter(model.a, static_cast<std::size_t>(i) * n, n);
    for (int i = 0; i < n; ++i) jitter(model.b, static_cast<std::size_t>(i) * m, m);
    return model;
}

struct EmStats {
    std::vector<double> pi_num;   // n
    std::vector<double> a_num;    // n*n
    std::vector<double> a_den;    // n
    std::vector<double> b_num;    // n*m
    std::vector<double> b_den;    // n
    double log_likelihood = 0.0;
    std::size_t sequences = 0;
};

EmStats e_step(const HmmModel& model, const std::vector<ObservationSequence>& sequences) {
    const int n = model.n, m = model.m;
    EmStats s;
    s.pi_num.assign(n, 0.0);
    s.a_num.assign(static_cast<std::size_t>(n) * n, 0.0);
    s.a_den.assign(n, 0.0);
    s.b_num.assign(static_cast<std::size_t>(n) * m, 0.0);
    s.b_den.assign(n, 0.0);
    s.sequences = sequences.size();

    for (const auto& obs : sequences) {
        const PosteriorSet post = posteriors(model, obs);
        s.log_likelihood += post.log_likelihood;
        const std::size_t T = post.t;
        for (int i = 0; i < n; ++i) s.pi_num[i] += post.g(0, i);
        for (std::size_t t = 0; t + 1 < T; ++t) {
            for (int i = 0; i < n; ++i) {
                s.a_den[i] += post.g(t, i);
                for (int j = 0; j < n; ++j)
                    s.a_num[static_cast<std::size_t>(i) * n + j] += post.x(t, i, j);
            }
        }
        for (std::size_t t = 0; t < T; ++t) {
            const int sym = obs.symbols[t];
            for (int i = 0; i < n; ++i) {
                const double g = post.g(t, i);
                s.b_num[static_cast<std::size_t>(i) * m + sym] += g;
                s.b_den[i] += g;
            }
        }
    }
    return s;
}

void m_step(HmmModel& model, const EmStats& s, double floor) {
    const int n = model.n, m = model.m;
    for (int i = 0; i < n; ++i) model.pi[i] = s.pi_num[i] / static_cast<double>(s.sequences);
    floor_row(model.pi, 0, n, floor);

    for (int i = 0; i < n; ++i) {
        const std::size_t off = static_cast<std::size_t>(i) * n;
        if (s.a_den[i] > 0.0) {
            for (int j = 0; j < n; ++j) model.a[off + j] = s.a_num[off + j] / s.a_den[i];
        }
        floor_row(model.a, off, n, floor);
    }
    for (int i = 0; i < n; ++i) {
        const std::size_t off = static_cast<std::size_t>(i) * m;
        if (s.b_den[i] > 0.0) {
            for (int k = 0; k < m; ++k) model.b[off + k] = s.b_num[off + k] / s.b_den[i];
        }
        floor_row(model.b, off, m, floor);
    }
}

struct RestartOutcome {
    HmmModel model;
    std::vector<double> trace;
    bool failed = false;
};

RestartOutcome run_restart(const std::vector<ObservationSequence>& sequences, int n, int m,
                           const TrainConfig& config, std::uint64_t seed) {
    RestartOutcome out;
    out.model = perturbed_uniform(n, m, seed);
    try {
        double prev = kNegInf;
        for (int iter = 0; iter < config.max_iterations; ++iter) {
            const EmStats stats = e_step(out.model, sequences);
            out.trace.push_back(stats.log_likelihood);
            if (iter > 0 && stats.log_likelihood - prev < config.tolerance) return out;
            prev = stats.log_likelihood;
            m_step(out.model, stats, config.floor);
        }
        // final likelihood of the last updated model
        const EmStats stats = e_step(out.model, sequences);
        out.trace.push_back(stats.log_likelihood);
    } catch (const DomainError&) {
        out.failed = true;  // degenerate restart; other seeds may still work
    }
    return out;
}

}  // namespace

TrainResult baum_welch(const std::vector<ObservationSequence>& sequences, int n, int m,
                       const TrainConfig& config) {
    if (sequences.empty()) throw DomainError("no observation sequences to train on");
    if (n < 2 || m < 2) throw DomainError("training needs n >= 2 and m >= 2");
    if (config.tolerance <= 0.0) throw DomainError("tolerance must be positive");
    if (config.restarts < 1) throw DomainError("restarts must be >= 1");
    if (config.floor < 0.0 || config.floor > 1e-3)
        throw DomainError("floor must lie in [0, 1e-3]");
    for (const auto& obs : sequences) {
        if (obs.symbol_count != m)
            throw DomainError("sequence symbol_count differs from m");
        for (int s : obs.symbols)
            if (s < 0 || s >= m) throw DomainError("observation symbol outside [0, m)");
    }

    TrainResult best;
    bool have_best = false;
    for (int r = 0; r < config.restarts; ++r) {
        const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(r);
        RestartOutcome out = run_restart(sequences, n, m, config, seed);
        if (out.failed) continue;
        if (!have_best || out.trace.back() > best.log_likelihood_trace.back()) {
            best.model = std::move(out.model);
            best.log_likelihood_trace = std::move(out.trace);
            best.winning_seed = seed;
            have_best = true;
        }
    }
    if (!have_best)
        throw DomainError("all training restarts hit degenerate likelihoods");
    best.model.validate();
    return best;
}

}  // namespace matchflow::hmm
