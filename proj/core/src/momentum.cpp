#include "matchflow/momentum.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include <json.hpp>

#include "matchflow/errors.hpp"

namespace matchflow::momentum {

std::vector<double> ema(std::span<const double> raw, const EmaConfig& config) {
    if (config.beta < 0.0 || config.beta >= 1.0)
        throw DomainError("ema beta must lie in [0, 1)");
    std::vector<double> out;
    out.reserve(raw.size());
    double v = config.v0;
    for (double theta : raw) {
        v = config.beta * v + (1.0 - config.beta) * theta;
        out.push_back(v);
    }
    return out;
}

MomentumSeries momentum_from_posteriors(const hmm::PosteriorSet& post,
                                        const std::vector<int>& state_to_player,
                                        const EmaConfig& config) {
    if (post.n != 2)
        throw DomainError("momentum mapping requires a two-state model, got n=" +
                          std::to_string(post.n));
    if (state_to_player.size() != 2)
        throw DomainError("state orientation must cover both states");
    int state_of_p1 = -1, state_of_p2 = -1;
    for (int s = 0; s < 2; ++s) {
        if (state_to_player[s] == 1) state_of_p1 = s;
        else if (state_to_player[s] == 2) state_of_p2 = s;
        else throw DomainError("state orientation values must be player 1 or 2");
    }
    if (state_of_p1 < 0 || state_of_p2 < 0)
        throw DomainError("state orientation is missing a player");

    std::vector<double> raw(post.t, 0.0);
    for (std::size_t t = 0; t < post.t; ++t)
        raw[t] = 2.0 * (post.g(t, state_of_p1) - post.g(t, state_of_p2));

    MomentumSeries series;
    series.values = ema(raw, config);
    series.beta = config.beta;
    series.source = MomentumSource::hmm_posterior;
    return series;
}

std::vector<int> orient_states(const hmm::HmmModel& model, const MatchPointLog& log,
                               const ObservationSequence& obs) {
    if (model.n != 2) throw DomainError("orientation requires a two-state model");
    if (obs.symbols.size() != log.points.size())
        throw DomainError("observation sequence length differs from log length");
    if (obs.symbol_count != model.m)
        throw DomainError("observation alphabet differs from model");

    // Empirical victor share per symbol.  Deterministic codecs make this
    // exact; a merged custom codec degrades gracefully to a majority share.
    std::vector<double> p1_wins(model.m, 0.0), seen(model.m, 0.0);
    for (std::size_t t = 0; t < obs.symbols.size(); ++t) {
        const int s = obs.symbols[t];
        seen[s] += 1.0;
        if (log.points[t].point_victor == 1) p1_wins[s] += 1.0;
    }

    double mass[2] = {0.0, 0.0};
    for (int state = 0; state < 2; ++state) {
        for (int s = 0; s < model.m; ++s) {
            if (seen[s] == 0.0) continue;
            mass[state] += model.emit(state, s) * (p1_wins[s] / seen[s]);
        }
    }

    std::vector<int> orientation(2);
    if (mass[0] >= mass[1]) {
        orientation[0] = 1;
        orientation[1] = 2;
    } else {
        orientation[0] = 2;
        orientation[1] = 1;
    }
    return orientation;
}

std::vector<SwingEvent> detect_swings(const MomentumSeries& series, double hysteresis) {
    if (hysteresis < 0.0) throw DomainError("hysteresis must be non-negative");
    std::vector<SwingEvent> events;
    int side = 0;  // +1 player 1, -1 player 2, 0 not yet established
    for (std::size_t t = 0; t < series.values.size(); ++t) {
        const double v = series.values[t];
        if (side == 0) {
            if (v > hysteresis) side = 1;
            else if (v < -hysteresis) side = -1;
            continue;
        }
        if (side > 0 && v < -hysteresis) {
            events.push_back({t, SwingDirection::toward_p2, t > 0 ? series.values[t - 1] : 0.0, v});
            side = -1;
        } else if (side < 0 && v > hysteresis) {
            events.push_back({t, SwingDirection::toward_p1, t > 0 ? series.values[t - 1] : 0.0, v});
            side = 1;
        }
    }
    return events;
}

PerformanceMetrics performance_metric(const MomentumSeries& series) {
    PerformanceMetrics metrics;
    if (series.values.empty()) return metrics;
    std::size_t pos = 0, neg = 0;
    for (double v : series.values) {
        if (v > 0.0) {
            ++pos;
            metrics.p1.max_abs_momentum = std::max(metrics.p1.max_abs_momentum, v);
        } else if (v < 0.0) {
            ++neg;
            metrics.p2.max_abs_momentum = std::max(metrics.p2.max_abs_momentum, -v);
        }
    }
    const double total = static_cast<double>(series.values.size());
    metrics.p1.mean_signed_share = static_cast<double>(pos) / total;
    metrics.p2.mean_signed_share = static_cast<double>(neg) / total;
    return metrics;
}

MomentumSeries gaussian_baseline(std::size_t length, std::uint64_t seed, double sigma) {
    if (length == 0) throw DomainError("baseline length must be positive");
    if (sigma <= 0.0) throw DomainError("baseline sigma must be positive");
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist(0.0, sigma);
    MomentumSeries series;
    series.values.reserve(length);
    for (std::size_t i = 0; i < length; ++i)
        series.values.push_back(std::clamp(dist(gen), -2.0, 2.0));
    series.beta = 0.0;
    series.source = MomentumSource::gaussian_baseline;
    return series;
}

void write_momentum_csv(std::ostream& out, const MomentumSeries& series,
                        const MatchPointLog& log) {
    if (series.values.size() != log.points.size())
        throw DomainError("momentum series length differs from log length");
    out << "point_no,momentum,set_no,game_no\n";
    for (std::size_t t = 0; t < series.values.size(); ++t) {
        const PointRecord& r = log.points[t];
        nlohmann::json v = series.values[t];  // shortest round-trip double text
        out << r.point_no << ',' << v.dump() << ',' << r.set_no << ',' << r.game_no << '\n';
    }
}

std::string swings_to_json(const std::vector<SwingEvent>& events) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : events) {
        arr.push_back({{"point_index", e.point_index},
                       {"direction", e.direction == SwingDirection::toward_p1 ? "toward_p1"
                                                                              : "toward_p2"},
                       {"pre", e.pre_value},
                       {"post", e.post_value}});
    }
    return arr.dump(2);
}

std::string performance_to_json(const PerformanceMetrics& metrics) {
    nlohmann::json j;
    j["p1"] = {{"max_abs_momentum", metrics.p1.max_abs_momentum},
               {"mean_signed_share", metrics.p1.mean_signed_share}};
    j["p2"] = {{"max_abs_momentum", metrics.p2.max_abs_momentum},
               {"mean_signed_share", metrics.p2.mean_signed_share}};
    return j.dump(2);
}

}  // namespace matchflow::momentum
