#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "matchflow/hmm.hpp"
#include "matchflow/match_log.hpp"
#include "matchflow/observation.hpp"

namespace matchflow::momentum {

// v_t = beta*v_{t-1} + (1-beta)*theta_t.  beta = 0 disables smoothing.
struct EmaConfig {
    double beta = 0.9;  // in [0, 1); values >= 0.5 recommended
    double v0 = 0.0;
};

enum class MomentumSource { hmm_posterior, gaussian_baseline };

// Signed per-point momentum in [-2, 2]; positive means player 1 has the flow.
struct MomentumSeries {
    std::vector<double> values;
    bool positive_is_player1 = true;
    double beta = 0.9;
    MomentumSource source = MomentumSource::hmm_posterior;
};

enum class SwingDirection { toward_p1, toward_p2 };

struct SwingEvent {
    std::size_t point_index = 0;  // 0-based index into the series
    SwingDirection direction = SwingDirection::toward_p1;
    double pre_value = 0.0;       // series value just before the crossing
    double post_value = 0.0;      // series value at the crossing
};

struct PlayerPerformance {
    double max_abs_momentum = 0.0;
    double mean_signed_share = 0.0;  // fraction of points on this player's side
};

struct PerformanceMetrics {
    PlayerPerformance p1;
    PlayerPerformance p2;
};

std::vector<double> ema(std::span<const double> raw, const EmaConfig& config);

// raw_t = 2*(gamma[t, state(player1)] - gamma[t, state(player2)]), then EMA.
// state_to_player maps each hidden state index to 1 or 2; both players must
// appear.  Only two-state models are supported.
MomentumSeries momentum_from_posteriors(const hmm::PosteriorSet& post,
                                        const std::vector<int>& state_to_player,
                                        const EmaConfig& config);

// Resolves HMM label switching: the state whose emissions put more mass on
// symbols observed as player-1 wins maps to player 1.  Ties map state 0 to
// player 1.
std::vector<int> orient_states(const hmm::HmmModel& model, const MatchPointLog& log,
                               const ObservationSequence& obs);

// Sign crossings of the series beyond a hysteresis band; re-crossings are
// suppressed until the band is exited.  Events alternate in direction.
std::vector<SwingEvent> detect_swings(const MomentumSeries& series, double hysteresis = 0.05);

PerformanceMetrics performance_metric(const MomentumSeries& series);

// Independent N(0, sigma^2) draws clamped to [-2, 2]; deterministic per seed.
MomentumSeries gaussian_baseline(std::size_t length, std::uint64_t seed, double sigma = 0.5);

// CSV columns: point_no, momentum, set_no, game_no.  The log supplies the
// score context and must have the same length as the series.
void write_momentum_csv(std::ostream& out, const MomentumSeries& series,
                        const MatchPointLog& log);

// JSON list of {point_index, direction, pre, post}.
std::string swings_to_json(const std::vector<SwingEvent>& events);

std::string performance_to_json(const PerformanceMetrics& metrics);

}  // namespace matchflow::momentum
