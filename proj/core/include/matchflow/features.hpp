#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "matchflow/match_log.hpp"
#include "matchflow/matrix.hpp"
#include "matchflow/momentum.hpp"
#include "matchflow/observation.hpp"

namespace matchflow::features {

// Running indicators for one player after (or before, for the rates) a point.
struct PlayerCumulatives {
    int points_won = 0;        // through the current point
    double scoring_rate = 0.0; // over points 1..t-1 (pre-point predictor)
    double break_rate = 0.0;   // break points won / faced over 1..t-1, 0 when none
    int sets = 0;              // standing as recorded on the point
    int games = 0;
    int aces = 0;              // cumulative counters through the current point
    int net_pt = 0;
    int net_pt_won = 0;
    int break_pt = 0;
};

struct FeatureRow {
    int point_index = 0;  // 1-based
    std::int64_t elapsed_seconds = 0;
    PlayerCumulatives p1;
    PlayerCumulatives p2;
    bool is_server_p1 = false;
    double serve_pct_p1 = 0.0;  // fraction of points 1..t served by player 1
    int point_victor = 1;       // outcome of this point; label material, never a feature
};

struct FeatureTable {
    std::vector<FeatureRow> rows;
    std::vector<std::string> feature_names;  // canonical numeric column order
    std::string label_source;                // match_id of the source log
};

// The fixed numeric column order shared by the matrix, the CSV export and
// the model feature names.
const std::vector<std::string>& canonical_feature_names();
std::vector<double> feature_vector(const FeatureRow& row);

enum class CodecMode { winner_server, winner_server_break, custom };

// Total mapping from a point to a symbol in [0, M).
// Bit layout: bit0 = server-1, bit1 = victor-1, bit2 = break point (M=8 mode).
class ObservationCodec {
public:
    static ObservationCodec winner_server();        // M = 4
    static ObservationCodec winner_server_break();  // M = 8
    // keys: (victor-1) | (server-1)<<1 | break<<2 -> symbol; all 8 required
    static ObservationCodec custom(const std::array<int, 8>& table, int symbol_count);
    static ObservationCodec from_name(const std::string& name);  // "winner_server" | "winner_server_break"

    CodecMode mode() const { return mode_; }
    int symbol_count() const { return symbol_count_; }
    int encode(const PointRecord& record) const;

private:
    ObservationCodec(CodecMode mode, int symbol_count) : mode_(mode), symbol_count_(symbol_count) {}
    CodecMode mode_;
    int symbol_count_;
    std::array<int, 8> table_{};
};

enum class TrainingTarget { next_point_victor, momentum_value, swing_flag };

struct TrainingData {
    NumericMatrix matrix;
    std::vector<double> labels;
    std::vector<std::string> feature_names;
};

// Row t holds totals over points 1..t (counters) and rates over 1..t-1.
FeatureTable accumulate_features(const MatchPointLog& log);

ObservationSequence encode_observations(const MatchPointLog& log, const ObservationCodec& codec);

// Assembles the numeric design matrix.
//  - next_point_victor: label_t = 1 when player 1 wins point t+1; the final
//    row is dropped.  A provided momentum series is appended as a feature.
//  - momentum_value: labels are the series values; the series is the target
//    and is not appended.
//  - swing_flag: label_t = 1 when a swing lands on point t+1 (per
//    detect_swings at `hysteresis`); final row dropped; momentum appended.
TrainingData build_training_matrix(const FeatureTable& table,
                                   const momentum::MomentumSeries* momentum_series,
                                   TrainingTarget target, double hysteresis = 0.05);

// CSV with point_index followed by the canonical feature columns.
void write_feature_csv(std::ostream& out, const FeatureTable& table);

// Single integer column under a "symbol" header.
void write_observation_csv(std::ostream& out, const ObservationSequence& seq);

}  // namespace matchflow::features
