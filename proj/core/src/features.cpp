#include "matchflow/features.hpp"

#include <ostream>

#include <json.hpp>

#include "matchflow/errors.hpp"

namespace matchflow::features {
namespace {

std::string dump_double(double v) {
    return nlohmann::json(v).dump();  // shortest text that round-trips
}

}  // namespace

const std::vector<std::string>& canonical_feature_names() {
    static const std::vector<std::string> names = {
        "elapsed_seconds",
        "p1_sets", "p2_sets",
        "p1_games", "p2_games",
        "p1_points_won", "p2_points_won",
        "p1_scoring_rate", "p2_scoring_rate",
        "p1_break_rate", "p2_break_rate",
        "p1_ace", "p2_ace",
        "p1_net_pt", "p2_net_pt",
        "p1_net_pt_won", "p2_net_pt_won",
        "p1_break_pt", "p2_break_pt",
        "is_server_p1", "serve_pct_p1",
    };
    return names;
}

std::vector<double> feature_vector(const FeatureRow& r) {
    return {
        static_cast<double>(r.elapsed_seconds),
        static_cast<double>(r.p1.sets), static_cast<double>(r.p2.sets),
        static_cast<double>(r.p1.games), static_cast<double>(r.p2.games),
        static_cast<double>(r.p1.points_won), static_cast<double>(r.p2.points_won),
        r.p1.scoring_rate, r.p2.scoring_rate,
        r.p1.break_rate, r.p2.break_rate,
        static_cast<double>(r.p1.aces), static_cast<double>(r.p2.aces),
        static_cast<double>(r.p1.net_pt), static_cast<double>(r.p2.net_pt),
        static_cast<double>(r.p1.net_pt_won), static_cast<double>(r.p2.net_pt_won),
        static_cast<double>(r.p1.break_pt), static_cast<double>(r.p2.break_pt),
        r.is_server_p1 ? 1.0 : 0.0,
        r.serve_pct_p1,
    };
}

FeatureTable accumulate_features(const MatchPointLog& log) {
    if (log.points.empty()) throw DomainError("cannot accumulate features of an empty log");

    FeatureTable table;
    table.feature_names = canonical_feature_names();
    table.label_source = log.match_id;
    table.rows.reserve(log.points.size());

    int won[3] = {0, 0, 0};          // cumulative points won, indexed by player
    int aces[3] = {0, 0, 0};
    int net_pt[3] = {0, 0, 0};
    int net_pt_won[3] = {0, 0, 0};
    int break_pt[3] = {0, 0, 0};     // break points held
    int break_pt_won[3] = {0, 0, 0};
    int served_by_p1 = 0;

    for (std::size_t i = 0; i < log.points.size(); ++i) {
        const PointRecord& rec = log.points[i];
        const int t = static_cast<int>(i) + 1;

        FeatureRow row;
        row.point_index = t;
        row.elapsed_seconds = rec.elapsed_seconds;
        row.is_server_p1 = rec.server == 1;
        row.point_victor = rec.point_victor;

        // pre-point rates over points 1..t-1
        auto fill_pre = [&](int player, PlayerCumulatives& c) {
            const int played = t - 1;
            c.scoring_rate = played > 0 ? static_cast<double>(won[player]) / played : 0.0;
            c.break_rate = break_pt[player] > 0
                               ? static_cast<double>(break_pt_won[player]) / break_pt[player]
                               : 0.0;
        };
        fill_pre(1, row.p1);
        fill_pre(2, row.p2);

        // post-point counters over points 1..t
        won[rec.point_victor] += 1;
        if (rec.server == 1) ++served_by_p1;
        for (int player : {1, 2}) {
            const PlayerFlags& f = rec.flags(player);
            aces[player] += f.ace ? 1 : 0;
            net_pt[player] += f.net_pt ? 1 : 0;
            net_pt_won[player] += f.net_pt_won ? 1 : 0;
            break_pt[player] += f.break_pt ? 1 : 0;
            break_pt_won[player] += f.break_pt_won ? 1 : 0;
        }

        auto fill_post = [&](int player, PlayerCumulatives& c) {
            c.points_won = won[player];
            c.aces = aces[player];
            c.net_pt = net_pt[player];
            c.net_pt_won = net_pt_won[player];
            c.break_pt = break_pt[player];
        };
        fill_post(1, row.p1);
        fill_post(2, row.p2);

        row.p1.sets = rec.p1_sets;
        row.p2.sets = rec.p2_sets;
        row.p1.games = rec.p1_games;
        row.p2.games = rec.p2_games;
        row.serve_pct_p1 = static_cast<double>(served_by_p1) / t;

        table.rows.push_back(row);
    }
    return table;
}

ObservationCodec ObservationCodec::winner_server() {
    return ObservationCodec(CodecMode::winner_server, 4);
}

ObservationCodec ObservationCodec::winner_server_break() {
    return ObservationCodec(CodecMode::winner_server_break, 8);
}

ObservationCodec ObservationCodec::custom(const std::array<int, 8>& table, int symbol_count) {
    if (symbol_count < 2) throw DomainError("custom codec needs at least 2 symbols");
    ObservationCodec codec(CodecMode::custom, symbol_count);
    codec.table_ = table;
    return codec;
}

ObservationCodec ObservationCodec::from_name(const std::string& name) {
    if (name == "winner_server") return winner_server();
    if (name == "winner_server_break") return winner_server_break();
    throw DomainError("unknown observation codec: " + name);
}

int ObservationCodec::encode(const PointRecord& record) const {
    if (record.point_victor != 1 && record.point_victor != 2)
        throw DomainError("point_victor must be 1 or 2");
    if (record.server != 1 && record.server != 2)
        throw DomainError("server must be 1 or 2");
    const int victor_bit = record.point_victor - 1;
    const int server_bit = record.server - 1;
    // only the receiver can hold a break point
    const bool on_break = record.server == 1 ? record.p2.break_pt : record.p1.break_pt;

    switch (mode_) {
        case CodecMode::winner_server:
            return 2 * victor_bit + server_bit;
        case CodecMode::winner_server_break:
            return 4 * (on_break ? 1 : 0) + 2 * victor_bit + server_bit;
        case CodecMode::custom: {
            const int key = victor_bit | (server_bit << 1) | ((on_break ? 1 : 0) << 2);
            const int sym = table_[static_cast<std::size_t>(key)];
            if (sym < 0 || sym >= symbol_count_)
                throw DomainError("custom codec has no symbol for combination victor=" +
                                  std::to_string(record.point_victor) + " server=" +
                                  std::to_string(record.server) + " break=" +
                                  std::to_string(on_break ? 1 : 0));
            return sym;
        }
    }
    throw DomainError("unreachable codec mode");
}

ObservationSequence encode_observations(const MatchPointLog& log, const ObservationCodec& codec) {
    if (log.points.empty()) throw DomainError("cannot encode an empty log");
    ObservationSequence seq;
    seq.symbol_count = codec.symbol_count();
    seq.symbols.reserve(log.points.size());
    for (const auto& rec : log.points) seq.symbols.push_back(codec.encode(rec));
    return seq;
}

TrainingData build_training_matrix(const FeatureTable& table,
                                   const momentum::MomentumSeries* momentum_series,
                                   TrainingTarget target, double hysteresis) {
    const std::size_t T = table.rows.size();
    if (T == 0) throw DomainError("feature table is empty");
    if (momentum_series && momentum_series->values.size() != T)
        throw DomainError("momentum series length " +
                          std::to_string(momentum_series->values.size()) +
                          " differs from table length " + std::to_string(T));
    if ((target == TrainingTarget::momentum_value || target == TrainingTarget::swing_flag) &&
        !momentum_series)
        throw DomainError("this target requires a momentum series");

    const bool append_momentum =
        momentum_series != nullptr && target != TrainingTarget::momentum_value;
    const bool drop_last = target != TrainingTarget::momentum_value;
    if (drop_last && T < 2)
        throw DomainError("need at least 2 points for a next-point target");

    TrainingData data;
    data.feature_names = table.feature_names;
    if (append_momentum) data.feature_names.push_back("momentum");

    const std::size_t rows = drop_last ? T - 1 : T;
    const std::size_t cols = data.feature_names.size();
    data.matrix = NumericMatrix(rows, cols);
    data.labels.resize(rows);

    std::vector<char> swing_at(T, 0);
    if (target == TrainingTarget::swing_flag) {
        for (const auto& e : momentum::detect_swings(*momentum_series, hysteresis))
            swing_at[e.point_index] = 1;
    }

    for (std::size_t t = 0; t < rows; ++t) {
        const std::vector<double> base = feature_vector(table.rows[t]);
        std::copy(base.begin(), base.end(), data.matrix.row(t).begin());
        if (append_momentum) data.matrix.at(t, cols - 1) = momentum_series->values[t];

        switch (target) {
            case TrainingTarget::next_point_victor:
                data.labels[t] = table.rows[t + 1].point_victor == 1 ? 1.0 : 0.0;
                break;
            case TrainingTarget::momentum_value:
                data.labels[t] = momentum_series->values[t];
                break;
            case TrainingTarget::swing_flag:
                data.labels[t] = swing_at[t + 1] ? 1.0 : 0.0;
                break;
        }
    }
    return data;
}

void write_feature_csv(std::ostream& out, const FeatureTable& table) {
    out << "point_index";
    for (const auto& name : table.feature_names) out << ',' << name;
    out << '\n';
    for (const auto& row : table.rows) {
        out << row.point_index;
        for (double v : feature_vector(row)) out << ',' << dump_double(v);
        out << '\n';
    }
}

void write_observation_csv(std::ostream& out, const ObservationSequence& seq) {
    out << "symbol\n";
    for (int s : seq.symbols) out << s << '\n';
}

}  // namespace matchflow::features
