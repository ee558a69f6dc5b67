#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace matchflow {

// Per-point boolean event flags, one set per player.
struct PlayerFlags {
    bool ace = false;
    bool double_fault = false;
    bool winner = false;
    bool unforced_error = false;
    bool net_pt = false;
    bool net_pt_won = false;
    bool break_pt = false;
    bool break_pt_won = false;
    bool break_pt_missed = false;

    bool operator==(const PlayerFlags&) const = default;
};

// One point of a match, in the grand-slam point-by-point vocabulary.
// Numeric standings (sets/games/score) are the state of the match as the
// point is recorded in the source data; they are carried through untouched.
struct PointRecord {
    std::string match_id;
    std::int64_t elapsed_seconds = 0;  // parsed from "H:MM:SS"
    int set_no = 1;
    int game_no = 1;
    int point_no = 1;
    int server = 1;        // 1 or 2
    int point_victor = 1;  // 1 or 2
    int p1_sets = 0;
    int p2_sets = 0;
    int p1_games = 0;
    int p2_games = 0;
    std::string p1_score = "0";  // game score tokens "0","15","30","40","AD"
    std::string p2_score = "0";
    PlayerFlags p1;
    PlayerFlags p2;

    const PlayerFlags& flags(int player) const { return player == 1 ? p1 : p2; }

    bool operator==(const PointRecord&) const = default;
};

// All points of one match, ordered by point_no.
struct MatchPointLog {
    std::string match_id;
    std::string player1_name;
    std::string player2_name;
    std::vector<PointRecord> points;

    bool operator==(const MatchPointLog&) const = default;
};

// One rule violation or oddity found in the data.  row is the 0-based index
// into MatchPointLog::points (or the CSV data row for parse-time issues).
struct Issue {
    std::size_t row = 0;
    std::string rule;
    std::string message;
};

struct ValidationReport {
    std::size_t record_count = 0;
    std::vector<Issue> errors;
    std::vector<Issue> warnings;

    bool accepted() const { return errors.empty(); }
};

}  // namespace matchflow
