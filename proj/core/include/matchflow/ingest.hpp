#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "matchflow/match_log.hpp"

namespace matchflow::ingest {

// Maps canonical field names to the column names used by a given source.
// Defaults follow the public grand-slam point-by-point files (match_id,
// elapsed_time, point_victor, p1_ace, p2_break_pt_won, ...).
class CsvSchema {
public:
    CsvSchema();  // default grand-slam column names

    // Overrides loaded from a key=value file ('#' comments, blank lines ok).
    // Keys are canonical field names; values are source column names.
    static CsvSchema from_file(const std::string& path);
    static CsvSchema from_stream(std::istream& in);

    void set(const std::string& canonical, const std::string& source_column);
    const std::string& column(const std::string& canonical) const;

    const std::map<std::string, std::string>& mapping() const { return map_; }

private:
    std::map<std::string, std::string> map_;
};

struct ParsedMatches {
    std::vector<MatchPointLog> logs;           // one per distinct match_id
    std::vector<Issue> warnings;               // dropped rows, defaulted flags
};

// "H:MM:SS" or "HH:MM:SS" -> seconds.  nullopt when not of that shape.
std::optional<std::int64_t> parse_elapsed(const std::string& text);

// Parses a point-by-point CSV into one log per match_id, points ordered by
// point_no.  Unknown columns are ignored; missing optional flag columns
// default to false with one warning per column.  Rows that fail row-level
// parsing are dropped and recorded as warnings.
//
// Throws ParseError on broken CSV framing, SchemaError when a mandatory
// column (match_id, point_no, server, point_victor) is absent.
ParsedMatches parse_match_csv(std::istream& source, const CsvSchema& schema = CsvSchema{});
ParsedMatches parse_match_csv_file(const std::string& path, const CsvSchema& schema = CsvSchema{});

// Checks every PointRecord invariant; violations are data, not faults.
ValidationReport validate_log(const MatchPointLog& log);

// Serializes logs back to the same CSV dialect parse_match_csv reads.
// parse(write(parse(x))) == parse(x) on accepted fields.
void write_match_csv(std::ostream& out, const std::vector<MatchPointLog>& logs,
                     const CsvSchema& schema = CsvSchema{});
void write_match_csv_file(const std::string& path, const std::vector<MatchPointLog>& logs,
                          const CsvSchema& schema = CsvSchema{});

}  // namespace matchflow::ingest
