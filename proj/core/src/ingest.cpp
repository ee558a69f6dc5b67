#include "matchflow/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "matchflow/errors.hpp"

namespace matchflow::ingest {
namespace {

// Canonical fields, in the column order used when writing.
const std::vector<std::string>& canonical_fields() {
    static const std::vector<std::string> fields = {
        "match_id", "player1", "player2", "elapsed_time",
        "set_no", "game_no", "point_no", "server", "point_victor",
        "p1_sets", "p2_sets", "p1_games", "p2_games", "p1_score", "p2_score",
        "p1_ace", "p2_ace", "p1_double_fault", "p2_double_fault",
        "p1_winner", "p2_winner", "p1_unf_err", "p2_unf_err",
        "p1_net_pt", "p2_net_pt", "p1_net_pt_won", "p2_net_pt_won",
        "p1_break_pt", "p2_break_pt", "p1_break_pt_won", "p2_break_pt_won",
        "p1_break_pt_missed", "p2_break_pt_missed",
    };
    return fields;
}

const std::vector<std::string>& flag_fields() {
    static const std::vector<std::string> fields = {
        "p1_ace", "p2_ace", "p1_double_fault", "p2_double_fault",
        "p1_winner", "p2_winner", "p1_unf_err", "p2_unf_err",
        "p1_net_pt", "p2_net_pt", "p1_net_pt_won", "p2_net_pt_won",
        "p1_break_pt", "p2_break_pt", "p1_break_pt_won", "p2_break_pt_won",
        "p1_break_pt_missed", "p2_break_pt_missed",
    };
    return fields;
}

// Reads one CSV record (RFC-4180 quoting, LF or CRLF line ends).  Returns
// false at end of input.  `line` tracks the 1-based line the record starts on.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
    fields.clear();
    int c = in.get();
    if (c == EOF) return false;

    std::string field;
    bool in_quotes = false;
    const std::size_t start_line = line;
    while (true) {
        if (c == EOF) {
            if (in_quotes) throw ParseError("unterminated quoted field", start_line);
            fields.push_back(std::move(field));
            return true;
        }
        if (in_quotes) {
            if (c == '"') {
                int next = in.get();
                if (next == '"') {
                    field.push_back('"');
                } else {
                    in_quotes = false;
                    in.unget();
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(static_cast<char>(c));
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            ++line;
            if (!field.empty() && field.back() == '\r') field.pop_back();
            fields.push_back(std::move(field));
            return true;
        } else {
            field.push_back(static_cast<char>(c));
        }
        c = in.get();
    }
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::optional<long long> parse_int(const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) return std::nullopt;
    long long value = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size()) return std::nullopt;
    return value;
}

std::optional<bool> parse_bool(const std::string& text) {
    const std::string t = trim(text);
    if (t.empty() || t == "0" || t == "false" || t == "False" || t == "FALSE") return false;
    if (t == "1" || t == "true" || t == "True" || t == "TRUE") return true;
    return std::nullopt;
}

struct ColumnIndex {
    // canonical field -> position in the header, -1 when absent
    std::unordered_map<std::string, int> pos;

    int at(const std::string& field) const {
        auto it = pos.find(field);
        return it == pos.end() ? -1 : it->second;
    }
};

std::string format_elapsed(std::int64_t seconds) {
    const std::int64_t h = seconds / 3600;
    const std::int64_t m = (seconds % 3600) / 60;
    const std::int64_t s = seconds % 60;
    std::ostringstream out;
    out << h << ':' << (m < 10 ? "0" : "") << m << ':' << (s < 10 ? "0" : "") << s;
    return out.str();
}

void write_field(std::ostream& out, const std::string& value) {
    if (value.find_first_of(",\"\n\r") == std::string::npos) {
        out << value;
        return;
    }
    out << '"';
    for (char c : value) {
        if (c == '"') out << "\"\"";
        else out << c;
    }
    out << '"';
}

}  // namespace

CsvSchema::CsvSchema() {
    for (const auto& f : canonical_fields()) map_[f] = f;
}

CsvSchema CsvSchema::from_stream(std::istream& in) {
    CsvSchema schema;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError("schema line is not key=value", lineno);
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ParseError("schema line has empty key or value", lineno);
        schema.set(key, value);
    }
    return schema;
}

CsvSchema CsvSchema::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open schema file: " + path);
    return from_stream(in);
}

void CsvSchema::set(const std::string& canonical, const std::string& source_column) {
    if (std::find(canonical_fields().begin(), canonical_fields().end(), canonical) ==
        canonical_fields().end())
        throw DomainError("unknown canonical field in schema: " + canonical);
    map_[canonical] = source_column;
}

const std::string& CsvSchema::column(const std::string& canonical) const {
    auto it = map_.find(canonical);
    if (it == map_.end()) throw DomainError("unknown canonical field: " + canonical);
    return it->second;
}

std::optional<std::int64_t> parse_elapsed(const std::string& text) {
    // H:MM:SS with unpadded or 2-digit hours
    const std::string t = trim(text);
    int colons = 0;
    for (char c : t) {
        if (c == ':') ++colons;
        else if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    }
    if (colons != 2) return std::nullopt;
    const auto c1 = t.find(':');
    const auto c2 = t.find(':', c1 + 1);
    const std::string hs = t.substr(0, c1), ms = t.substr(c1 + 1, c2 - c1 - 1), ss = t.substr(c2 + 1);
    if (hs.empty() || hs.size() > 2 || ms.size() != 2 || ss.size() != 2) return std::nullopt;
    const auto h = parse_int(hs), m = parse_int(ms), s = parse_int(ss);
    if (!h || !m || !s || *m > 59 || *s > 59) return std::nullopt;
    return *h * 3600 + *m * 60 + *s;
}

ParsedMatches parse_match_csv(std::istream& source, const CsvSchema& schema) {
    std::vector<std::string> header;
    std::size_t line = 1;
    if (!read_record(source, header, line))
        throw SchemaError("empty input: no header row");

    ColumnIndex cols;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name = trim(header[i]);
        for (const auto& field : canonical_fields()) {
            if (schema.column(field) == name) cols.pos[field] = static_cast<int>(i);
        }
    }
    for (const char* mandatory : {"match_id", "point_no", "server", "point_victor"}) {
        if (cols.at(mandatory) < 0)
            throw SchemaError(std::string("mandatory column missing: ") + schema.column(mandatory));
    }

    ParsedMatches out;
    for (const auto& field : canonical_fields()) {
        if (cols.at(field) >= 0) continue;
        if (field == "match_id" || field == "player1" || field == "player2") continue;
        out.warnings.push_back({0, "column.missing",
                                "optional column '" + schema.column(field) + "' absent; using defaults"});
    }

    // match_id -> index into out.logs, preserving first-appearance order
    std::unordered_map<std::string, std::size_t> log_index;
    std::vector<std::string> record;
    std::size_t data_row = 0;

    auto cell = [&](const std::string& field) -> std::optional<std::string> {
        const int i = cols.at(field);
        if (i < 0 || static_cast<std::size_t>(i) >= record.size()) return std::nullopt;
        return record[static_cast<std::size_t>(i)];
    };

    while (true) {
        const std::size_t record_line = line;
        if (!read_record(source, record, line)) break;
        ++data_row;
        if (record.size() == 1 && trim(record[0]).empty()) continue;  // blank line
        if (record.size() != header.size()) {
            out.warnings.push_back({data_row, "row.field_count",
                                    "row at line " + std::to_string(record_line) + " has " +
                                        std::to_string(record.size()) + " fields, expected " +
                                        std::to_string(header.size()) + "; dropped"});
            continue;
        }

        PointRecord rec;
        bool dropped = false;
        auto drop = [&](const std::string& rule, const std::string& msg) {
            out.warnings.push_back({data_row, rule,
                                    msg + " (line " + std::to_string(record_line) + "); row dropped"});
            dropped = true;
        };

        rec.match_id = trim(*cell("match_id"));
        if (rec.match_id.empty()) drop("row.match_id", "empty match_id");

        auto read_required_int = [&](const char* field, int lo, int hi, int& dst) {
            if (dropped) return;
            const auto text = cell(field);
            const auto v = text ? parse_int(*text) : std::nullopt;
            if (!v || *v < lo || *v > hi)
                drop(std::string("row.") + field, std::string("bad ") + field + " value '" +
                                                      (text ? *text : "") + "'");
            else
                dst = static_cast<int>(*v);
        };
        read_required_int("point_no", 1, 1 << 30, rec.point_no);
        read_required_int("server", 1, 2, rec.server);
        read_required_int("point_victor", 1, 2, rec.point_victor);

        auto read_optional_int = [&](const char* field, int lo, int& dst) {
            if (dropped) return;
            const auto text = cell(field);
            if (!text) return;
            const auto v = parse_int(*text);
            if (!v || *v < lo)
                drop(std::string("row.") + field, std::string("bad ") + field + " value '" + *text + "'");
            else
                dst = static_cast<int>(*v);
        };
        read_optional_int("set_no", 1, rec.set_no);
        read_optional_int("game_no", 1, rec.game_no);
        read_optional_int("p1_sets", 0, rec.p1_sets);
        read_optional_int("p2_sets", 0, rec.p2_sets);
        read_optional_int("p1_games", 0, rec.p1_games);
        read_optional_int("p2_games", 0, rec.p2_games);

        if (!dropped) {
            if (const auto text = cell("elapsed_time")) {
                const auto secs = parse_elapsed(*text);
                if (!secs) drop("row.elapsed_time", "unparseable elapsed time '" + *text + "'");
                else rec.elapsed_seconds = *secs;
            }
        }
        if (!dropped) {
            if (const auto s = cell("p1_score")) rec.p1_score = trim(*s);
            if (const auto s = cell("p2_score")) rec.p2_score = trim(*s);
        }

        if (!dropped) {
            for (const auto& field : flag_fields()) {
                const auto text = cell(field);
                if (!text) continue;
                const auto b = parse_bool(*text);
                if (!b) {
                    drop("row." + field, "bad flag value '" + *text + "' in " + field);
                    break;
                }
                PlayerFlags& flags = (field[1] == '1') ? rec.p1 : rec.p2;
                const std::string name = field.substr(3);
                if (name == "ace") flags.ace = *b;
                else if (name == "double_fault") flags.double_fault = *b;
                else if (name == "winner") flags.winner = *b;
                else if (name == "unf_err") flags.unforced_error = *b;
                else if (name == "net_pt") flags.net_pt = *b;
                else if (name == "net_pt_won") flags.net_pt_won = *b;
                else if (name == "break_pt") flags.break_pt = *b;
                else if (name == "break_pt_won") flags.break_pt_won = *b;
                else if (name == "break_pt_missed") flags.break_pt_missed = *b;
            }
        }
        if (dropped) continue;

        auto it = log_index.find(rec.match_id);
        if (it == log_index.end()) {
            it = log_index.emplace(rec.match_id, out.logs.size()).first;
            MatchPointLog log;
            log.match_id = rec.match_id;
            const auto p1 = cell("player1"), p2 = cell("player2");
            log.player1_name = p1 ? trim(*p1) : "P1";
            log.player2_name = p2 ? trim(*p2) : "P2";
            if (log.player1_name.empty()) log.player1_name = "P1";
            if (log.player2_name.empty()) log.player2_name = "P2";
            out.logs.push_back(std::move(log));
        }
        out.logs[it->second].points.push_back(std::move(rec));
    }

    for (auto& log : out.logs) {
        std::stable_sort(log.points.begin(), log.points.end(),
                         [](const PointRecord& a, const PointRecord& b) {
                             return a.point_no < b.point_no;
                         });
    }
    return out;
}

ParsedMatches parse_match_csv_file(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open input file: " + path);
    return parse_match_csv(in, schema);
}

ValidationReport validate_log(const MatchPointLog& log) {
    ValidationReport report;
    report.record_count = log.points.size();
    auto error = [&](std::size_t row, const std::string& rule, const std::string& msg) {
        report.errors.push_back({row, rule, msg});
    };

    if (log.points.empty()) {
        error(0, "log.empty", "log has no points");
        return report;
    }

    for (std::size_t i = 0; i < log.points.size(); ++i) {
        const PointRecord& r = log.points[i];
        if (r.match_id != log.match_id)
            error(i, "log.match_id", "record match_id '" + r.match_id + "' differs from log '" +
                                         log.match_id + "'");
        if (i > 0) {
            const PointRecord& prev = log.points[i - 1];
            if (r.point_no <= prev.point_no)
                error(i, "point_no.monotone",
                      "point_no " + std::to_string(r.point_no) + " does not increase after " +
                          std::to_string(prev.point_no));
            if (r.elapsed_seconds < prev.elapsed_seconds)
                error(i, "elapsed.monotone",
                      "elapsed_seconds decreases at point " + std::to_string(r.point_no));
        }
        if (r.point_victor != 1 && r.point_victor != 2)
            error(i, "victor.range", "point_victor must be 1 or 2");
        if (r.server != 1 && r.server != 2)
            error(i, "server.range", "server must be 1 or 2");
        for (int player : {1, 2}) {
            const PlayerFlags& f = r.flags(player);
            const std::string who = "p" + std::to_string(player);
            if (f.net_pt_won && !f.net_pt)
                error(i, "flags.net_implies", who + "_net_pt_won set without " + who + "_net_pt");
            if (f.break_pt_won && !f.break_pt)
                error(i, "flags.break_implies", who + "_break_pt_won set without " + who + "_break_pt");
            if (f.break_pt_won && f.break_pt_missed)
                error(i, "flags.break_exclusive",
                      who + "_break_pt_won and " + who + "_break_pt_missed both set");
        }
    }
    return report;
}

void write_match_csv(std::ostream& out, const std::vector<MatchPointLog>& logs,
                     const CsvSchema& schema) {
    const auto& fields = canonical_fields();
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        write_field(out, schema.column(fields[i]));
    }
    out << '\n';

    auto flag = [](bool b) { return b ? "1" : "0"; };
    for (const auto& log : logs) {
        for (const auto& r : log.points) {
            std::vector<std::string> row;
            row.reserve(fields.size());
            row.push_back(r.match_id);
            row.push_back(log.player1_name);
            row.push_back(log.player2_name);
            row.push_back(format_elapsed(r.elapsed_seconds));
            row.push_back(std::to_string(r.set_no));
            row.push_back(std::to_string(r.game_no));
            row.push_back(std::to_string(r.point_no));
            row.push_back(std::to_string(r.server));
            row.push_back(std::to_string(r.point_victor));
            row.push_back(std::to_string(r.p1_sets));
            row.push_back(std::to_string(r.p2_sets));
            row.push_back(std::to_string(r.p1_games));
            row.push_back(std::to_string(r.p2_games));
            row.push_back(r.p1_score);
            row.push_back(r.p2_score);
            row.push_back(flag(r.p1.ace));
            row.push_back(flag(r.p2.ace));
            row.push_back(flag(r.p1.double_fault));
            row.push_back(flag(r.p2.double_fault));
            row.push_back(flag(r.p1.winner));
            row.push_back(flag(r.p2.winner));
            row.push_back(flag(r.p1.unforced_error));
            row.push_back(flag(r.p2.unforced_error));
            row.push_back(flag(r.p1.net_pt));
            row.push_back(flag(r.p2.net_pt));
            row.push_back(flag(r.p1.net_pt_won));
            row.push_back(flag(r.p2.net_pt_won));
            row.push_back(flag(r.p1.break_pt));
            row.push_back(flag(r.p2.break_pt));
            row.push_back(flag(r.p1.break_pt_won));
            row.push_back(flag(r.p2.break_pt_won));
            row.push_back(flag(r.p1.break_pt_missed));
            row.push_back(flag(r.p2.break_pt_missed));

            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out << ',';
                write_field(out, row[i]);
            }
            out << '\n';
        }
    }
}

void write_match_csv_file(const std::string& path, const std::vector<MatchPointLog>& logs,
                          const CsvSchema& schema) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DomainError("cannot open output file: " + path);
    write_match_csv(out, logs, schema);
}

}  // namespace matchflow::ingest
