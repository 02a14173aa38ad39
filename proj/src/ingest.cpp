#include "fanflow/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

namespace fanflow {

void Roster::rebuild_index() {
    index_.clear();
    for (size_t i = 0; i < entries.size(); ++i) index_[entries[i].channel] = i;
}

namespace {

std::string_view strip(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
        s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c += 32;
    return out;
}

// Splits a line on commas into at most `max_fields` pieces. Fields are plain
// (no quoting); returns the field count or 0 when the line is overlong.
size_t split_csv(std::string_view line, std::string_view* out, size_t max_fields) {
    size_t n = 0;
    size_t start = 0;
    for (size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            if (n == max_fields) return 0;
            out[n++] = strip(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return n;
}

bool parse_count(std::string_view s, uint32_t& out) {
    uint64_t v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || v < 1 || v > UINT32_MAX)
        return false;
    out = static_cast<uint32_t>(v);
    return true;
}

struct RawEvent {
    std::string_view user;
    std::string_view channel;
    int64_t ts;
    uint32_t count;
};

// Returns false when the line is malformed.
bool parse_csv_event(std::string_view line, RawEvent& ev) {
    std::string_view f[5];
    size_t n = split_csv(line, f, 5);
    if (n < 3 || n > 4) return false;
    if (f[0].empty() || f[1].empty()) return false;
    auto ts = parse_timestamp(f[2]);
    if (!ts) return false;
    uint32_t count = 1;
    if (n == 4 && !f[3].empty() && !parse_count(f[3], count)) return false;
    ev = {f[0], f[1], *ts, count};
    return true;
}

bool parse_jsonl_event(std::string_view line, RawEvent& ev, std::string& user_buf,
                       std::string& channel_buf) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) return false;
    auto u = j.find("user");
    auto c = j.find("channel");
    auto t = j.find("ts");
    if (u == j.end() || c == j.end() || t == j.end()) return false;
    if (!u->is_string() || !c->is_string()) return false;

    int64_t ts;
    if (t->is_number_integer()) {
        ts = t->get<int64_t>();
    } else if (t->is_string()) {
        auto parsed = parse_timestamp(t->get_ref<const std::string&>());
        if (!parsed) return false;
        ts = *parsed;
    } else {
        return false;
    }

    uint32_t count = 1;
    if (auto n = j.find("n"); n != j.end()) {
        if (!n->is_number_integer() || n->get<int64_t>() < 1 || n->get<int64_t>() > UINT32_MAX)
            return false;
        count = static_cast<uint32_t>(n->get<int64_t>());
    }

    user_buf = u->get<std::string>();
    channel_buf = c->get<std::string>();
    ev = {user_buf, channel_buf, ts, count};
    return true;
}

}  // namespace

ParseResult parse_events(std::istream& in, EventFormat format, const ParseOptions& opt) {
    if (!in.good()) throw IngestError("event stream unreadable");

    ParseResult res;
    std::string line, user_buf, channel_buf;
    bool header_skipped = false;
    uint64_t usable = 0;

    while (std::getline(in, line)) {
        std::string_view sv = strip(line);
        if (sv.empty()) continue;

        if (format == EventFormat::Csv && !header_skipped) {
            header_skipped = true;
            std::string_view f[5];
            size_t n = split_csv(sv, f, 5);
            if (n >= 3 && lower(f[0]) == "user" && lower(f[1]) == "channel") continue;
            // no header row; fall through and parse as data
        }

        ++res.report.lines;
        RawEvent ev;
        bool ok = format == EventFormat::Csv ? parse_csv_event(sv, ev)
                                             : parse_jsonl_event(sv, ev, user_buf, channel_buf);
        if (!ok) {
            ++res.report.malformed;
            continue;
        }
        ++usable;
        if (opt.window && !opt.window->contains(month_of_epoch(ev.ts))) {
            ++res.report.out_of_window;
            continue;
        }
        if (opt.roster && opt.roster->find(ev.channel) == nullptr) {
            ++res.report.unknown_channel;
            continue;
        }
        res.table.events.push_back({res.table.users.intern(ev.user),
                                    res.table.channels.intern(ev.channel), ev.ts, ev.count});
        ++res.report.parsed;
    }
    if (in.bad()) throw IngestError("I/O error while reading event stream");
    if (usable == 0) throw EmptyInputError("no well-formed events in input");
    return res;
}

ParseResult parse_events_file(const std::filesystem::path& path,
                              std::optional<EventFormat> format, const ParseOptions& opt) {
    if (!format) {
        auto ext = lower(path.extension().string());
        if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json")
            format = EventFormat::Jsonl;
        else if (ext == ".csv")
            format = EventFormat::Csv;
        else
            throw IngestError("cannot infer event format from extension: " + path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open events file: " + path.string());
    return parse_events(in, *format, opt);
}

Roster parse_roster(std::istream& in) {
    if (!in.good()) throw IngestError("roster stream unreadable");

    Roster roster;
    std::unordered_map<std::string, size_t> seen;
    std::string line;
    bool header_skipped = false;

    while (std::getline(in, line)) {
        std::string_view sv = strip(line);
        if (sv.empty()) continue;
        if (!header_skipped) {
            header_skipped = true;
            std::string_view f[5];
            size_t n = split_csv(sv, f, 5);
            if (n >= 2 && lower(f[0]) == "channel") continue;
        }
        std::string_view f[5];
        size_t n = split_csv(sv, f, 5);
        if (n < 2 || f[0].empty()) {
            ++roster.rejected_rows;
            continue;
        }
        std::string label = lower(f[1]);
        Affiliation aff;
        if (label == "agency")
            aff = Affiliation::Agency;
        else if (label == "independent")
            aff = Affiliation::Independent;
        else {
            ++roster.rejected_rows;
            continue;
        }
        RosterEntry entry{std::string(f[0]), aff, n > 2 ? std::string(f[2]) : "",
                          n > 3 ? std::string(f[3]) : ""};
        auto it = seen.find(entry.channel);
        if (it != seen.end()) {
            roster.entries[it->second] = std::move(entry);  // last wins
            ++roster.duplicate_warnings;
        } else {
            seen[entry.channel] = roster.entries.size();
            roster.entries.push_back(std::move(entry));
        }
    }
    if (in.bad()) throw IngestError("I/O error while reading roster stream");
    if (roster.entries.empty()) throw IngestError("roster is empty");
    roster.rebuild_index();
    return roster;
}

Roster parse_roster_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open roster file: " + path.string());
    return parse_roster(in);
}

namespace {

struct EventKey {
    uint64_t uc;
    int64_t ts;
    uint32_t count;
    bool operator==(const EventKey&) const = default;
};

struct EventKeyHash {
    size_t operator()(const EventKey& k) const {
        uint64_t h = k.uc * 0x9e3779b97f4a7c15ULL;
        h ^= static_cast<uint64_t>(k.ts) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h ^= static_cast<uint64_t>(k.count) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return static_cast<size_t>(h);
    }
};

}  // namespace

uint64_t dedupe(EventTable& table) {
    std::unordered_set<EventKey, EventKeyHash> seen;
    seen.reserve(table.events.size());
    size_t out = 0;
    for (const ChatEvent& e : table.events) {
        EventKey key{(static_cast<uint64_t>(e.user) << 32) | e.channel, e.ts, e.count};
        if (seen.insert(key).second) table.events[out++] = e;
    }
    uint64_t removed = table.events.size() - out;
    table.events.resize(out);
    return removed;
}

namespace {

void check_plain_token(const std::string& tok) {
    if (tok.find_first_of(",\"\r\n") != std::string::npos)
        throw IngestError("token not representable in plain CSV: " + tok);
}

}  // namespace

void write_events_csv(std::ostream& out, const EventTable& table) {
    out << "user,channel,ts,n\n";
    for (const ChatEvent& e : table.events) {
        const std::string& u = table.users.token(e.user);
        const std::string& c = table.channels.token(e.channel);
        check_plain_token(u);
        check_plain_token(c);
        out << u << ',' << c << ',' << format_timestamp(e.ts) << ',' << e.count << '\n';
    }
}

void write_events_jsonl(std::ostream& out, const EventTable& table) {
    for (const ChatEvent& e : table.events) {
        nlohmann::ordered_json j{{"user", table.users.token(e.user)},
                                 {"channel", table.channels.token(e.channel)},
                                 {"ts", format_timestamp(e.ts)},
                                 {"n", e.count}};
        out << j.dump() << '\n';
    }
}

void write_roster_csv(std::ostream& out, const Roster& roster) {
    out << "channel,affiliation,debut,gender\n";
    for (const RosterEntry& r : roster.entries) {
        check_plain_token(r.channel);
        out << r.channel << ',' << to_string(r.affiliation) << ',' << r.debut << ',' << r.gender
            << '\n';
    }
}

}  // namespace fanflow
