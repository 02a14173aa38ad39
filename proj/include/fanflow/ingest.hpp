#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "fanflow/interner.hpp"
#include "fanflow/month.hpp"

namespace fanflow {

struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyInputError : IngestError {
    using IngestError::IngestError;
};

enum class Affiliation : uint8_t { Independent = 0, Agency = 1 };

inline const char* to_string(Affiliation a) {
    return a == Affiliation::Agency ? "agency" : "independent";
}

// One deduplicated viewer-chat observation. Ids index the table's interners.
struct ChatEvent {
    uint32_t user = 0;
    uint32_t channel = 0;
    int64_t ts = 0;       // UTC epoch seconds
    uint32_t count = 1;   // >= 1

    friend bool operator==(const ChatEvent&, const ChatEvent&) = default;
};

struct EventTable {
    std::vector<ChatEvent> events;
    Interner users;
    Interner channels;

    bool operator==(const EventTable& o) const {
        return events == o.events && users == o.users && channels == o.channels;
    }
};

struct ParseReport {
    uint64_t lines = 0;
    uint64_t parsed = 0;
    uint64_t malformed = 0;
    uint64_t out_of_window = 0;
    uint64_t unknown_channel = 0;
    uint64_t duplicates_removed = 0;
};

struct RosterEntry {
    std::string channel;
    Affiliation affiliation = Affiliation::Independent;
    std::string debut;   // empty when absent
    std::string gender;  // empty when absent
};

struct Roster {
    std::vector<RosterEntry> entries;
    uint32_t duplicate_warnings = 0;
    uint32_t rejected_rows = 0;

    const RosterEntry* find(std::string_view channel) const {
        auto it = index_.find(std::string(channel));
        return it == index_.end() ? nullptr : &entries[it->second];
    }
    void rebuild_index();

private:
    std::unordered_map<std::string, size_t> index_;
};

enum class EventFormat { Jsonl, Csv };

struct ParseOptions {
    std::optional<MonthWindow> window;  // events outside are skipped and counted
    const Roster* roster = nullptr;     // events on unknown channels are skipped and counted
};

struct ParseResult {
    EventTable table;
    ParseReport report;
};

ParseResult parse_events(std::istream& in, EventFormat format, const ParseOptions& opt = {});
ParseResult parse_events_file(const std::filesystem::path& path,
                              std::optional<EventFormat> format = std::nullopt,
                              const ParseOptions& opt = {});

Roster parse_roster(std::istream& in);
Roster parse_roster_file(const std::filesystem::path& path);

// Collapses exact duplicates of (user, channel, ts, count), keeping the first
// occurrence; survivor order is preserved. Returns the number removed.
uint64_t dedupe(EventTable& table);

void write_events_csv(std::ostream& out, const EventTable& table);
void write_events_jsonl(std::ostream& out, const EventTable& table);
void write_roster_csv(std::ostream& out, const Roster& roster);

}  // namespace fanflow
