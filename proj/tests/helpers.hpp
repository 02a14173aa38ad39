#pragma once

// Small fixture builders shared by the unit and acceptance suites.

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fanflow/ingest.hpp"
#include "fanflow/panel.hpp"

namespace testutil {

inline fanflow::Roster make_roster(const std::vector<std::pair<std::string, std::string>>& rows) {
    std::string text = "channel,affiliation\n";
    for (const auto& [channel, label] : rows) text += channel + "," + label + "\n";
    std::istringstream in(text);
    return fanflow::parse_roster(in);
}

struct EventSpec {
    std::string user;
    std::string channel;
    std::string ts;  // ISO-8601
    uint32_t count = 1;
};

inline fanflow::EventTable make_events(const std::vector<EventSpec>& specs) {
    fanflow::EventTable t;
    for (const EventSpec& s : specs) {
        auto ts = fanflow::parse_timestamp(s.ts);
        if (!ts) throw std::runtime_error("fixture timestamp: " + s.ts);
        t.events.push_back({t.users.intern(s.user), t.channels.intern(s.channel), *ts, s.count});
    }
    return t;
}

// Random panel corpus: `n_users` fans, `n_channels` channels (half agency),
// `n_months` months starting 2023-01. Deterministic in the seed.
struct RandomCorpus {
    fanflow::EventTable events;
    fanflow::Roster roster;
    fanflow::MonthWindow window;
};

inline RandomCorpus random_corpus(uint64_t seed, uint32_t n_users, uint32_t n_channels,
                                  uint32_t n_months, double activity = 0.6,
                                  uint32_t max_channels_per_month = 3,
                                  uint32_t max_count = 4) {
    std::mt19937_64 rng(seed);
    RandomCorpus c;
    c.window = {fanflow::MonthKey{2023, 1},
                fanflow::MonthKey{2023, 1}.plus(static_cast<int64_t>(n_months) - 1)};

    std::vector<std::pair<std::string, std::string>> roster_rows;
    for (uint32_t i = 0; i < n_channels; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "ch%03u", i);
        roster_rows.emplace_back(buf, i % 2 == 0 ? "agency" : "independent");
    }
    c.roster = make_roster(roster_rows);

    for (uint32_t u = 0; u < n_users; ++u) {
        char ubuf[16];
        std::snprintf(ubuf, sizeof(ubuf), "u%04u", u);
        for (uint32_t m = 0; m < n_months; ++m) {
            if (std::uniform_real_distribution<>(0, 1)(rng) >= activity) continue;
            uint32_t k = 1 + static_cast<uint32_t>(rng() % max_channels_per_month);
            int64_t base = fanflow::month_start_epoch(c.window.from.plus(m));
            for (uint32_t e = 0; e < k; ++e) {
                uint32_t ch = static_cast<uint32_t>(rng() % n_channels);
                char cbuf[16];
                std::snprintf(cbuf, sizeof(cbuf), "ch%03u", ch);
                int64_t ts = base + static_cast<int64_t>(rng() % (27ll * 86400));
                uint32_t count = 1 + static_cast<uint32_t>(rng() % max_count);
                c.events.events.push_back({c.events.users.intern(ubuf),
                                           c.events.channels.intern(cbuf), ts, count});
            }
        }
    }
    return c;
}

}  // namespace testutil
