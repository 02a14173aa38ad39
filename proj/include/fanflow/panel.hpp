#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fanflow/ingest.hpp"
#include "fanflow/month.hpp"

namespace fanflow {

struct PanelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One nonzero cell of the sparse fan-month count tensor.
struct PanelCell {
    uint32_t user;
    uint32_t month;    // 0-based offset inside the window
    uint32_t channel;
    uint64_t count;    // > 0
};

struct PanelReport {
    uint64_t events_total = 0;
    uint64_t events_used = 0;
    uint64_t out_of_window = 0;
    uint64_t unknown_channel = 0;
    uint64_t total_messages = 0;  // sum of counts over used events
    uint64_t cells = 0;
};

struct RunLengths {
    uint32_t current = 0;  // streak ending at the queried month
    uint32_t longest = 0;  // best streak anywhere in the window
};

struct RetentionRate {
    uint64_t evaluable = 0;
    uint64_t retained = 0;
    double rate = 0.0;
};

// Immutable fan-month panel. All metric accessors are pure reads and safe
// for concurrent callers.
class FanMonthPanel {
public:
    static FanMonthPanel build(const EventTable& events, const Roster& roster,
                               MonthWindow window, PanelReport* report = nullptr);

    const MonthWindow& window() const { return window_; }
    uint32_t n_months() const { return static_cast<uint32_t>(window_.n_months()); }
    uint32_t n_users() const { return n_users_; }
    uint32_t n_channels() const { return static_cast<uint32_t>(channel_tokens_.size()); }
    uint64_t total_messages() const { return total_messages_; }

    const std::string& user_token(uint32_t u) const { return user_tokens_[u]; }
    const std::string& channel_token(uint32_t c) const { return channel_tokens_[c]; }
    std::optional<uint32_t> find_user(std::string_view token) const;
    std::optional<uint32_t> find_channel(std::string_view token) const;

    bool channel_tracked(uint32_t c) const { return tracked_[c]; }
    Affiliation affiliation(uint32_t c) const { return affiliation_[c]; }
    // Position of the channel token in bytewise lexicographic order; used for
    // deterministic oshi tie-breaks independent of ingest order.
    uint32_t lex_rank(uint32_t c) const { return lex_rank_[c]; }

    int64_t month_rel(MonthKey m) const {
        return window_.contains(m) ? m.ordinal() - window_.from.ordinal() : -1;
    }
    MonthKey month_at(uint32_t rel) const { return window_.from.plus(rel); }

    bool active(uint32_t user, MonthKey m) const;
    bool active_rel(uint32_t user, uint32_t rel) const {
        return activity_[static_cast<size_t>(user) * words_per_user_ + (rel >> 6)] >>
                   (rel & 63) &
               1;
    }

    uint64_t count(uint32_t user, uint32_t channel, MonthKey m) const;

    // Channel receiving the largest share of the user's messages in m; ties
    // go to the lexicographically smallest channel token. Absent iff the
    // user is inactive in m.
    std::optional<uint32_t> oshi(uint32_t user, MonthKey m) const;

    // Rolling retention: 1 iff active in every month m+1..m+k. Absent when
    // the user is inactive at m or m+k leaves the window.
    std::optional<bool> retention(uint32_t user, MonthKey m, int k) const;

    // Oshi change between m and m+1; absent unless active in both months.
    std::optional<bool> oshi_switch(uint32_t user, MonthKey m) const;

    RunLengths run_lengths(uint32_t user, MonthKey m) const;

    // Mean retention over evaluable fans whose month-m oshi is in `segment`.
    // Absent when no fan is evaluable.
    std::optional<RetentionRate> retention_rate(Affiliation segment, MonthKey m, int k) const;

    std::span<const PanelCell> user_cells(uint32_t user) const;
    std::span<const PanelCell> user_month_cells(uint32_t user, uint32_t rel) const;
    // Sorted by (user, lex rank); one cell per (user, channel).
    std::span<const PanelCell> month_cells(uint32_t rel) const;

private:
    MonthWindow window_{};
    uint32_t n_users_ = 0;
    uint64_t total_messages_ = 0;
    size_t words_per_user_ = 1;

    std::vector<std::string> user_tokens_;
    std::vector<std::string> channel_tokens_;
    std::vector<bool> tracked_;
    std::vector<Affiliation> affiliation_;
    std::vector<uint32_t> lex_rank_;

    std::vector<PanelCell> cells_;        // sorted (user, month, lex rank)
    std::vector<size_t> user_offsets_;    // n_users_ + 1
    std::vector<PanelCell> mcells_;       // sorted (month, user, lex rank)
    std::vector<size_t> month_offsets_;   // n_months + 1
    std::vector<uint64_t> activity_;      // packed bits, words_per_user_ per user

    std::optional<uint32_t> oshi_from_group(std::span<const PanelCell> group) const;

    friend struct PanelAccess;
};

// ---- creator-level aggregates ---------------------------------------------

// Per-creator means of creator-month means, the aggregation order fixed as
// fan -> creator-month -> creator. Each metric is absent when the creator
// had no contributing month.
struct CreatorMetricsRow {
    uint32_t channel = 0;
    Affiliation affiliation = Affiliation::Independent;
    std::optional<double> retention2;
    std::optional<double> retention3;
    std::optional<double> switch_prob;
    std::optional<double> longest_run;
    std::optional<double> current_run;
};

std::vector<CreatorMetricsRow> creator_commitment_table(const FanMonthPanel& panel);

struct RetentionRateRow {
    Affiliation segment;
    MonthKey month;
    int k;
    uint64_t evaluable;
    uint64_t retained;
};

std::vector<RetentionRateRow> retention_rate_table(const FanMonthPanel& panel,
                                                   std::span<const int> horizons);

void write_retention_csv(std::ostream& out, const FanMonthPanel& panel,
                         std::span<const int> horizons);
void write_creator_metrics_csv(std::ostream& out, const FanMonthPanel& panel);

}  // namespace fanflow
