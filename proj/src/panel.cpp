#include "fanflow/panel.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <numeric>
#include <ostream>

#include "fanflow/format.hpp"

namespace fanflow {

FanMonthPanel FanMonthPanel::build(const EventTable& events, const Roster& roster,
                                   MonthWindow window, PanelReport* report) {
    if (!window.valid()) throw PanelError("empty panel window");

    FanMonthPanel p;
    p.window_ = window;
    p.n_users_ = events.users.size();

    const uint32_t n_channels = events.channels.size();
    p.channel_tokens_.reserve(n_channels);
    for (uint32_t c = 0; c < n_channels; ++c) p.channel_tokens_.push_back(events.channels.token(c));
    p.user_tokens_.reserve(p.n_users_);
    for (uint32_t u = 0; u < p.n_users_; ++u) p.user_tokens_.push_back(events.users.token(u));

    p.tracked_.assign(n_channels, false);
    p.affiliation_.assign(n_channels, Affiliation::Independent);
    for (uint32_t c = 0; c < n_channels; ++c) {
        if (const RosterEntry* e = roster.find(p.channel_tokens_[c])) {
            p.tracked_[c] = true;
            p.affiliation_[c] = e->affiliation;
        }
    }

    // Bytewise lexicographic rank of each channel token.
    std::vector<uint32_t> order(n_channels);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
        return p.channel_tokens_[a] < p.channel_tokens_[b];
    });
    p.lex_rank_.assign(n_channels, 0);
    for (uint32_t r = 0; r < n_channels; ++r) p.lex_rank_[order[r]] = r;

    PanelReport rep;
    rep.events_total = events.events.size();

    const int64_t from_ord = window.from.ordinal();
    const int64_t n_months = window.n_months();
    std::vector<PanelCell> raw;
    raw.reserve(events.events.size());
    for (const ChatEvent& e : events.events) {
        int64_t rel = month_of_epoch(e.ts).ordinal() - from_ord;
        if (rel < 0 || rel >= n_months) {
            ++rep.out_of_window;
            continue;
        }
        if (!p.tracked_[e.channel]) {
            ++rep.unknown_channel;
            continue;
        }
        raw.push_back({e.user, static_cast<uint32_t>(rel), e.channel, e.count});
        ++rep.events_used;
        rep.total_messages += e.count;
    }

    auto user_major = [&](const PanelCell& a, const PanelCell& b) {
        if (a.user != b.user) return a.user < b.user;
        if (a.month != b.month) return a.month < b.month;
        return p.lex_rank_[a.channel] < p.lex_rank_[b.channel];
    };
    std::sort(raw.begin(), raw.end(), user_major);

    p.cells_.reserve(raw.size());
    for (const PanelCell& c : raw) {
        if (!p.cells_.empty()) {
            PanelCell& last = p.cells_.back();
            if (last.user == c.user && last.month == c.month && last.channel == c.channel) {
                last.count += c.count;
                continue;
            }
        }
        p.cells_.push_back(c);
    }
    raw.clear();
    raw.shrink_to_fit();

    p.mcells_ = p.cells_;
    std::sort(p.mcells_.begin(), p.mcells_.end(), [&](const PanelCell& a, const PanelCell& b) {
        if (a.month != b.month) return a.month < b.month;
        if (a.user != b.user) return a.user < b.user;
        return p.lex_rank_[a.channel] < p.lex_rank_[b.channel];
    });

    p.user_offsets_.assign(p.n_users_ + 1, 0);
    for (const PanelCell& c : p.cells_) ++p.user_offsets_[c.user + 1];
    for (size_t u = 0; u < p.n_users_; ++u) p.user_offsets_[u + 1] += p.user_offsets_[u];

    p.month_offsets_.assign(n_months + 1, 0);
    for (const PanelCell& c : p.mcells_) ++p.month_offsets_[c.month + 1];
    for (int64_t m = 0; m < n_months; ++m) p.month_offsets_[m + 1] += p.month_offsets_[m];

    p.words_per_user_ = static_cast<size_t>((n_months + 63) / 64);
    p.activity_.assign(p.words_per_user_ * p.n_users_, 0);
    for (const PanelCell& c : p.cells_)
        p.activity_[c.user * p.words_per_user_ + (c.month >> 6)] |= uint64_t{1} << (c.month & 63);

    p.total_messages_ = rep.total_messages;
    rep.cells = p.cells_.size();
    if (report) *report = rep;
    return p;
}

std::optional<uint32_t> FanMonthPanel::find_user(std::string_view token) const {
    for (uint32_t u = 0; u < n_users_; ++u)
        if (user_tokens_[u] == token) return u;
    return std::nullopt;
}

std::optional<uint32_t> FanMonthPanel::find_channel(std::string_view token) const {
    for (uint32_t c = 0; c < channel_tokens_.size(); ++c)
        if (channel_tokens_[c] == token) return c;
    return std::nullopt;
}

std::span<const PanelCell> FanMonthPanel::user_cells(uint32_t user) const {
    if (user >= n_users_) return {};
    return {cells_.data() + user_offsets_[user], user_offsets_[user + 1] - user_offsets_[user]};
}

std::span<const PanelCell> FanMonthPanel::user_month_cells(uint32_t user, uint32_t rel) const {
    auto span = user_cells(user);
    auto lo = std::lower_bound(span.begin(), span.end(), rel,
                               [](const PanelCell& c, uint32_t m) { return c.month < m; });
    auto hi = std::upper_bound(lo, span.end(), rel,
                               [](uint32_t m, const PanelCell& c) { return m < c.month; });
    return {lo, hi};
}

std::span<const PanelCell> FanMonthPanel::month_cells(uint32_t rel) const {
    if (rel >= n_months()) return {};
    return {mcells_.data() + month_offsets_[rel], month_offsets_[rel + 1] - month_offsets_[rel]};
}

bool FanMonthPanel::active(uint32_t user, MonthKey m) const {
    int64_t rel = month_rel(m);
    if (rel < 0 || user >= n_users_) return false;
    return active_rel(user, static_cast<uint32_t>(rel));
}

uint64_t FanMonthPanel::count(uint32_t user, uint32_t channel, MonthKey m) const {
    int64_t rel = month_rel(m);
    if (rel < 0 || user >= n_users_) return 0;
    for (const PanelCell& c : user_month_cells(user, static_cast<uint32_t>(rel)))
        if (c.channel == channel) return c.count;
    return 0;
}

std::optional<uint32_t> FanMonthPanel::oshi_from_group(std::span<const PanelCell> group) const {
    if (group.empty()) return std::nullopt;
    // Group is ordered by lex rank, so on ties the first max wins.
    const PanelCell* best = &group[0];
    for (const PanelCell& c : group.subspan(1))
        if (c.count > best->count) best = &c;
    return best->channel;
}

std::optional<uint32_t> FanMonthPanel::oshi(uint32_t user, MonthKey m) const {
    int64_t rel = month_rel(m);
    if (rel < 0 || user >= n_users_) return std::nullopt;
    return oshi_from_group(user_month_cells(user, static_cast<uint32_t>(rel)));
}

std::optional<bool> FanMonthPanel::retention(uint32_t user, MonthKey m, int k) const {
    if (k < 0) return std::nullopt;
    int64_t rel = month_rel(m);
    if (rel < 0 || user >= n_users_ || !active_rel(user, static_cast<uint32_t>(rel)))
        return std::nullopt;
    if (!window_.contains(m.plus(k))) return std::nullopt;
    for (int t = 1; t <= k; ++t)
        if (!active_rel(user, static_cast<uint32_t>(rel + t))) return false;
    return true;
}

std::optional<bool> FanMonthPanel::oshi_switch(uint32_t user, MonthKey m) const {
    int64_t rel = month_rel(m);
    if (rel < 0 || user >= n_users_ || !window_.contains(m.plus(1))) return std::nullopt;
    auto cur = oshi_from_group(user_month_cells(user, static_cast<uint32_t>(rel)));
    auto next = oshi_from_group(user_month_cells(user, static_cast<uint32_t>(rel + 1)));
    if (!cur || !next) return std::nullopt;
    return *cur != *next;
}

RunLengths FanMonthPanel::run_lengths(uint32_t user, MonthKey m) const {
    RunLengths rl;
    if (user >= n_users_) return rl;
    const uint32_t months = n_months();
    uint32_t streak = 0;
    int64_t rel = month_rel(m);
    for (uint32_t t = 0; t < months; ++t) {
        if (active_rel(user, t)) {
            ++streak;
            rl.longest = std::max(rl.longest, streak);
        } else {
            streak = 0;
        }
        if (rel >= 0 && t == static_cast<uint32_t>(rel)) rl.current = streak;
    }
    return rl;
}

std::optional<RetentionRate> FanMonthPanel::retention_rate(Affiliation segment, MonthKey m,
                                                           int k) const {
    int64_t rel = month_rel(m);
    if (rel < 0 || !window_.contains(m.plus(k)) || k < 0) return std::nullopt;

    RetentionRate rr;
    auto cells = month_cells(static_cast<uint32_t>(rel));
    size_t i = 0;
    while (i < cells.size()) {
        size_t j = i;
        while (j < cells.size() && cells[j].user == cells[i].user) ++j;
        auto o = oshi_from_group(cells.subspan(i, j - i));
        if (o && affiliation_[*o] == segment) {
            ++rr.evaluable;
            bool kept = true;
            for (int t = 1; t <= k && kept; ++t)
                kept = active_rel(cells[i].user, static_cast<uint32_t>(rel + t));
            rr.retained += kept;
        }
        i = j;
    }
    if (rr.evaluable == 0) return std::nullopt;
    rr.rate = static_cast<double>(rr.retained) / static_cast<double>(rr.evaluable);
    return rr;
}

// ---- creator-level aggregates ---------------------------------------------

namespace {

struct MeanAcc {
    double sum = 0;
    uint64_t n = 0;
    void add(double v) {
        sum += v;
        ++n;
    }
    std::optional<double> mean() const {
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    }
};

constexpr int kRet2 = 0, kRet3 = 1, kSwitch = 2, kLongest = 3, kCurrent = 4, kNMetrics = 5;

}  // namespace

std::vector<CreatorMetricsRow> creator_commitment_table(const FanMonthPanel& panel) {
    const uint32_t n_channels = panel.n_channels();
    const uint32_t months = panel.n_months();

    std::vector<std::array<MeanAcc, kNMetrics>> creator(n_channels);
    std::vector<std::array<MeanAcc, kNMetrics>> month_acc(n_channels);
    std::vector<uint32_t> dirty;

    std::vector<int64_t> longest_cache(panel.n_users(), -1);
    auto longest_of = [&](uint32_t u) {
        if (longest_cache[u] < 0)
            longest_cache[u] = panel.run_lengths(u, panel.window().from).longest;
        return static_cast<double>(longest_cache[u]);
    };

    for (uint32_t m = 0; m < months; ++m) {
        dirty.clear();
        auto cells = panel.month_cells(m);
        size_t i = 0;
        while (i < cells.size()) {
            size_t j = i;
            const uint32_t user = cells[i].user;
            while (j < cells.size() && cells[j].user == user) ++j;

            const PanelCell* best = &cells[i];
            for (size_t t = i + 1; t < j; ++t)
                if (cells[t].count > best->count) best = &cells[t];
            const uint32_t c = best->channel;
            // kLongest is fed for every fan, so it marks first touch.
            if (month_acc[c][kLongest].n == 0) dirty.push_back(c);

            if (m + 2 < months) {
                bool kept = panel.active_rel(user, m + 1) && panel.active_rel(user, m + 2);
                month_acc[c][kRet2].add(kept ? 1.0 : 0.0);
            }
            if (m + 3 < months) {
                bool kept = panel.active_rel(user, m + 1) && panel.active_rel(user, m + 2) &&
                            panel.active_rel(user, m + 3);
                month_acc[c][kRet3].add(kept ? 1.0 : 0.0);
            }
            if (m + 1 < months && panel.active_rel(user, m + 1)) {
                auto next = panel.oshi(user, panel.month_at(m + 1));
                month_acc[c][kSwitch].add(*next != c ? 1.0 : 0.0);
            }
            month_acc[c][kLongest].add(longest_of(user));

            uint32_t cur = 0;
            for (int64_t t = m; t >= 0 && panel.active_rel(user, static_cast<uint32_t>(t)); --t)
                ++cur;
            month_acc[c][kCurrent].add(static_cast<double>(cur));

            i = j;
        }
        for (uint32_t c : dirty) {
            for (int metric = 0; metric < kNMetrics; ++metric) {
                if (auto v = month_acc[c][metric].mean()) creator[c][metric].add(*v);
                month_acc[c][metric] = MeanAcc{};
            }
        }
    }

    std::vector<uint32_t> order;
    for (uint32_t c = 0; c < n_channels; ++c) {
        bool any = false;
        for (int metric = 0; metric < kNMetrics; ++metric) any = any || creator[c][metric].n > 0;
        if (any) order.push_back(c);
    }
    std::sort(order.begin(), order.end(),
              [&](uint32_t a, uint32_t b) { return panel.lex_rank(a) < panel.lex_rank(b); });

    std::vector<CreatorMetricsRow> rows;
    rows.reserve(order.size());
    for (uint32_t c : order) {
        CreatorMetricsRow row;
        row.channel = c;
        row.affiliation = panel.affiliation(c);
        row.retention2 = creator[c][kRet2].mean();
        row.retention3 = creator[c][kRet3].mean();
        row.switch_prob = creator[c][kSwitch].mean();
        row.longest_run = creator[c][kLongest].mean();
        row.current_run = creator[c][kCurrent].mean();
        rows.push_back(row);
    }
    return rows;
}

std::vector<RetentionRateRow> retention_rate_table(const FanMonthPanel& panel,
                                                   std::span<const int> horizons) {
    std::vector<RetentionRateRow> rows;
    for (Affiliation seg : {Affiliation::Agency, Affiliation::Independent}) {
        for (uint32_t m = 0; m < panel.n_months(); ++m) {
            MonthKey month = panel.month_at(m);
            for (int k : horizons) {
                if (!panel.window().contains(month.plus(k))) continue;
                auto rr = panel.retention_rate(seg, month, k);
                rows.push_back({seg, month, k, rr ? rr->evaluable : 0, rr ? rr->retained : 0});
            }
        }
    }
    return rows;
}

void write_retention_csv(std::ostream& out, const FanMonthPanel& panel,
                         std::span<const int> horizons) {
    out << "segment,month,k,evaluable,retained,rate\n";
    for (const RetentionRateRow& r : retention_rate_table(panel, horizons)) {
        out << to_string(r.segment) << ',' << r.month.str() << ',' << r.k << ',' << r.evaluable
            << ',' << r.retained << ',';
        if (r.evaluable > 0)
            out << format_double(static_cast<double>(r.retained) /
                                 static_cast<double>(r.evaluable));
        out << '\n';
    }
}

void write_creator_metrics_csv(std::ostream& out, const FanMonthPanel& panel) {
    out << "channel,affiliation,two_month_retention,three_month_retention,"
           "oshi_switch_probability,longest_active_run,current_run_length\n";
    auto field = [&](const std::optional<double>& v) -> std::string {
        return v ? format_double(*v) : std::string();
    };
    for (const CreatorMetricsRow& r : creator_commitment_table(panel)) {
        out << panel.channel_token(r.channel) << ',' << to_string(r.affiliation) << ','
            << field(r.retention2) << ',' << field(r.retention3) << ',' << field(r.switch_prob)
            << ',' << field(r.longest_run) << ',' << field(r.current_run) << '\n';
    }
}

}  // namespace fanflow
