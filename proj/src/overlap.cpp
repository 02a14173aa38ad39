#include "fanflow/overlap.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <ostream>
#include <thread>
#include <unordered_map>

#include "fanflow/format.hpp"

namespace fanflow {

std::optional<uint32_t> MonthlyGraph::node_index(uint32_t channel) const {
    for (uint32_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].channel == channel) return i;
    return std::nullopt;
}

std::optional<uint32_t> UnifiedGraph::node_index(uint32_t channel) const {
    for (uint32_t i = 0; i < channels.size(); ++i)
        if (channels[i] == channel) return i;
    return std::nullopt;
}

std::vector<AudienceSet> audience_sets(const FanMonthPanel& panel, MonthKey month) {
    std::vector<AudienceSet> sets;
    int64_t rel = panel.month_rel(month);
    if (rel < 0) return sets;

    auto cells = panel.month_cells(static_cast<uint32_t>(rel));
    std::vector<std::pair<uint32_t, uint32_t>> pairs;  // (lex rank, user)
    pairs.reserve(cells.size());
    std::vector<uint32_t> rank_to_channel(panel.n_channels());
    for (const PanelCell& c : cells) {
        pairs.emplace_back(panel.lex_rank(c.channel), c.user);
        rank_to_channel[panel.lex_rank(c.channel)] = c.channel;
    }
    std::sort(pairs.begin(), pairs.end());

    size_t i = 0;
    while (i < pairs.size()) {
        size_t j = i;
        while (j < pairs.size() && pairs[j].first == pairs[i].first) ++j;
        AudienceSet s;
        s.channel = rank_to_channel[pairs[i].first];
        s.users.reserve(j - i);
        for (size_t t = i; t < j; ++t) s.users.push_back(pairs[t].second);
        sets.push_back(std::move(s));
        i = j;
    }
    return sets;
}

double simpson(std::span<const uint32_t> a, std::span<const uint32_t> b) {
    if (a.empty() || b.empty()) throw OverlapError("simpson requires non-empty sets");
    size_t i = 0, j = 0;
    uint64_t shared = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j])
            ++i;
        else if (b[j] < a[i])
            ++j;
        else {
            ++shared;
            ++i;
            ++j;
        }
    }
    return static_cast<double>(shared) /
           static_cast<double>(std::min(a.size(), b.size()));
}

namespace {

// Shared-viewer counting over the inverted index (user -> qualifying nodes).
// Equivalent to the all-pairs intersection but touches only co-chatting
// pairs.
MonthlyGraph build_graph_impl(const FanMonthPanel& panel, MonthKey month, uint32_t tau_u,
                              double theta, uint32_t n_min, bool apply_theta) {
    MonthlyGraph g;
    g.month = month;
    int64_t rel = panel.month_rel(month);
    if (rel < 0) return g;

    auto cells = panel.month_cells(static_cast<uint32_t>(rel));
    std::vector<uint32_t> audience(panel.n_channels(), 0);
    for (const PanelCell& c : cells) ++audience[c.channel];

    std::vector<uint32_t> node_of(panel.n_channels(), UINT32_MAX);
    std::vector<uint32_t> qualifying;
    for (uint32_t c = 0; c < panel.n_channels(); ++c)
        if (audience[c] >= tau_u) qualifying.push_back(c);
    std::sort(qualifying.begin(), qualifying.end(), [&](uint32_t a, uint32_t b) {
        return panel.lex_rank(a) < panel.lex_rank(b);
    });
    g.nodes.reserve(qualifying.size());
    for (uint32_t c : qualifying) {
        node_of[c] = static_cast<uint32_t>(g.nodes.size());
        g.nodes.push_back({c, audience[c]});
    }
    if (g.nodes.size() < 2) return g;

    std::unordered_map<uint64_t, uint32_t> shared;
    shared.reserve(cells.size());
    std::vector<uint32_t> mine;
    size_t i = 0;
    while (i < cells.size()) {
        size_t j = i;
        mine.clear();
        while (j < cells.size() && cells[j].user == cells[i].user) {
            uint32_t node = node_of[cells[j].channel];
            if (node != UINT32_MAX) mine.push_back(node);
            ++j;
        }
        std::sort(mine.begin(), mine.end());
        for (size_t x = 0; x + 1 < mine.size(); ++x)
            for (size_t y = x + 1; y < mine.size(); ++y)
                ++shared[(static_cast<uint64_t>(mine[x]) << 32) | mine[y]];
        i = j;
    }

    g.edges.reserve(shared.size());
    for (const auto& [key, count] : shared) {
        if (count < n_min) continue;
        uint32_t a = static_cast<uint32_t>(key >> 32);
        uint32_t b = static_cast<uint32_t>(key & 0xffffffffu);
        double s = static_cast<double>(count) /
                   static_cast<double>(std::min(g.nodes[a].audience, g.nodes[b].audience));
        if (apply_theta && !(s >= theta)) continue;
        g.edges.push_back({a, b, count, s});
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const MonthlyGraph::Edge& x,
                                                 const MonthlyGraph::Edge& y) {
        return x.a != y.a ? x.a < y.a : x.b < y.b;
    });
    return g;
}

void parallel_months(uint32_t n, int threads, const std::function<void(uint32_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (uint32_t m = 0; m < n; ++m) fn(m);
        return;
    }
    std::atomic<uint32_t> next{0};
    auto worker = [&] {
        for (uint32_t m = next.fetch_add(1); m < n; m = next.fetch_add(1)) fn(m);
    };
    std::vector<std::thread> pool;
    uint32_t k = std::min<uint32_t>(static_cast<uint32_t>(threads), n);
    pool.reserve(k);
    for (uint32_t t = 0; t < k; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}  // namespace

MonthlyGraph build_month_graph(const FanMonthPanel& panel, MonthKey month,
                               const OverlapConfig& config) {
    config.validate();
    return build_graph_impl(panel, month, config.tau_u, config.theta, config.n_min, true);
}

std::vector<MonthlyGraph> build_monthly_graphs(const FanMonthPanel& panel,
                                               const OverlapConfig& config, int threads) {
    config.validate();
    const uint32_t n = panel.n_months();
    std::vector<MonthlyGraph> graphs(n);
    parallel_months(n, threads, [&](uint32_t m) {
        graphs[m] = build_graph_impl(panel, panel.month_at(m), config.tau_u, config.theta,
                                     config.n_min, true);
    });
    return graphs;
}

MonthlyGraph segment_subgraph(const MonthlyGraph& graph, const FanMonthPanel& panel,
                              Affiliation segment) {
    MonthlyGraph g;
    g.month = graph.month;
    std::vector<uint32_t> remap(graph.nodes.size(), UINT32_MAX);
    for (uint32_t i = 0; i < graph.nodes.size(); ++i) {
        if (panel.affiliation(graph.nodes[i].channel) == segment) {
            remap[i] = static_cast<uint32_t>(g.nodes.size());
            g.nodes.push_back(graph.nodes[i]);
        }
    }
    for (const MonthlyGraph::Edge& e : graph.edges)
        if (remap[e.a] != UINT32_MAX && remap[e.b] != UINT32_MAX)
            g.edges.push_back({remap[e.a], remap[e.b], e.shared, e.simpson});
    return g;
}

namespace {

UnifiedGraph accumulate_unified(std::span<const MonthlyGraph> months, const FanMonthPanel& panel) {
    // Keyed by (lex rank a, lex rank b) so the output ordering is by token.
    std::map<std::pair<uint32_t, uint32_t>, double> weights;
    std::map<uint32_t, uint32_t> channels;  // lex rank -> channel id
    for (const MonthlyGraph& g : months) {
        for (const MonthlyGraph::Node& n : g.nodes) channels[panel.lex_rank(n.channel)] = n.channel;
        for (const MonthlyGraph::Edge& e : g.edges) {
            uint32_t ra = panel.lex_rank(g.nodes[e.a].channel);
            uint32_t rb = panel.lex_rank(g.nodes[e.b].channel);
            weights[{std::min(ra, rb), std::max(ra, rb)}] += e.simpson;
        }
    }

    UnifiedGraph u;
    std::unordered_map<uint32_t, uint32_t> index;  // lex rank -> node index
    for (const auto& [rank, channel] : channels) {
        index[rank] = static_cast<uint32_t>(u.channels.size());
        u.channels.push_back(channel);
    }
    for (const auto& [key, w] : weights)
        if (w > 0.0) u.edges.push_back({index[key.first], index[key.second], w});
    return u;
}

}  // namespace

UnifiedGraph unified_graph(std::span<const MonthlyGraph> months, const FanMonthPanel& panel) {
    return accumulate_unified(months, panel);
}

UnifiedGraph unified_graph_unthresholded(const FanMonthPanel& panel, const OverlapConfig& config,
                                         int threads) {
    config.validate();
    const uint32_t n = panel.n_months();
    std::vector<MonthlyGraph> relaxed(n);
    parallel_months(n, threads, [&](uint32_t m) {
        relaxed[m] = build_graph_impl(panel, panel.month_at(m), config.tau_u, 0.0, 1, false);
    });
    return accumulate_unified(relaxed, panel);
}

void write_monthly_edges_csv(std::ostream& out, std::span<const MonthlyGraph> months,
                             const FanMonthPanel& panel) {
    out << "month,i,j,shared,simpson\n";
    for (const MonthlyGraph& g : months)
        for (const MonthlyGraph::Edge& e : g.edges)
            out << g.month.str() << ',' << panel.channel_token(g.nodes[e.a].channel) << ','
                << panel.channel_token(g.nodes[e.b].channel) << ',' << e.shared << ','
                << format_double(e.simpson) << '\n';
}

void write_monthly_nodes_csv(std::ostream& out, std::span<const MonthlyGraph> months,
                             const FanMonthPanel& panel) {
    out << "channel,month,audience_size,affiliation\n";
    for (const MonthlyGraph& g : months)
        for (const MonthlyGraph::Node& n : g.nodes)
            out << panel.channel_token(n.channel) << ',' << g.month.str() << ',' << n.audience
                << ',' << to_string(panel.affiliation(n.channel)) << '\n';
}

void write_unified_edges_csv(std::ostream& out, const UnifiedGraph& graph,
                             const FanMonthPanel& panel) {
    out << "i,j,w\n";
    for (const UnifiedGraph::Edge& e : graph.edges)
        out << panel.channel_token(graph.channels[e.a]) << ','
            << panel.channel_token(graph.channels[e.b]) << ',' << format_double(e.weight) << '\n';
}

}  // namespace fanflow
