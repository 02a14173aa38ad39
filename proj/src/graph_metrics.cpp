#include "fanflow/graph_metrics.hpp"

#include <algorithm>
#include <atomic>
#include <ostream>
#include <queue>
#include <thread>

#include "fanflow/format.hpp"

namespace fanflow {

bool AdjacencyGraph::has_edge(uint32_t a, uint32_t b) const {
    if (a >= n() || b >= n()) return false;
    const auto& na = adj[a];
    return std::binary_search(na.begin(), na.end(), b);
}

AdjacencyGraph AdjacencyGraph::from_edges(
    uint32_t n, std::span<const std::pair<uint32_t, uint32_t>> edges) {
    AdjacencyGraph g;
    g.adj.resize(n);
    for (auto [a, b] : edges) {
        if (a == b) continue;
        g.adj[a].push_back(b);
        g.adj[b].push_back(a);
    }
    for (auto& nbrs : g.adj) {
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }
    for (const auto& nbrs : g.adj) g.edge_count += nbrs.size();
    g.edge_count /= 2;
    return g;
}

AdjacencyGraph to_adjacency(const MonthlyGraph& g) {
    std::vector<std::pair<uint32_t, uint32_t>> edges;
    edges.reserve(g.edges.size());
    for (const auto& e : g.edges) edges.emplace_back(e.a, e.b);
    return AdjacencyGraph::from_edges(static_cast<uint32_t>(g.nodes.size()), edges);
}

AdjacencyGraph to_adjacency(const UnifiedGraph& g) {
    std::vector<std::pair<uint32_t, uint32_t>> edges;
    edges.reserve(g.edges.size());
    for (const auto& e : g.edges) edges.emplace_back(e.a, e.b);
    return AdjacencyGraph::from_edges(static_cast<uint32_t>(g.channels.size()), edges);
}

double local_clustering(const AdjacencyGraph& g, uint32_t node) {
    if (node >= g.n()) throw GraphError("local_clustering: unknown node");
    const auto& nbrs = g.adj[node];
    const size_t d = nbrs.size();
    if (d < 2) return 0.0;
    uint64_t links = 0;
    for (size_t i = 0; i < d; ++i)
        for (size_t j = i + 1; j < d; ++j)
            if (g.has_edge(nbrs[i], nbrs[j])) ++links;
    return 2.0 * static_cast<double>(links) / (static_cast<double>(d) * (d - 1));
}

namespace {

uint64_t largest_component_size(const AdjacencyGraph& g) {
    const uint32_t n = g.n();
    std::vector<bool> seen(n, false);
    std::vector<uint32_t> stack;
    uint64_t best = 0;
    for (uint32_t s = 0; s < n; ++s) {
        if (seen[s]) continue;
        uint64_t size = 0;
        stack.push_back(s);
        seen[s] = true;
        while (!stack.empty()) {
            uint32_t v = stack.back();
            stack.pop_back();
            ++size;
            for (uint32_t w : g.adj[v])
                if (!seen[w]) {
                    seen[w] = true;
                    stack.push_back(w);
                }
        }
        best = std::max(best, size);
    }
    return best;
}

}  // namespace

GraphMetricsRow graph_metrics(const AdjacencyGraph& g, bool clustering_includes_low_degree) {
    GraphMetricsRow row;
    row.nodes = g.n();
    row.edges = g.edge_count;
    if (row.nodes < 2) {
        row.degenerate = true;
        row.largest_component = row.nodes;
        return row;
    }
    const double v = static_cast<double>(row.nodes);
    row.density = 2.0 * static_cast<double>(row.edges) / (v * (v - 1.0));
    row.avg_degree = 2.0 * static_cast<double>(row.edges) / v;

    double sum = 0.0;
    uint64_t counted = 0;
    for (uint32_t i = 0; i < g.n(); ++i) {
        if (g.adj[i].size() < 2 && !clustering_includes_low_degree) continue;
        sum += local_clustering(g, i);
        ++counted;
    }
    row.mean_clustering = counted == 0 ? 0.0 : sum / static_cast<double>(counted);
    row.largest_component = largest_component_size(g);
    return row;
}

namespace {

// One Brandes source sweep accumulated into `acc`.
void brandes_source(const AdjacencyGraph& g, uint32_t s, std::vector<double>& acc,
                    std::vector<int32_t>& dist, std::vector<uint64_t>& sigma,
                    std::vector<double>& delta, std::vector<uint32_t>& order,
                    std::vector<std::vector<uint32_t>>& preds) {
    const uint32_t n = g.n();
    dist.assign(n, -1);
    sigma.assign(n, 0);
    delta.assign(n, 0.0);
    order.clear();
    for (auto& p : preds) p.clear();

    dist[s] = 0;
    sigma[s] = 1;
    std::queue<uint32_t> q;
    q.push(s);
    while (!q.empty()) {
        uint32_t v = q.front();
        q.pop();
        order.push_back(v);
        for (uint32_t w : g.adj[v]) {
            if (dist[w] < 0) {
                dist[w] = dist[v] + 1;
                q.push(w);
            }
            if (dist[w] == dist[v] + 1) {
                sigma[w] += sigma[v];
                preds[w].push_back(v);
            }
        }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        uint32_t w = *it;
        for (uint32_t v : preds[w])
            delta[v] += static_cast<double>(sigma[v]) / static_cast<double>(sigma[w]) *
                        (1.0 + delta[w]);
        if (w != s) acc[w] += delta[w];
    }
}

constexpr uint32_t kSourceBlock = 32;

}  // namespace

std::vector<double> betweenness(const AdjacencyGraph& g, bool normalized, int threads) {
    const uint32_t n = g.n();
    std::vector<double> result(n, 0.0);
    if (n < 3) return result;

    // Fixed-size source blocks reduced in index order keep the floating-point
    // summation identical for every thread count.
    const uint32_t n_blocks = (n + kSourceBlock - 1) / kSourceBlock;
    std::vector<std::vector<double>> partial(n_blocks);

    auto run_block = [&](uint32_t blk) {
        std::vector<double>& acc = partial[blk];
        acc.assign(n, 0.0);
        std::vector<int32_t> dist;
        std::vector<uint64_t> sigma;
        std::vector<double> delta;
        std::vector<uint32_t> order;
        std::vector<std::vector<uint32_t>> preds(n);
        order.reserve(n);
        const uint32_t lo = blk * kSourceBlock;
        const uint32_t hi = std::min(n, lo + kSourceBlock);
        for (uint32_t s = lo; s < hi; ++s)
            brandes_source(g, s, acc, dist, sigma, delta, order, preds);
    };

    if (threads <= 1 || n_blocks == 1) {
        for (uint32_t b = 0; b < n_blocks; ++b) run_block(b);
    } else {
        std::atomic<uint32_t> next{0};
        auto worker = [&] {
            for (uint32_t b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1))
                run_block(b);
        };
        std::vector<std::thread> pool;
        uint32_t k = std::min<uint32_t>(static_cast<uint32_t>(threads), n_blocks);
        for (uint32_t t = 0; t < k; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (uint32_t b = 0; b < n_blocks; ++b)
        for (uint32_t v = 0; v < n; ++v) result[v] += partial[b][v];

    // Each unordered pair was visited from both endpoints.
    for (double& v : result) v /= 2.0;
    if (normalized) {
        const double scale = static_cast<double>(n - 1) * static_cast<double>(n - 2) / 2.0;
        for (double& v : result) v /= scale;
    }
    return result;
}

double weighted_degree(const UnifiedGraph& g, uint32_t node_index) {
    if (node_index >= g.channels.size()) throw GraphError("weighted_degree: unknown node");
    double sum = 0.0;
    for (const auto& e : g.edges)
        if (e.a == node_index || e.b == node_index) sum += e.weight;
    return sum;
}

std::vector<SegmentMetricsRow> metrics_timeseries(std::span<const MonthlyGraph> months,
                                                  const FanMonthPanel& panel) {
    std::vector<SegmentMetricsRow> rows;
    rows.reserve(months.size() * 2);
    for (const MonthlyGraph& g : months) {
        for (Affiliation seg : {Affiliation::Agency, Affiliation::Independent}) {
            SegmentMetricsRow row;
            row.month = g.month;
            row.segment = seg;
            MonthlyGraph sub = segment_subgraph(g, panel, seg);
            row.empty_segment = sub.nodes.empty();
            row.metrics = graph_metrics(to_adjacency(sub));
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<NodeMetricsRow> unified_node_metrics(const UnifiedGraph& g,
                                                 const FanMonthPanel& panel, int threads) {
    AdjacencyGraph adj = to_adjacency(g);
    std::vector<double> bc = betweenness(adj, false, threads);
    const double scale = adj.n() >= 3
                             ? static_cast<double>(adj.n() - 1) * (adj.n() - 2) / 2.0
                             : 1.0;

    std::vector<double> wdeg(g.channels.size(), 0.0);
    for (const auto& e : g.edges) {
        wdeg[e.a] += e.weight;
        wdeg[e.b] += e.weight;
    }

    std::vector<NodeMetricsRow> rows;
    rows.reserve(g.channels.size());
    for (uint32_t i = 0; i < g.channels.size(); ++i) {
        NodeMetricsRow row;
        row.channel = g.channels[i];
        row.affiliation = panel.affiliation(g.channels[i]);
        row.weighted_degree = wdeg[i];
        row.degree = static_cast<uint32_t>(adj.adj[i].size());
        row.clustering = local_clustering(adj, i);
        row.betweenness = bc[i];
        row.betweenness_normalized = bc[i] / scale;
        rows.push_back(row);
    }
    return rows;
}

void write_graph_metrics_csv(std::ostream& out, std::span<const SegmentMetricsRow> rows) {
    out << "month,segment,nodes,edges,density,avg_degree,mean_clustering,largest_component,"
           "degenerate,empty_segment\n";
    for (const SegmentMetricsRow& r : rows) {
        out << r.month.str() << ',' << to_string(r.segment) << ',' << r.metrics.nodes << ','
            << r.metrics.edges << ',' << format_double(r.metrics.density) << ','
            << format_double(r.metrics.avg_degree) << ','
            << format_double(r.metrics.mean_clustering) << ',' << r.metrics.largest_component
            << ',' << (r.metrics.degenerate ? 1 : 0) << ',' << (r.empty_segment ? 1 : 0) << '\n';
    }
}

void write_node_metrics_csv(std::ostream& out, std::span<const NodeMetricsRow> rows,
                            const FanMonthPanel& panel) {
    out << "channel,affiliation,weighted_degree,degree,clustering,betweenness,"
           "betweenness_normalized\n";
    for (const NodeMetricsRow& r : rows) {
        out << panel.channel_token(r.channel) << ',' << to_string(r.affiliation) << ','
            << format_double(r.weighted_degree) << ',' << r.degree << ','
            << format_double(r.clustering) << ',' << format_double(r.betweenness) << ','
            << format_double(r.betweenness_normalized) << '\n';
    }
}

}  // namespace fanflow
