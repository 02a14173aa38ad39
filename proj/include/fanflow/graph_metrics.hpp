#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "fanflow/overlap.hpp"

namespace fanflow {

struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unweighted simple undirected graph with sorted neighbor lists.
struct AdjacencyGraph {
    std::vector<std::vector<uint32_t>> adj;
    uint64_t edge_count = 0;

    uint32_t n() const { return static_cast<uint32_t>(adj.size()); }
    bool has_edge(uint32_t a, uint32_t b) const;

    static AdjacencyGraph from_edges(uint32_t n, std::span<const std::pair<uint32_t, uint32_t>>);
};

AdjacencyGraph to_adjacency(const MonthlyGraph& g);
AdjacencyGraph to_adjacency(const UnifiedGraph& g);

struct GraphMetricsRow {
    uint64_t nodes = 0;
    uint64_t edges = 0;
    double density = 0.0;       // 2|E| / (|V|(|V|-1))
    double avg_degree = 0.0;    // 2|E| / |V|
    double mean_clustering = 0.0;
    uint64_t largest_component = 0;
    bool degenerate = false;    // |V| < 2: density and degree reported as 0
};

// `clustering_includes_low_degree`: average local clustering over all nodes,
// counting degree<2 nodes as zero; when false those nodes are excluded.
GraphMetricsRow graph_metrics(const AdjacencyGraph& g, bool clustering_includes_low_degree = true);

// 2*triangles(i) / (d_i (d_i - 1)); zero when d_i < 2. Throws on bad node.
double local_clustering(const AdjacencyGraph& g, uint32_t node);

// Brandes shortest-path betweenness on the unweighted graph. Each unordered
// (s, t) pair contributes once. `normalized` divides by (n-1)(n-2)/2.
// Summation order is fixed regardless of thread count.
std::vector<double> betweenness(const AdjacencyGraph& g, bool normalized = false,
                                int threads = 1);

double weighted_degree(const UnifiedGraph& g, uint32_t node_index);

struct SegmentMetricsRow {
    MonthKey month;
    Affiliation segment;
    GraphMetricsRow metrics;
    bool empty_segment = false;  // no qualifying nodes; excluded from paired tests
};

std::vector<SegmentMetricsRow> metrics_timeseries(std::span<const MonthlyGraph> months,
                                                  const FanMonthPanel& panel);

struct NodeMetricsRow {
    uint32_t channel = 0;
    Affiliation affiliation = Affiliation::Independent;
    double weighted_degree = 0.0;
    uint32_t degree = 0;
    double clustering = 0.0;
    double betweenness = 0.0;
    double betweenness_normalized = 0.0;
};

std::vector<NodeMetricsRow> unified_node_metrics(const UnifiedGraph& g,
                                                 const FanMonthPanel& panel, int threads = 1);

void write_graph_metrics_csv(std::ostream& out, std::span<const SegmentMetricsRow> rows);
void write_node_metrics_csv(std::ostream& out, std::span<const NodeMetricsRow> rows,
                            const FanMonthPanel& panel);

}  // namespace fanflow
