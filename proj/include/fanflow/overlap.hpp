#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fanflow/panel.hpp"

namespace fanflow {

struct OverlapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OverlapConfig {
    double theta = 0.05;  // minimum Simpson coefficient
    uint32_t n_min = 10;  // minimum shared viewers
    uint32_t tau_u = 25;  // minimum unique chatters per node

    void validate() const {
        if (!(theta > 0.0 && theta <= 1.0)) throw OverlapError("theta must be in (0,1]");
        if (n_min < 1) throw OverlapError("n_min must be >= 1");
        if (tau_u < 1) throw OverlapError("tau_u must be >= 1");
    }
};

// Monthly creator-creator overlap graph. Nodes are ordered by channel token;
// edges are (a, b) node indices with a < b, sorted.
struct MonthlyGraph {
    struct Node {
        uint32_t channel;   // panel channel id
        uint32_t audience;  // |U_{c,m}|
    };
    struct Edge {
        uint32_t a, b;
        uint32_t shared;
        double simpson;
    };

    MonthKey month;
    std::vector<Node> nodes;
    std::vector<Edge> edges;

    std::optional<uint32_t> node_index(uint32_t channel) const;
};

// Unique viewers per channel for one month; channels ordered by token,
// viewer lists sorted, channels with empty sets omitted.
struct AudienceSet {
    uint32_t channel;
    std::vector<uint32_t> users;
};
std::vector<AudienceSet> audience_sets(const FanMonthPanel& panel, MonthKey month);

// |A n B| / min(|A|, |B|) over sorted unique id spans. Throws on empty input.
double simpson(std::span<const uint32_t> a, std::span<const uint32_t> b);

MonthlyGraph build_month_graph(const FanMonthPanel& panel, MonthKey month,
                               const OverlapConfig& config);
std::vector<MonthlyGraph> build_monthly_graphs(const FanMonthPanel& panel,
                                               const OverlapConfig& config, int threads = 1);

// Induced subgraph on nodes of one affiliation; cross-segment edges dropped.
MonthlyGraph segment_subgraph(const MonthlyGraph& graph, const FanMonthPanel& panel,
                              Affiliation segment);

struct UnifiedGraph {
    struct Edge {
        uint32_t a, b;  // node indices, a < b
        double weight;  // sum of monthly Simpson coefficients
    };
    std::vector<uint32_t> channels;  // ordered by token
    std::vector<Edge> edges;

    std::optional<uint32_t> node_index(uint32_t channel) const;
};

// Sums Simpson weights over months where the edge passed the thresholds.
// The panel supplies token ordering for the merged node set.
UnifiedGraph unified_graph(std::span<const MonthlyGraph> months, const FanMonthPanel& panel);
// Alternative mode: sums over all co-active qualifying pairs (tau_u still
// applies; theta and n_min do not).
UnifiedGraph unified_graph_unthresholded(const FanMonthPanel& panel, const OverlapConfig& config,
                                         int threads = 1);

void write_monthly_edges_csv(std::ostream& out, std::span<const MonthlyGraph> months,
                             const FanMonthPanel& panel);
void write_monthly_nodes_csv(std::ostream& out, std::span<const MonthlyGraph> months,
                             const FanMonthPanel& panel);
void write_unified_edges_csv(std::ostream& out, const UnifiedGraph& graph,
                             const FanMonthPanel& panel);

}  // namespace fanflow
