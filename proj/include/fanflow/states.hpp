#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <json.hpp>

#include "fanflow/panel.hpp"

namespace fanflow {

// Monthly fan state relative to an origin (creator, segment). Assignment
// follows the strict hierarchy Same > Retain > Cross > Drop.
enum class FlowState : uint8_t { Same = 0, Retain = 1, Cross = 2, Drop = 3 };

inline const char* to_string(FlowState s) {
    switch (s) {
        case FlowState::Same: return "Same";
        case FlowState::Retain: return "Retain";
        case FlowState::Cross: return "Cross";
        default: return "Drop";
    }
}

struct Origin {
    uint32_t channel;     // origin creator c0
    Affiliation segment;  // s0
    MonthKey month;       // m
};

// Absent when m+t leaves the window.
std::optional<FlowState> classify_state(const FanMonthPanel& panel, uint32_t user,
                                        const Origin& origin, int t);

struct FlowPath {
    std::vector<FlowState> states;  // one per step t = 1..horizon
    uint64_t count = 0;
    double share = 0.0;
};

struct FlowTable {
    Affiliation origin_segment = Affiliation::Agency;
    int horizon = 3;
    std::vector<MonthKey> origin_months;
    uint64_t cohort_size = 0;
    uint64_t not_evaluable = 0;  // (fan, origin month) pairs whose horizon leaves the window
    std::vector<FlowPath> paths;  // sorted by state sequence; counts sum to cohort_size

    bool empty() const { return cohort_size == 0; }
    double marginal(int t, FlowState s) const;  // share of state s at step t in 1..horizon
};

// Pools (fan, origin month) cohort members over `origin_months`; each member
// is classified independently at every step, so a fan who drops can re-enter
// any state later. Origin creator is the fan's oshi at the origin month.
FlowTable flow_distribution(const FanMonthPanel& panel, Affiliation origin_segment,
                            const std::vector<MonthKey>& origin_months, int horizon = 3);

nlohmann::ordered_json export_sankey(const FlowTable& table);
void write_flow_csv(std::ostream& out, const FlowTable& table);

}  // namespace fanflow
