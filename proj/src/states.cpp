#include "fanflow/states.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include "fanflow/format.hpp"

namespace fanflow {

std::optional<FlowState> classify_state(const FanMonthPanel& panel, uint32_t user,
                                        const Origin& origin, int t) {
    MonthKey target = origin.month.plus(t);
    int64_t rel = panel.month_rel(target);
    if (rel < 0 || t < 1) return std::nullopt;

    bool same = false, retain = false, cross = false;
    for (const PanelCell& c : panel.user_month_cells(user, static_cast<uint32_t>(rel))) {
        if (c.channel == origin.channel)
            same = true;
        else if (panel.affiliation(c.channel) == origin.segment)
            retain = true;
        else
            cross = true;
    }
    if (same) return FlowState::Same;
    if (retain) return FlowState::Retain;
    if (cross) return FlowState::Cross;
    return FlowState::Drop;
}

double FlowTable::marginal(int t, FlowState s) const {
    if (cohort_size == 0 || t < 1 || t > horizon) return 0.0;
    uint64_t n = 0;
    for (const FlowPath& p : paths)
        if (p.states[t - 1] == s) n += p.count;
    return static_cast<double>(n) / static_cast<double>(cohort_size);
}

FlowTable flow_distribution(const FanMonthPanel& panel, Affiliation origin_segment,
                            const std::vector<MonthKey>& origin_months, int horizon) {
    FlowTable table;
    table.origin_segment = origin_segment;
    table.horizon = horizon;
    table.origin_months = origin_months;
    std::sort(table.origin_months.begin(), table.origin_months.end());
    table.origin_months.erase(
        std::unique(table.origin_months.begin(), table.origin_months.end()),
        table.origin_months.end());

    // Path id encodes the state sequence base 4, step 1 most significant.
    std::map<uint32_t, uint64_t> counts;
    for (MonthKey m : table.origin_months) {
        int64_t rel = panel.month_rel(m);
        if (rel < 0) continue;
        bool evaluable = panel.window().contains(m.plus(horizon));

        auto cells = panel.month_cells(static_cast<uint32_t>(rel));
        size_t i = 0;
        while (i < cells.size()) {
            size_t j = i;
            const uint32_t user = cells[i].user;
            while (j < cells.size() && cells[j].user == user) ++j;

            const PanelCell* best = &cells[i];
            for (size_t t = i + 1; t < j; ++t)
                if (cells[t].count > best->count) best = &cells[t];
            i = j;
            if (panel.affiliation(best->channel) != origin_segment) continue;
            if (!evaluable) {
                ++table.not_evaluable;
                continue;
            }

            Origin origin{best->channel, origin_segment, m};
            uint32_t path = 0;
            for (int t = 1; t <= horizon; ++t)
                path = path * 4 + static_cast<uint32_t>(*classify_state(panel, user, origin, t));
            ++counts[path];
            ++table.cohort_size;
        }
    }

    for (auto& [path, count] : counts) {
        FlowPath p;
        p.states.resize(horizon);
        uint32_t rest = path;
        for (int t = horizon; t >= 1; --t) {
            p.states[t - 1] = static_cast<FlowState>(rest % 4);
            rest /= 4;
        }
        p.count = count;
        p.share = static_cast<double>(count) / static_cast<double>(table.cohort_size);
        table.paths.push_back(std::move(p));
    }
    return table;
}

nlohmann::ordered_json export_sankey(const FlowTable& table) {
    nlohmann::ordered_json j;
    j["origin_segment"] = to_string(table.origin_segment);
    j["origin_months"] = nlohmann::json::array();
    for (MonthKey m : table.origin_months) j["origin_months"].push_back(m.str());
    j["cohort_size"] = table.cohort_size;
    j["not_evaluable"] = table.not_evaluable;

    j["steps"] = nlohmann::json::array();
    for (int t = 1; t <= table.horizon; ++t) j["steps"].push_back("T" + std::to_string(t));

    // Nodes in fixed order: step major, state order Same/Retain/Cross/Drop.
    j["nodes"] = nlohmann::json::array();
    auto node_id = [&](int t, FlowState s) { return (t - 1) * 4 + static_cast<int>(s); };
    for (int t = 1; t <= table.horizon; ++t)
        for (int s = 0; s < 4; ++s)
            j["nodes"].push_back({{"step", "T" + std::to_string(t)},
                                  {"state", to_string(static_cast<FlowState>(s))}});

    std::map<std::pair<int, int>, uint64_t> links;
    for (const FlowPath& p : table.paths)
        for (int t = 1; t < table.horizon; ++t)
            links[{node_id(t, p.states[t - 1]), node_id(t + 1, p.states[t])}] += p.count;

    j["links"] = nlohmann::json::array();
    for (const auto& [key, count] : links) {
        double share = table.cohort_size == 0
                           ? 0.0
                           : static_cast<double>(count) / static_cast<double>(table.cohort_size);
        j["links"].push_back(
            {{"from", key.first}, {"to", key.second}, {"count", count}, {"share", share}});
    }
    return j;
}

void write_flow_csv(std::ostream& out, const FlowTable& table) {
    out << "origin_segment";
    for (int t = 1; t <= table.horizon; ++t) out << ",state_t" << t;
    out << ",count,share\n";
    for (const FlowPath& p : table.paths) {
        out << to_string(table.origin_segment);
        for (FlowState s : p.states) out << ',' << to_string(s);
        out << ',' << p.count << ',' << format_double(p.share) << '\n';
    }
}

}  // namespace fanflow
