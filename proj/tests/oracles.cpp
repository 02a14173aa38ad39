#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace oracle {

using fanflow::Affiliation;
using fanflow::FlowState;

void Corpus::tabulate() {
    totals.clear();
    for (const Event& e : events) {
        int64_t ord = fanflow::month_of_epoch(e.ts).ordinal();
        if (ord < window.from.ordinal() || ord > window.to.ordinal()) continue;
        if (!roster.count(e.channel)) continue;
        totals[e.user][ord][e.channel] += e.count;
    }
}

bool Corpus::active(const std::string& user, int64_t month_ord) const {
    auto u = totals.find(user);
    return u != totals.end() && u->second.count(month_ord) > 0;
}

std::optional<std::string> Corpus::oshi(const std::string& user, int64_t month_ord) const {
    auto u = totals.find(user);
    if (u == totals.end()) return std::nullopt;
    auto m = u->second.find(month_ord);
    if (m == u->second.end()) return std::nullopt;
    // std::map iterates tokens in lexicographic order already, so the first
    // maximal count is the tie-break winner.
    std::string best;
    uint64_t best_count = 0;
    for (const auto& [channel, count] : m->second) {
        if (count > best_count) {
            best = channel;
            best_count = count;
        }
    }
    return best;
}

std::optional<bool> Corpus::retention(const std::string& user, int64_t month_ord, int k) const {
    if (!active(user, month_ord)) return std::nullopt;
    if (month_ord + k > window.to.ordinal() || k < 0) return std::nullopt;
    for (int t = 1; t <= k; ++t)
        if (!active(user, month_ord + t)) return false;
    return true;
}

std::optional<bool> Corpus::oshi_switch(const std::string& user, int64_t month_ord) const {
    if (month_ord + 1 > window.to.ordinal()) return std::nullopt;
    auto a = oshi(user, month_ord);
    auto b = oshi(user, month_ord + 1);
    if (!a || !b) return std::nullopt;
    return *a != *b;
}

std::pair<uint32_t, uint32_t> Corpus::run_lengths(const std::string& user,
                                                  int64_t month_ord) const {
    uint32_t current = 0, longest = 0, streak = 0;
    for (int64_t m = window.from.ordinal(); m <= window.to.ordinal(); ++m) {
        streak = active(user, m) ? streak + 1 : 0;
        longest = std::max(longest, streak);
        if (m == month_ord) current = streak;
    }
    return {current, longest};
}

std::optional<FlowState> Corpus::classify(const std::string& user,
                                          const std::string& origin_channel,
                                          Affiliation origin_segment, int64_t origin_ord,
                                          int t) const {
    int64_t target = origin_ord + t;
    if (t < 1 || target > window.to.ordinal() || target < window.from.ordinal())
        return std::nullopt;
    auto u = totals.find(user);
    if (u == totals.end()) return FlowState::Drop;
    auto m = u->second.find(target);
    if (m == u->second.end()) return FlowState::Drop;
    if (m->second.count(origin_channel)) return FlowState::Same;
    bool retain = false, cross = false;
    for (const auto& [channel, count] : m->second) {
        if (roster.at(channel) == origin_segment)
            retain = true;
        else
            cross = true;
    }
    if (retain) return FlowState::Retain;
    if (cross) return FlowState::Cross;
    return FlowState::Drop;
}

Corpus corpus_from(const fanflow::EventTable& events, const fanflow::Roster& roster,
                   fanflow::MonthWindow window) {
    Corpus c;
    c.window = window;
    for (const fanflow::RosterEntry& e : roster.entries) c.roster[e.channel] = e.affiliation;
    for (const fanflow::ChatEvent& e : events.events)
        c.events.push_back({events.users.token(e.user), events.channels.token(e.channel), e.ts,
                            e.count});
    c.tabulate();
    return c;
}

std::vector<GraphEdge> month_graph(const Corpus& corpus, int64_t month_ord, double theta,
                                   uint32_t n_min, uint32_t tau_u,
                                   std::map<std::string, uint32_t>* audiences) {
    std::map<std::string, std::set<std::string>> sets;
    for (const auto& [user, months] : corpus.totals) {
        auto m = months.find(month_ord);
        if (m == months.end()) continue;
        for (const auto& [channel, count] : m->second) sets[channel].insert(user);
    }
    for (auto it = sets.begin(); it != sets.end();) {
        if (it->second.size() < tau_u)
            it = sets.erase(it);
        else
            ++it;
    }
    if (audiences) {
        audiences->clear();
        for (const auto& [channel, users] : sets)
            (*audiences)[channel] = static_cast<uint32_t>(users.size());
    }

    std::vector<GraphEdge> edges;
    for (auto i = sets.begin(); i != sets.end(); ++i) {
        for (auto j = std::next(i); j != sets.end(); ++j) {
            std::vector<std::string> inter;
            std::set_intersection(i->second.begin(), i->second.end(), j->second.begin(),
                                  j->second.end(), std::back_inserter(inter));
            uint32_t shared = static_cast<uint32_t>(inter.size());
            if (shared < n_min) continue;
            double s = static_cast<double>(shared) /
                       static_cast<double>(std::min(i->second.size(), j->second.size()));
            if (s >= theta) edges.push_back({i->first, j->first, shared, s});
        }
    }
    return edges;
}

// ---- graph metric oracles ---------------------------------------------------

double density(const fanflow::AdjacencyGraph& g) {
    if (g.n() < 2) return 0.0;
    double pairs = static_cast<double>(g.n()) * (g.n() - 1) / 2.0;
    return static_cast<double>(g.edge_count) / pairs;
}

double avg_degree(const fanflow::AdjacencyGraph& g) {
    if (g.n() == 0) return 0.0;
    uint64_t total = 0;
    for (const auto& nbrs : g.adj) total += nbrs.size();
    return static_cast<double>(total) / static_cast<double>(g.n());
}

double clustering_of(const fanflow::AdjacencyGraph& g, uint32_t v) {
    const auto& nbrs = g.adj[v];
    if (nbrs.size() < 2) return 0.0;
    uint32_t triangles = 0;
    for (size_t i = 0; i < nbrs.size(); ++i)
        for (size_t j = i + 1; j < nbrs.size(); ++j)
            if (g.has_edge(nbrs[i], nbrs[j])) ++triangles;
    return 2.0 * triangles / (static_cast<double>(nbrs.size()) * (nbrs.size() - 1));
}

uint64_t largest_component(const fanflow::AdjacencyGraph& g) {
    std::vector<int> comp(g.n(), -1);
    int next = 0;
    for (uint32_t s = 0; s < g.n(); ++s) {
        if (comp[s] >= 0) continue;
        std::vector<uint32_t> frontier{s};
        comp[s] = next;
        while (!frontier.empty()) {
            uint32_t v = frontier.back();
            frontier.pop_back();
            for (uint32_t w : g.adj[v])
                if (comp[w] < 0) {
                    comp[w] = next;
                    frontier.push_back(w);
                }
        }
        ++next;
    }
    std::vector<uint64_t> sizes(next, 0);
    for (int c : comp) ++sizes[c];
    uint64_t best = 0;
    for (uint64_t s : sizes) best = std::max(best, s);
    return g.n() == 0 ? 0 : best;
}

namespace {

// Enumerates every s->t shortest path explicitly (depth-first over the BFS
// distance field) and credits interior vertices.
void enumerate_paths(const fanflow::AdjacencyGraph& g, const std::vector<int>& dist, uint32_t v,
                     uint32_t t, std::vector<uint32_t>& path,
                     std::vector<std::vector<uint32_t>>& out) {
    path.push_back(v);
    if (v == t) {
        out.push_back(path);
    } else {
        for (uint32_t w : g.adj[v])
            if (dist[w] == dist[v] + 1) enumerate_paths(g, dist, w, t, path, out);
    }
    path.pop_back();
}

}  // namespace

std::vector<double> betweenness(const fanflow::AdjacencyGraph& g) {
    const uint32_t n = g.n();
    std::vector<double> bc(n, 0.0);
    for (uint32_t s = 0; s < n; ++s) {
        // BFS distances from s
        std::vector<int> dist(n, -1);
        std::vector<uint32_t> queue{s};
        dist[s] = 0;
        for (size_t qi = 0; qi < queue.size(); ++qi) {
            uint32_t v = queue[qi];
            for (uint32_t w : g.adj[v])
                if (dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
        }
        for (uint32_t t = s + 1; t < n; ++t) {
            if (dist[t] < 0) continue;
            std::vector<std::vector<uint32_t>> paths;
            std::vector<uint32_t> path;
            enumerate_paths(g, dist, s, t, path, paths);
            for (const auto& p : paths)
                for (size_t i = 1; i + 1 < p.size(); ++i)
                    bc[p[i]] += 1.0 / static_cast<double>(paths.size());
        }
    }
    return bc;
}

// ---- exact test oracles -------------------------------------------------------

namespace {

double u2_of(const std::vector<double>& a, const std::vector<double>& b) {
    double u2 = 0;
    for (double x : a)
        for (double y : b) u2 += x > y ? 2.0 : (x == y ? 1.0 : 0.0);
    return u2;
}

void combos(const std::vector<double>& pooled, size_t start, size_t remaining,
            std::vector<double>& a, std::vector<double>& rest,
            const std::function<void(const std::vector<double>&, const std::vector<double>&)>& fn) {
    if (remaining == 0) {
        std::vector<double> b = rest;
        for (size_t i = start; i < pooled.size(); ++i) b.push_back(pooled[i]);
        fn(a, b);
        return;
    }
    if (start >= pooled.size()) return;
    a.push_back(pooled[start]);
    combos(pooled, start + 1, remaining - 1, a, rest, fn);
    a.pop_back();
    rest.push_back(pooled[start]);
    combos(pooled, start + 1, remaining, a, rest, fn);
    rest.pop_back();
}

}  // namespace

double mwu_exact_p(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    const double center = static_cast<double>(a.size()) * static_cast<double>(b.size());
    const double margin = std::fabs(u2_of(a, b) - center);

    uint64_t total = 0, extreme = 0;
    std::vector<double> ca, crest;
    combos(pooled, 0, a.size(), ca, crest,
           [&](const std::vector<double>& ga, const std::vector<double>& gb) {
               ++total;
               if (std::fabs(u2_of(ga, gb) - center) >= margin - 1e-9) ++extreme;
           });
    return static_cast<double>(extreme) / static_cast<double>(total);
}

double wilcoxon_exact_p(const std::vector<double>& diffs) {
    std::vector<double> nz;
    for (double d : diffs)
        if (d != 0.0) nz.push_back(d);
    const size_t n = nz.size();

    // midranks of |d| doubled to integers
    std::vector<double> mag(n);
    for (size_t i = 0; i < n; ++i) mag[i] = std::fabs(nz[i]);
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t x, size_t y) { return mag[x] < mag[y]; });
    std::vector<int64_t> rank2(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && mag[order[j]] == mag[order[i]]) ++j;
        int64_t r2 = static_cast<int64_t>(i + 1 + j);  // doubled midrank
        for (size_t t = i; t < j; ++t) rank2[order[t]] = r2;
        i = j;
    }

    int64_t w2_obs = 0, total2 = 0;
    for (size_t k = 0; k < n; ++k) {
        total2 += rank2[k];
        if (nz[k] > 0) w2_obs += rank2[k];
    }

    // distribution of the doubled positive-rank sum over sign flips
    std::vector<uint64_t> ways(static_cast<size_t>(total2) + 1, 0);
    ways[0] = 1;
    for (size_t k = 0; k < n; ++k)
        for (int64_t s = total2 - rank2[k]; s >= 0; --s)
            if (ways[s]) ways[s + rank2[k]] += ways[s];

    const int64_t margin = std::llabs(2 * w2_obs - total2);
    uint64_t extreme = 0, total = 0;
    for (int64_t s = 0; s <= total2; ++s) {
        total += ways[s];
        if (std::llabs(2 * s - total2) >= margin) extreme += ways[s];
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace oracle
