#pragma once

// Shared fixtures and independent oracles for the test suites. Everything in
// here deliberately avoids the library's solver paths: reachability uses its
// own BFS, the matrix-game oracle is a grid search, and expected values are
// computed from first principles.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "diftgame/game.hpp"
#include "diftgame/ifg.hpp"

namespace testsupport {

using namespace diftgame;

// ---------------------------------------------------------------------------
// Fixtures

// v2 -> v1 with lambda={v2}, D={v1}: the analytic 2x2 example. With FN=0.2,
// FP=0.1, beta=100 the game value at v0 and v2 is 80.
inline IfgGraph chain_graph() {
    IfgGraph g;
    g.nodes = {{"v1", NodeKind::File, "target", std::nullopt},
               {"v2", NodeKind::NetworkSocket, "entry", std::nullopt}};
    g.edges = {{"v2", "v1"}};
    g.entries = {"v2"};
    g.destinations = {"v1"};
    return g;
}

inline GameSpec chain_game(double beta = 100.0, double fn = 0.2, double fp = 0.1,
                           bool hidden = false) {
    DetectionParams params;
    params.fn = {{"v1", fn}, {"v2", fn}};
    params.fp = {{"v1", fp}, {"v2", fp}};
    params.hidden = hidden;
    return GameSpec::build(chain_graph(), params, beta);
}

// ---------------------------------------------------------------------------
// Reachability oracle (plain BFS over the edge set, no library calls).

inline std::set<std::string> bfs_reach(const IfgGraph& g, const std::string& from) {
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& [s, d] : g.edges) adj[s].push_back(d);
    std::set<std::string> seen{from};
    std::queue<std::string> q;
    q.push(from);
    while (!q.empty()) {
        auto cur = q.front();
        q.pop();
        for (const auto& nxt : adj[cur])
            if (seen.insert(nxt).second) q.push(nxt);
    }
    return seen;
}

inline std::string base_id(const std::string& id) {
    auto pos = id.rfind('#');
    return pos == std::string::npos ? id : id.substr(0, pos);
}

// entry base -> set of destination bases it reaches (versions collapsed).
inline std::map<std::string, std::set<std::string>> reach_matrix(const IfgGraph& g) {
    std::map<std::string, std::set<std::string>> m;
    std::set<std::string> dest_bases;
    for (const auto& d : g.destinations) dest_bases.insert(base_id(d));
    for (const auto& e : g.entries) {
        auto fwd = bfs_reach(g, e);
        auto& row = m[base_id(e)];
        for (const auto& id : fwd)
            if (std::any_of(g.destinations.begin(), g.destinations.end(),
                            [&](const std::string& d) { return d == id; }))
                row.insert(base_id(id));
        (void)dest_bases;
    }
    return m;
}

// All simple entry->destination paths, projected to base ids. Exponential;
// only for graphs of a few nodes.
inline void enum_paths(const std::map<std::string, std::vector<std::string>>& adj,
                       const std::set<std::string>& dests, std::vector<std::string>& cur,
                       std::set<std::string>& on_path,
                       std::set<std::vector<std::string>>& out) {
    const std::string& last = cur.back();
    if (dests.count(last)) {
        std::vector<std::string> projected;
        for (const auto& id : cur) projected.push_back(base_id(id));
        out.insert(projected);
    }
    auto it = adj.find(last);
    if (it == adj.end()) return;
    for (const auto& nxt : it->second) {
        if (on_path.count(nxt)) continue;
        cur.push_back(nxt);
        on_path.insert(nxt);
        enum_paths(adj, dests, cur, on_path, out);
        on_path.erase(nxt);
        cur.pop_back();
    }
}

inline std::set<std::vector<std::string>> simple_paths(const IfgGraph& g) {
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& [s, d] : g.edges) adj[s].push_back(d);
    for (auto& [_, outs] : adj) std::sort(outs.begin(), outs.end());
    std::set<std::string> dests(g.destinations.begin(), g.destinations.end());
    std::set<std::vector<std::string>> out;
    for (const auto& e : g.entries) {
        std::vector<std::string> cur{e};
        std::set<std::string> on_path{e};
        enum_paths(adj, dests, cur, on_path, out);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Matrix-game oracle: brute-force grid search over defender mixes.

inline double security_level(const std::vector<std::vector<double>>& q,
                             const std::vector<double>& p) {
    double best = std::numeric_limits<double>::infinity();
    size_t cols = q[0].size();
    for (size_t a = 0; a < cols; ++a) {
        double g = 0.0;
        for (size_t d = 0; d < q.size(); ++d) g += q[d][a] * p[d];
        best = std::min(best, g);
    }
    return best;
}

// Max over the simplex grid with the given number of subdivisions (step =
// 1/subdivisions) of min over columns.
inline double grid_search_value(const std::vector<std::vector<double>>& q, int subdivisions) {
    size_t rows = q.size();
    std::vector<double> p(rows, 0.0);
    double best = -std::numeric_limits<double>::infinity();
    std::function<void(size_t, int)> rec = [&](size_t idx, int remaining) {
        if (idx + 1 == rows) {
            p[idx] = static_cast<double>(remaining) / subdivisions;
            best = std::max(best, security_level(q, p));
            return;
        }
        for (int k = 0; k <= remaining; ++k) {
            p[idx] = static_cast<double>(k) / subdivisions;
            rec(idx + 1, remaining - k);
        }
    };
    rec(0, subdivisions);
    return best;
}

// ---------------------------------------------------------------------------
// Random graph / game generators.

inline IfgGraph random_dag(Rng& rng, int n_nodes, double edge_prob) {
    IfgGraph g;
    for (int i = 0; i < n_nodes; ++i) {
        IfgNode n;
        n.id = "n" + std::to_string(i);
        n.kind = static_cast<NodeKind>(rng.uniform_int(4));
        n.label = n.id;
        g.nodes.push_back(std::move(n));
    }
    for (int i = 0; i < n_nodes; ++i)
        for (int j = i + 1; j < n_nodes; ++j)
            if (rng.uniform() < edge_prob) g.edges.emplace("n" + std::to_string(i),
                                                           "n" + std::to_string(j));
    // Spine so that entry -> destination connectivity always survives.
    for (int i = 0; i + 1 < n_nodes; ++i)
        if (rng.uniform() < 0.5) g.edges.emplace("n" + std::to_string(i),
                                                 "n" + std::to_string(i + 1));
    g.edges.emplace("n0", "n" + std::to_string(std::max(1, n_nodes / 2)));
    g.edges.emplace("n" + std::to_string(std::max(1, n_nodes / 2)),
                    "n" + std::to_string(n_nodes - 1));
    g.entries = {"n0"};
    if (n_nodes > 4 && rng.uniform() < 0.5) g.entries.push_back("n1");
    g.destinations = {"n" + std::to_string(n_nodes - 1)};
    if (n_nodes > 5 && rng.uniform() < 0.4)
        g.destinations.push_back("n" + std::to_string(n_nodes - 2));
    // Entries must stay off the destination list.
    g.destinations.erase(std::remove_if(g.destinations.begin(), g.destinations.end(),
                                        [&](const std::string& d) { return g.is_entry(d); }),
                         g.destinations.end());
    if (g.destinations.empty()) g.destinations = {"n" + std::to_string(n_nodes - 1)};
    return prune_ifg(g);
}

// Adds back edges between non-destination nodes to force cycles.
inline IfgGraph random_cyclic(Rng& rng, int n_nodes, double edge_prob) {
    IfgGraph g = random_dag(rng, n_nodes, edge_prob);
    std::vector<std::string> non_dest;
    for (const auto& n : g.nodes)
        if (!g.is_destination(n.id)) non_dest.push_back(n.id);
    int added = 0;
    for (int attempt = 0; attempt < 50 && added < 2; ++attempt) {
        const auto& u = non_dest[rng.uniform_int(static_cast<int>(non_dest.size()))];
        const auto& v = non_dest[rng.uniform_int(static_cast<int>(non_dest.size()))];
        if (u == v) continue;
        auto fwd = bfs_reach(g, v);
        if (fwd.count(u) && !g.edges.count({u, v})) {  // u -> v closes a cycle
            g.edges.emplace(u, v);
            added++;
        }
    }
    return prune_ifg(g);
}

inline GameSpec random_game(Rng& rng, int n_nodes, bool cyclic, double beta = 100.0,
                            double rate_lo = 0.05, double rate_hi = 0.95) {
    IfgGraph g = cyclic ? random_cyclic(rng, n_nodes, 0.25) : random_dag(rng, n_nodes, 0.25);
    DetectionParams params;
    for (const auto& n : g.nodes) {
        params.fn[n.id] = rng.uniform(rate_lo, rate_hi);
        params.fp[n.id] = rng.uniform(rate_lo, rate_hi);
    }
    return GameSpec::build(g, std::move(params), beta);
}

// Fixed 18-node / 29-edge layered DAG at ransomware scale, two socket entry
// points and two targets.
inline IfgGraph synthetic_18_node() {
    IfgGraph g;
    auto add = [&](const std::string& id, NodeKind k) {
        g.nodes.push_back({id, k, id, std::nullopt});
    };
    add("s1", NodeKind::NetworkSocket);
    add("s2", NodeKind::NetworkSocket);
    for (int i = 1; i <= 12; ++i) add("p" + std::to_string(i), NodeKind::Process);
    add("f1", NodeKind::File);
    add("f2", NodeKind::File);
    add("t1", NodeKind::File);
    add("t2", NodeKind::Process);
    const char* edges[][2] = {
        {"s1", "p1"}, {"s1", "p2"}, {"s2", "p2"}, {"s2", "p3"},  {"p1", "p4"},  {"p1", "p5"},
        {"p2", "p5"}, {"p2", "p6"}, {"p3", "p6"}, {"p3", "f1"},  {"p4", "p7"},  {"p5", "p7"},
        {"p5", "p8"}, {"p6", "p8"}, {"p6", "f2"}, {"f1", "p9"},  {"p7", "p10"}, {"p7", "p9"},
        {"p8", "p10"}, {"p8", "p11"}, {"f2", "p11"}, {"p9", "p12"}, {"p10", "p12"},
        {"p10", "t1"}, {"p11", "t2"}, {"p12", "t1"}, {"p12", "t2"}, {"p4", "p8"}, {"p9", "t1"}};
    for (const auto& e : edges) g.edges.emplace(e[0], e[1]);
    g.entries = {"s1", "s2"};
    g.destinations = {"t1", "t2"};
    return g;
}

inline GameSpec synthetic_18_game(double beta, bool hidden, uint64_t rate_seed = 41) {
    IfgGraph g = synthetic_18_node();
    Rng rng(rate_seed);
    DetectionParams params;
    for (const auto& n : g.nodes) {
        params.fn[n.id] = rng.uniform(0.1, 0.4);
        params.fp[n.id] = rng.uniform(0.05, 0.3);
    }
    params.hidden = hidden;
    return GameSpec::build(g, std::move(params), beta);
}

// 30-node / 74-edge cyclic graph at nation-state scale.
inline IfgGraph synthetic_30_node() {
    IfgGraph g;
    for (int i = 0; i < 30; ++i) {
        IfgNode n;
        n.id = "n" + std::to_string(i);
        n.kind = i == 0 ? NodeKind::NetworkSocket
                        : (i == 29 ? NodeKind::Process : NodeKind::Process);
        n.label = n.id;
        g.nodes.push_back(std::move(n));
    }
    auto id = [](int i) { return "n" + std::to_string(i); };
    for (int i = 0; i + 1 < 30; ++i) g.edges.emplace(id(i), id(i + 1));  // 29
    for (int i = 0; i + 3 < 30; i += 2) g.edges.emplace(id(i), id(i + 3));  // 14
    for (int i = 0; i + 5 < 30; i += 3) g.edges.emplace(id(i), id(i + 5));  // 9
    for (int i = 0; i + 7 < 30; i += 2) g.edges.emplace(id(i), id(i + 7));  // 12
    for (int i = 1; i + 11 < 30; i += 4) g.edges.emplace(id(i), id(i + 11));  // 5
    // Back edges among interior nodes close cycles (none touch n29).
    g.edges.emplace(id(8), id(3));
    g.edges.emplace(id(15), id(6));
    g.edges.emplace(id(20), id(12));
    g.edges.emplace(id(26), id(18));
    g.edges.emplace(id(12), id(5));
    g.entries = {"n0"};
    g.destinations = {"n29"};
    return g;
}

inline GameSpec synthetic_30_game(double beta = 100.0, uint64_t rate_seed = 17) {
    IfgGraph g = synthetic_30_node();
    Rng rng(rate_seed);
    DetectionParams params;
    for (const auto& n : g.nodes) {
        params.fn[n.id] = rng.uniform(0.1, 0.5);
        params.fp[n.id] = rng.uniform(0.05, 0.4);
    }
    return GameSpec::build(g, std::move(params), beta);
}

}  // namespace testsupport
