#include "diftgame/ifg.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace diftgame {

using nlohmann::json;

std::string kind_to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Process: return "process";
        case NodeKind::File: return "file";
        case NodeKind::NetworkSocket: return "socket";
        case NodeKind::Memory: return "memory";
        case NodeKind::Other: return "other";
    }
    return "other";
}

NodeKind kind_from_string(const std::string& s) {
    if (s == "process") return NodeKind::Process;
    if (s == "file") return NodeKind::File;
    if (s == "socket") return NodeKind::NetworkSocket;
    if (s == "memory") return NodeKind::Memory;
    if (s == "other") return NodeKind::Other;
    throw DomainError("unknown node kind '" + s + "'");
}

bool IfgGraph::has_node(const std::string& id) const {
    return std::any_of(nodes.begin(), nodes.end(),
                       [&](const IfgNode& n) { return n.id == id; });
}

const IfgNode& IfgGraph::node(const std::string& id) const {
    for (const auto& n : nodes)
        if (n.id == id) return n;
    throw DomainError("unknown node '" + id + "'");
}

std::vector<std::string> IfgGraph::out_neighbors(const std::string& id) const {
    std::vector<std::string> out;
    for (const auto& [src, dst] : edges)
        if (src == id) out.push_back(dst);
    return out;
}

bool IfgGraph::is_entry(const std::string& id) const {
    return std::find(entries.begin(), entries.end(), id) != entries.end();
}

bool IfgGraph::is_destination(const std::string& id) const {
    return std::find(destinations.begin(), destinations.end(), id) != destinations.end();
}

void IfgGraph::validate() const {
    std::unordered_set<std::string> ids;
    for (const auto& n : nodes) {
        if (!ids.insert(n.id).second)
            throw DomainError("duplicate node id '" + n.id + "'");
    }
    for (const auto& [src, dst] : edges) {
        if (!ids.count(src)) throw DomainError("dangling endpoint " + src);
        if (!ids.count(dst)) throw DomainError("dangling endpoint " + dst);
    }
    if (entries.empty()) throw DomainError("entry set is empty");
    if (destinations.empty()) throw DomainError("destination set is empty");
    for (const auto& e : entries)
        if (!ids.count(e)) throw DomainError("dangling endpoint " + e);
    for (const auto& d : destinations)
        if (!ids.count(d)) throw DomainError("dangling endpoint " + d);
    for (const auto& e : entries)
        if (is_destination(e))
            throw DomainError("entry/destination overlap at '" + e + "'");
    if (stages) {
        if (stages->m < 1) throw DomainError("stage count must be >= 1");
        if (static_cast<int>(stages->sets.size()) != stages->m)
            throw DomainError("stage plan has " + std::to_string(stages->sets.size()) +
                              " sets but m=" + std::to_string(stages->m));
        for (const auto& set : stages->sets) {
            if (set.empty()) throw DomainError("empty stage destination set");
            for (const auto& v : set)
                if (!ids.count(v)) throw DomainError("dangling endpoint " + v);
        }
    }
}

IfgGraph load_ifg(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw DomainError(std::string("malformed IFG document: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("edges") ||
        !doc.contains("entries") || !doc.contains("destinations"))
        throw DomainError("IFG document must contain nodes, edges, entries, destinations");

    IfgGraph g;
    try {
        for (const auto& jn : doc.at("nodes")) {
            IfgNode n;
            n.id = jn.at("id").get<std::string>();
            n.kind = kind_from_string(jn.at("kind").get<std::string>());
            n.label = jn.value("label", n.id);
            if (jn.contains("path") && !jn.at("path").is_null())
                n.path = jn.at("path").get<std::string>();
            g.nodes.push_back(std::move(n));
        }
        for (const auto& je : doc.at("edges")) {
            if (!je.is_array() || je.size() != 2)
                throw DomainError("edge entries must be [src, dst] pairs");
            g.edges.emplace(je.at(0).get<std::string>(), je.at(1).get<std::string>());
        }
        g.entries = doc.at("entries").get<std::vector<std::string>>();
        g.destinations = doc.at("destinations").get<std::vector<std::string>>();
        if (doc.contains("stages") && !doc.at("stages").is_null()) {
            StagePlan plan;
            plan.m = doc.at("stages").at("m").get<int>();
            plan.sets = doc.at("stages").at("sets").get<std::vector<std::vector<std::string>>>();
            g.stages = std::move(plan);
        }
    } catch (const json::exception& e) {
        throw DomainError(std::string("malformed IFG document: ") + e.what());
    }
    g.validate();
    return g;
}

std::string ifg_to_json(const IfgGraph& g) {
    json doc;
    doc["nodes"] = json::array();
    for (const auto& n : g.nodes) {
        json jn{{"id", n.id}, {"kind", kind_to_string(n.kind)}, {"label", n.label}};
        if (n.path) jn["path"] = *n.path;
        doc["nodes"].push_back(jn);
    }
    doc["edges"] = json::array();
    for (const auto& [src, dst] : g.edges) doc["edges"].push_back(json::array({src, dst}));
    doc["entries"] = g.entries;
    doc["destinations"] = g.destinations;
    if (g.stages) {
        doc["stages"] = json{{"m", g.stages->m}, {"sets", g.stages->sets}};
    }
    return doc.dump(2) + "\n";
}

namespace {

using AdjMap = std::map<std::string, std::vector<std::string>>;

AdjMap forward_adj(const IfgGraph& g) {
    AdjMap adj;
    for (const auto& n : g.nodes) adj[n.id];
    for (const auto& [src, dst] : g.edges) adj[src].push_back(dst);
    return adj;
}

AdjMap backward_adj(const IfgGraph& g) {
    AdjMap adj;
    for (const auto& n : g.nodes) adj[n.id];
    for (const auto& [src, dst] : g.edges) adj[dst].push_back(src);
    return adj;
}

std::set<std::string> bfs(const AdjMap& adj, const std::vector<std::string>& seeds) {
    std::set<std::string> seen;
    std::queue<std::string> q;
    for (const auto& s : seeds) {
        if (adj.count(s) && seen.insert(s).second) q.push(s);
    }
    while (!q.empty()) {
        std::string cur = q.front();
        q.pop();
        for (const auto& nxt : adj.at(cur))
            if (seen.insert(nxt).second) q.push(nxt);
    }
    return seen;
}

// Keeps the listed nodes and the edges among them; entries, destinations
// and stage sets are filtered accordingly.
IfgGraph induced_subgraph(const IfgGraph& g, const std::set<std::string>& keep) {
    IfgGraph out;
    for (const auto& n : g.nodes)
        if (keep.count(n.id)) out.nodes.push_back(n);
    for (const auto& [src, dst] : g.edges)
        if (keep.count(src) && keep.count(dst)) out.edges.emplace(src, dst);
    for (const auto& e : g.entries)
        if (keep.count(e)) out.entries.push_back(e);
    for (const auto& d : g.destinations)
        if (keep.count(d)) out.destinations.push_back(d);
    if (g.stages) {
        StagePlan plan;
        plan.m = g.stages->m;
        for (const auto& set : g.stages->sets) {
            std::vector<std::string> filtered;
            for (const auto& v : set)
                if (keep.count(v)) filtered.push_back(v);
            if (filtered.empty())
                throw DomainError("pruning emptied a stage destination set");
            plan.sets.push_back(std::move(filtered));
        }
        out.stages = std::move(plan);
    }
    return out;
}

void drop_self_loops(IfgGraph& g) {
    for (auto it = g.edges.begin(); it != g.edges.end();) {
        if (it->first == it->second)
            it = g.edges.erase(it);
        else
            ++it;
    }
}

bool path_prefix_match(const std::string& path, const std::string& prefix) {
    if (path == prefix) return true;
    return path.size() > prefix.size() && path.compare(0, prefix.size(), prefix) == 0 &&
           path[prefix.size()] == '/';
}

void replace_ids(std::vector<std::string>& ids, const std::map<std::string, std::string>& remap) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& id : ids) {
        auto it = remap.find(id);
        const std::string& mapped = it == remap.end() ? id : it->second;
        if (seen.insert(mapped).second) out.push_back(mapped);
    }
    ids = std::move(out);
}

// Step 4: merge file nodes sharing a grouping prefix into one super-node
// named after the prefix. Longest matching prefix wins.
IfgGraph group_files(const IfgGraph& g, const std::vector<std::string>& prefixes_in) {
    std::vector<std::string> prefixes = prefixes_in;
    for (auto& p : prefixes)
        while (p.size() > 1 && p.back() == '/') p.pop_back();

    std::map<std::string, std::string> remap;  // old id -> super-node id
    for (const auto& n : g.nodes) {
        if (n.kind != NodeKind::File || !n.path) continue;
        std::string best;
        for (const auto& p : prefixes)
            if (path_prefix_match(*n.path, p) && p.size() > best.size()) best = p;
        if (!best.empty() && n.id != best) remap[n.id] = best;
    }
    if (remap.empty()) return g;

    IfgGraph out;
    std::set<std::string> present;
    for (const auto& n : g.nodes) {
        if (remap.count(n.id)) continue;
        out.nodes.push_back(n);
        present.insert(n.id);
    }
    for (const auto& [_, super_id] : remap) {
        if (!present.insert(super_id).second) continue;
        IfgNode super;
        super.id = super_id;
        super.kind = NodeKind::File;
        super.label = super_id;
        super.path = super_id;
        out.nodes.push_back(std::move(super));
    }
    auto mapped = [&](const std::string& id) {
        auto it = remap.find(id);
        return it == remap.end() ? id : it->second;
    };
    for (const auto& [src, dst] : g.edges) out.edges.emplace(mapped(src), mapped(dst));
    out.entries = g.entries;
    out.destinations = g.destinations;
    replace_ids(out.entries, remap);
    replace_ids(out.destinations, remap);
    if (g.stages) {
        StagePlan plan;
        plan.m = g.stages->m;
        for (const auto& set : g.stages->sets) {
            std::vector<std::string> s = set;
            replace_ids(s, remap);
            plan.sets.push_back(std::move(s));
        }
        out.stages = std::move(plan);
    }
    drop_self_loops(out);  // grouping can fold member-to-member edges
    return out;
}

bool any_entry_reaches_destination(const IfgGraph& g) {
    auto fwd = bfs(forward_adj(g), g.entries);
    for (const auto& d : g.destinations)
        if (fwd.count(d)) return true;
    return false;
}

}  // namespace

std::set<std::string> reachable_from(const IfgGraph& g, const std::vector<std::string>& from) {
    return bfs(forward_adj(g), from);
}

std::set<std::string> reaching_to(const IfgGraph& g, const std::vector<std::string>& to) {
    return bfs(backward_adj(g), to);
}

bool is_acyclic(const IfgGraph& g) {
    auto adj = forward_adj(g);
    std::map<std::string, int> indeg;
    for (const auto& [id, _] : adj) indeg[id] = 0;
    for (const auto& [src, outs] : adj)
        for (const auto& dst : outs) indeg[dst]++;
    std::queue<std::string> q;
    for (const auto& [id, d] : indeg)
        if (d == 0) q.push(id);
    size_t removed = 0;
    while (!q.empty()) {
        std::string cur = q.front();
        q.pop();
        removed++;
        for (const auto& nxt : adj.at(cur))
            if (--indeg[nxt] == 0) q.push(nxt);
    }
    return removed == g.nodes.size();
}

IfgGraph prune_ifg(const IfgGraph& g, const std::vector<std::string>& group_prefixes) {
    g.validate();
    IfgGraph work = g;
    drop_self_loops(work);  // step 1 (parallel edges already collapse in the set)

    // Step 2: survivors lie on an entry->destination path; staged graphs also
    // keep nodes on a stage_j -> stage_{j+1} path.
    auto fwd_adj = forward_adj(work);
    auto bwd_adj = backward_adj(work);
    auto on_path = [&](const std::vector<std::string>& from, const std::vector<std::string>& to) {
        auto fwd = bfs(fwd_adj, from);
        auto bwd = bfs(bwd_adj, to);
        std::set<std::string> both;
        for (const auto& id : fwd)
            if (bwd.count(id)) both.insert(id);
        return both;
    };
    std::set<std::string> survivors = on_path(work.entries, work.destinations);
    if (work.stages) {
        for (int j = 0; j + 1 < work.stages->m; ++j) {
            auto stage_path = on_path(work.stages->sets[j], work.stages->sets[j + 1]);
            survivors.insert(stage_path.begin(), stage_path.end());
        }
    }

    // Step 3: induced subgraph on entries + destinations + survivors.
    std::set<std::string> keep = survivors;
    keep.insert(work.entries.begin(), work.entries.end());
    keep.insert(work.destinations.begin(), work.destinations.end());
    IfgGraph pruned = induced_subgraph(work, keep);

    // Step 4: file grouping, then step 1 again (group_files dedups/drops loops).
    if (!group_prefixes.empty()) pruned = group_files(pruned, group_prefixes);

    if (!any_entry_reaches_destination(pruned))
        throw DomainError("no attack path survives pruning");
    pruned.validate();
    return pruned;
}

namespace {

// Tarjan strongly connected components; returns components in a
// deterministic order, each as a vector in discovery order.
struct SccFinder {
    const AdjMap& adj;
    std::map<std::string, int> index, low;
    std::map<std::string, bool> on_stack;
    std::vector<std::string> stack;
    int counter = 0;
    std::vector<std::vector<std::string>> components;

    explicit SccFinder(const AdjMap& a) : adj(a) {}

    void run() {
        for (const auto& [id, _] : adj)
            if (!index.count(id)) visit(id);
    }

    void visit(const std::string& v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        for (const auto& w : adj.at(v)) {
            if (!index.count(w)) {
                visit(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::vector<std::string> comp;
            while (true) {
                std::string w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                comp.push_back(w);
                if (w == v) break;
            }
            std::reverse(comp.begin(), comp.end());
            components.push_back(std::move(comp));
        }
    }
};

std::string version_id(const std::string& base, int layer) {
    return layer == 1 ? base : base + "#" + std::to_string(layer);
}

// Re-prune without file grouping; versions that reach no destination drop out.
IfgGraph reprune(const IfgGraph& g) { return prune_ifg(g, {}); }

// True when every entry->destination reachability pair of `ref` holds in `g`
// after collapsing version ids to their base node.
std::map<std::pair<std::string, std::string>, bool> entry_dest_matrix(const IfgGraph& g) {
    std::map<std::pair<std::string, std::string>, bool> matrix;
    auto adj = forward_adj(g);
    auto base = [](const std::string& id) {
        auto pos = id.rfind('#');
        return pos == std::string::npos ? id : id.substr(0, pos);
    };
    std::map<std::string, std::vector<std::string>> dest_versions;
    for (const auto& d : g.destinations) dest_versions[base(d)].push_back(d);
    for (const auto& e : g.entries) {
        auto fwd = bfs(adj, {e});
        for (const auto& [dbase, versions] : dest_versions) {
            bool hit = std::any_of(versions.begin(), versions.end(),
                                   [&](const std::string& v) { return fwd.count(v) > 0; });
            matrix[{base(e), dbase}] = matrix[{base(e), dbase}] || hit;
        }
    }
    return matrix;
}

std::set<std::string> base_ids(const IfgGraph& g) {
    std::set<std::string> out;
    for (const auto& n : g.nodes) {
        auto pos = n.id.rfind('#');
        out.insert(pos == std::string::npos ? n.id : n.id.substr(0, pos));
    }
    return out;
}

IfgGraph drop_node(const IfgGraph& g, const std::string& id) {
    std::set<std::string> keep;
    for (const auto& n : g.nodes)
        if (n.id != id) keep.insert(n.id);
    return induced_subgraph(g, keep);
}

}  // namespace

IfgGraph version_acyclic(const IfgGraph& g) {
    g.validate();
    if (is_acyclic(g)) return g;

    auto adj = forward_adj(g);
    SccFinder scc(adj);
    scc.run();

    // Layered unrolling of each nontrivial component: intra-component edges
    // that go backwards in the component order advance one layer, so any
    // simple path through a k-node component fits within k layers.
    std::map<std::string, int> comp_of, order_in_comp, comp_size;
    for (size_t c = 0; c < scc.components.size(); ++c) {
        const auto& comp = scc.components[c];
        for (size_t i = 0; i < comp.size(); ++i) {
            comp_of[comp[i]] = static_cast<int>(c);
            order_in_comp[comp[i]] = static_cast<int>(i);
            comp_size[comp[i]] = static_cast<int>(comp.size());
        }
    }
    auto nontrivial = [&](const std::string& id) { return comp_size.at(id) > 1; };
    auto layers_of = [&](const std::string& id) { return nontrivial(id) ? comp_size.at(id) : 1; };

    IfgGraph out;
    for (const auto& n : g.nodes) {
        for (int k = 1; k <= layers_of(n.id); ++k) {
            IfgNode vn = n;
            vn.id = version_id(n.id, k);
            out.nodes.push_back(std::move(vn));
        }
    }
    for (const auto& [src, dst] : g.edges) {
        bool same_comp = comp_of.at(src) == comp_of.at(dst) && nontrivial(src);
        if (!same_comp) {
            // Edges leave a component from every layer and enter at layer 1.
            for (int k = 1; k <= layers_of(src); ++k)
                out.edges.emplace(version_id(src, k), version_id(dst, 1));
        } else if (order_in_comp.at(src) < order_in_comp.at(dst)) {
            for (int k = 1; k <= layers_of(src); ++k)
                out.edges.emplace(version_id(src, k), version_id(dst, k));
        } else {
            for (int k = 1; k + 1 <= layers_of(src); ++k)
                out.edges.emplace(version_id(src, k), version_id(dst, k + 1));
        }
    }
    out.entries = g.entries;  // layer 1 keeps the original id
    for (const auto& d : g.destinations)
        for (int k = 1; k <= layers_of(d); ++k)
            out.destinations.push_back(version_id(d, k));
    if (g.stages) {
        StagePlan plan;
        plan.m = g.stages->m;
        for (const auto& set : g.stages->sets) {
            std::vector<std::string> s;
            for (const auto& v : set)
                for (int k = 1; k <= layers_of(v); ++k) s.push_back(version_id(v, k));
            plan.sets.push_back(std::move(s));
        }
        out.stages = std::move(plan);
    }

    out = reprune(out);

    // Greedy minimization: drop version nodes that add nothing, i.e. removal
    // keeps every entry->destination pair reachable and keeps at least one
    // image of every base node alive.
    auto ref_matrix = entry_dest_matrix(g);
    auto ref_bases = base_ids(reprune(g));
    std::vector<std::string> candidates;
    for (const auto& n : out.nodes)
        if (n.id.rfind('#') != std::string::npos) candidates.push_back(n.id);
    std::sort(candidates.begin(), candidates.end(), std::greater<>());
    for (const auto& cand : candidates) {
        if (!out.has_node(cand)) continue;
        IfgGraph repruned;
        try {
            IfgGraph tentative = drop_node(out, cand);
            if (tentative.entries.empty() || tentative.destinations.empty()) continue;
            repruned = reprune(tentative);
        } catch (const DomainError&) {
            continue;
        }
        if (entry_dest_matrix(repruned) == ref_matrix && base_ids(repruned) == ref_bases)
            out = std::move(repruned);
    }
    out.validate();
    return out;
}

IfgGraph expand_multistage(const IfgGraph& g, const StagePlan& plan) {
    g.validate();
    if (!is_acyclic(g)) throw DomainError("multi-stage expansion requires an acyclic graph");
    if (plan.m < 1) throw DomainError("stage count must be >= 1");
    if (static_cast<int>(plan.sets.size()) != plan.m)
        throw DomainError("stage plan has " + std::to_string(plan.sets.size()) +
                          " sets but m=" + std::to_string(plan.m));
    for (const auto& set : plan.sets) {
        if (set.empty()) throw DomainError("empty stage destination set");
        for (const auto& v : set)
            if (!g.has_node(v)) throw DomainError("stage destination '" + v + "' missing from graph");
    }

    if (plan.m == 1) {
        IfgGraph out = g;
        out.destinations = plan.sets[0];
        out.stages.reset();
        out.validate();
        return out;
    }

    auto copy_id = [](const std::string& id, int j) { return id + "@" + std::to_string(j); };

    IfgGraph out;
    for (int j = 1; j <= plan.m; ++j) {
        for (const auto& n : g.nodes) {
            IfgNode cn = n;
            cn.id = copy_id(n.id, j);
            out.nodes.push_back(std::move(cn));
        }
        for (const auto& [src, dst] : g.edges)
            out.edges.emplace(copy_id(src, j), copy_id(dst, j));
    }
    for (int j = 1; j < plan.m; ++j)
        for (const auto& v : plan.sets[j - 1])
            out.edges.emplace(copy_id(v, j), copy_id(v, j + 1));
    for (const auto& e : g.entries) out.entries.push_back(copy_id(e, 1));
    for (const auto& d : plan.sets[plan.m - 1]) out.destinations.push_back(copy_id(d, plan.m));
    out.validate();
    return out;
}

}  // namespace diftgame
