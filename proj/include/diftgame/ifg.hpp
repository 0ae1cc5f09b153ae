#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "diftgame/common.hpp"

namespace diftgame {

enum class NodeKind { Process, File, NetworkSocket, Memory, Other };

std::string kind_to_string(NodeKind k);
NodeKind kind_from_string(const std::string& s);

struct IfgNode {
    std::string id;
    NodeKind kind = NodeKind::Other;
    std::string label;
    std::optional<std::string> path;  // set for file nodes with a known path
};

// Per-stage destination sets over the base graph; sets.size() == m.
struct StagePlan {
    int m = 1;
    std::vector<std::vector<std::string>> sets;
};

// Directed information-flow graph with entry and destination node sets.
// Edges are a set of ordered id pairs: parallel edges collapse on insert.
struct IfgGraph {
    std::vector<IfgNode> nodes;
    std::set<std::pair<std::string, std::string>> edges;
    std::vector<std::string> entries;
    std::vector<std::string> destinations;
    std::optional<StagePlan> stages;

    bool has_node(const std::string& id) const;
    const IfgNode& node(const std::string& id) const;
    size_t node_count() const { return nodes.size(); }
    size_t edge_count() const { return edges.size(); }

    std::vector<std::string> out_neighbors(const std::string& id) const;

    bool is_entry(const std::string& id) const;
    bool is_destination(const std::string& id) const;

    // Checks structural invariants: endpoints exist, entries/destinations
    // nonempty, disjoint, and name existing nodes; stage sets well formed.
    // Throws DomainError naming the offending identifier.
    void validate() const;
};

// Parses and validates the IFG JSON document format.
IfgGraph load_ifg(const std::string& json_text);
std::string ifg_to_json(const IfgGraph& g);

bool is_acyclic(const IfgGraph& g);

// Node ids reachable from `from` following edges forward (inclusive).
std::set<std::string> reachable_from(const IfgGraph& g, const std::vector<std::string>& from);
// Node ids from which some node of `to` is reachable (inclusive).
std::set<std::string> reaching_to(const IfgGraph& g, const std::vector<std::string>& to);

// Pruning: drop self loops, keep only nodes on an entry->destination path
// (plus stage_j -> stage_{j+1} path nodes for staged graphs), extract the
// induced subgraph on entries + destinations + survivors, then merge file
// nodes under each configured directory prefix into one super-node.
// Throws DomainError if no entry can reach any destination afterwards.
IfgGraph prune_ifg(const IfgGraph& g, const std::vector<std::string>& group_prefixes = {});

// Cycle removal by node versioning. Acyclic inputs come back unchanged.
// Versions append "#k" to the original id; entry->destination reachability
// is preserved exactly and the result is re-pruned so versions that reach
// no destination are dropped.
IfgGraph version_acyclic(const IfgGraph& g);

// Multi-stage expansion: m disjoint copies of g, each stage-j destination
// wired to its twin in copy j+1. Entries are copy-1 entries; destinations
// are the stage-m set in copy m. Requires g acyclic.
IfgGraph expand_multistage(const IfgGraph& g, const StagePlan& plan);

}  // namespace diftgame
