#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "diftgame/common.hpp"
#include "diftgame/ifg.hpp"

namespace diftgame {

// Per-node false-negative / false-positive trap rates, strictly inside (0,1).
// hidden=true conceals them from every solver-facing accessor; only the
// simulator can read them then (it plays the role of the real system).
struct DetectionParams {
    std::map<std::string, double> fn;
    std::map<std::string, double> fp;
    bool hidden = false;
};

// Attacker actions are "drop out" or "move to node"; defender actions are
// "no trap" or "trap node". Both are encoded as the internal node index of
// the target, with kDrop / kNoTrap as the shared sentinel.
constexpr int kDrop = -1;
constexpr int kNoTrap = -1;

using StateId = int;

enum class StateKind { Virtual, Node, DropOut, Detected, FalsePositive };

struct HiddenParamsError : DomainError {
    HiddenParamsError() : DomainError("detection parameters are hidden from solvers") {}
};

class SimulatorAccess;  // passkey minted only by the simulator

// The stochastic game induced by an IFG: states {v0, v1..vN, phi, tau_A,
// tau_B} with destinations renumbered to the front, per-state action sets,
// and the trap-rate transition kernel. Immutable after build.
class GameSpec {
public:
    static GameSpec build(const IfgGraph& g, DetectionParams params, double beta);

    const IfgGraph& graph() const { return graph_; }
    double beta() const { return beta_; }
    bool hidden() const { return params_.hidden; }

    int node_count() const { return static_cast<int>(node_ids_.size()); }
    int destination_count() const { return q_; }
    int state_count() const { return node_count() + 4; }

    StateId virtual_state() const { return 0; }
    StateId dropout_state() const { return node_count() + 1; }
    StateId detected_state() const { return node_count() + 2; }
    StateId false_positive_state() const { return node_count() + 3; }

    bool is_node_state(StateId s) const { return s >= 1 && s <= node_count(); }
    int node_of(StateId s) const;              // internal node index, 0-based
    StateId node_state(int node_idx) const { return node_idx + 1; }
    bool is_destination_state(StateId s) const {
        return is_node_state(s) && node_of(s) < q_;
    }
    bool is_absorbing(StateId s) const {
        return is_destination_state(s) || s > node_count();
    }

    const std::string& node_id(int node_idx) const { return node_ids_.at(node_idx); }
    std::optional<int> node_index(const std::string& id) const;
    std::string state_name(StateId s) const;
    std::optional<StateId> state_by_name(const std::string& name) const;

    // Action sets in canonical order: attacker = out-neighbors ascending then
    // kDrop last; defender = kNoTrap first then out-neighbors ascending.
    // Empty at absorbing states; at v0 the attacker set is the entry set and
    // the defender set is {kNoTrap}.
    const std::vector<int>& attacker_actions(StateId s) const;
    const std::vector<int>& defender_actions(StateId s) const;

    // Trap rates by internal node index; refuse to answer when hidden.
    double fn(int node_idx) const;
    double fp(int node_idx) const;
    double raw_fn(int node_idx, const SimulatorAccess&) const { return fn_[node_idx]; }
    double raw_fp(int node_idx, const SimulatorAccess&) const { return fp_[node_idx]; }

    const DetectionParams& params() const;  // refuses when hidden

    // True when the induced state graph has no cycles (destination nodes are
    // absorbing, so IFG cycles through destinations do not count).
    bool state_graph_acyclic() const;

    // Non-absorbing state successors in the state graph, deduplicated,
    // ascending; includes phi/tau states when reachable under some (a, d).
    std::vector<StateId> state_successors(StateId s) const;

private:
    GameSpec() = default;

    // Serialization round-trips the rates even when hidden; hidden only
    // gates in-process solver access.
    friend std::string game_to_json(const GameSpec& spec);

    IfgGraph graph_;
    DetectionParams params_;
    double beta_ = 0.0;
    int q_ = 0;
    std::vector<std::string> node_ids_;           // internal order, destinations first
    std::map<std::string, int> index_of_;
    std::vector<double> fn_, fp_;                 // by internal node index
    std::vector<std::vector<int>> out_;           // internal adjacency, ascending
    std::vector<std::vector<int>> attacker_actions_, defender_actions_;  // by state
    mutable std::optional<bool> acyclic_cache_;
};

struct TransitionEntry {
    StateId state;
    double probability;
};

// Support of P(s, a, d, .). Throws HiddenParamsError when rates are hidden;
// the simulator uses the SimulatorAccess overload.
std::vector<TransitionEntry> transition(const GameSpec& spec, StateId s, int a, int d);
std::vector<TransitionEntry> transition(const GameSpec& spec, StateId s, int a, int d,
                                        const SimulatorAccess& key);

// (attacker payoff, defender payoff) at an absorbing state; sums to beta.
std::pair<double, double> terminal_payoff(const GameSpec& spec, StateId s);

// Mixed stationary strategies: per-state probability vectors aligned with
// the canonical action order. apt covers v0 and non-destination nodes; dift
// covers non-destination nodes only (v0 has the single no-trap action).
struct Strategy {
    std::vector<std::vector<double>> apt;
    std::vector<std::vector<double>> dift;

    static Strategy empty(const GameSpec& spec);
    static Strategy uniform(const GameSpec& spec);
};

struct StrategyCheck {
    bool ok = true;
    std::string message;
};

// Full pair check: both sides must carry simplex distributions over the
// right action sets. The one-sided variants validate a single player's part
// (the simulator takes the two players' strategies as separate objects).
StrategyCheck validate_strategy(const GameSpec& spec, const Strategy& s);
StrategyCheck validate_attacker(const GameSpec& spec, const Strategy& s);
StrategyCheck validate_defender(const GameSpec& spec, const Strategy& s);

// Game JSON document: the IFG fields plus fn/fp/beta/hidden.
GameSpec load_game(const std::string& json_text);
std::string game_to_json(const GameSpec& spec);

DetectionParams load_params(const std::string& json_text);

// Strategy JSON: {"apt":{state:{action:prob}},"dift":{state:{action:prob}}}
// with node ids as action keys, "phi" for drop and "0" for no-trap.
Strategy strategy_from_json(const GameSpec& spec, const std::string& json_text);
std::string strategy_to_json(const GameSpec& spec, const Strategy& s);

class SimulatorAccess {
    SimulatorAccess() = default;
    friend class SimulatorKeyMint;
};

// Defined in simulator.cpp; nothing else can construct a SimulatorAccess.
class SimulatorKeyMint {
    static SimulatorAccess key() { return {}; }
    friend struct SimulatorInternals;
};

}  // namespace diftgame
