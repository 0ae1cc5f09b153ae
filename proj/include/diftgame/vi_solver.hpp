#pragma once

#include <string>
#include <vector>

#include "diftgame/game.hpp"
#include "diftgame/stage_lp.hpp"

namespace diftgame {

// Topological order and hierarchical levels of the state graph.
// Level 1 holds v0; all absorbing states are pinned to the last level.
struct Leveling {
    std::vector<StateId> topo_order;  // non-absorbing states first, then absorbing
    std::vector<int> level;           // by state id, 1-based
    int level_count = 0;              // M

    std::vector<StateId> states_at(int lvl) const;
};

struct SolveReport {
    std::vector<double> values;    // by state id
    Strategy defender;             // mixes per non-absorbing state (none at v0)
    Strategy attacker_best;        // pure best responses, point masses
    int iterations = 0;            // sweeps performed (1 for the level sweep)
    double final_delta = 0.0;
    std::vector<double> trace_v0;     // V(v0) after each sweep
    std::vector<double> delta_trace;  // max-abs change per sweep
    bool converged = true;
    bool monotone = true;          // per-sweep V^(k+1) >= V^(k) - 1e-9 held
};

// Boundary value vector: beta at tau_A and phi, zero elsewhere (destinations
// and tau_B stay zero through every iteration).
std::vector<double> boundary_values(const GameSpec& spec);

// Q(s,a,d) = sum_s' P(s,a,d,s') V(s'). Rows follow defender_actions(s),
// columns attacker_actions(s). Refuses hidden detection parameters.
QMatrix q_from_values(const GameSpec& spec, StateId s, const std::vector<double>& values);

// Iterative solver, safe on cyclic state graphs. Sweeps Jacobi-style until
// the max absolute change drops to delta or the iteration cap is hit (the
// report then carries converged=false). The defender strategy is extracted
// once from the final values.
SolveReport value_iteration(const GameSpec& spec, double delta, long max_iterations = 1000000);

// Kahn topological sort; throws DomainError naming a cycle witness.
Leveling compute_leveling(const GameSpec& spec);

// Single backward sweep over hierarchical levels; acyclic state graphs only.
// Values match the value_iteration fixed point exactly.
SolveReport solve_acyclic(const GameSpec& spec);

// Solution document {"values":..,"defender":..,"iterations":..,"trace_v0":..}
// plus the attacker best response.
std::string solution_to_json(const GameSpec& spec, const SolveReport& report);

}  // namespace diftgame
