#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "diftgame/game.hpp"

namespace diftgame {

struct Rollout {
    std::vector<StateId> states;              // s_0 .. s_T
    std::vector<std::pair<int, int>> actions; // (a_t, d_t) per step
    StateId terminal = -1;
    int termination_time = 0;                 // T
    double payoff_attacker = 0.0;
    double payoff_defender = 0.0;
    bool capped = false;                      // step cap hit (cyclic games only)
};

struct RolloutStats {
    long long rollouts = 0;       // uncapped rollouts aggregated below
    long long capped = 0;         // excluded from every mean
    long long count_phi = 0, count_tau_a = 0, count_tau_b = 0, count_dest = 0;
    double freq_phi = 0.0, freq_tau_a = 0.0, freq_tau_b = 0.0, freq_dest = 0.0;
    double u_attacker = 0.0, u_defender = 0.0;
    double stderr_attacker = 0.0, stderr_defender = 0.0;
};

// One play of the game under the given stationary strategies, using the true
// detection rates even when they are hidden. Deterministic given the seed.
Rollout rollout(const GameSpec& spec, const Strategy& apt, const Strategy& dift,
                StateId start, uint64_t seed);

// Aggregates n rollouts whose streams derive from (seed, rollout index), so
// results do not depend on execution order. Capped rollouts are counted and
// excluded from the payoff means rather than truncated into a payoff.
RolloutStats estimate(const GameSpec& spec, const Strategy& apt, const Strategy& dift,
                      StateId start, long long n, uint64_t seed, int threads = 1);

// Monte-Carlo value vector: mean defender payoff from n rollouts started at
// each non-absorbing state; absorbing states are set analytically. This is
// the one value-producing path that works with hidden parameters.
std::vector<double> value_samples(const GameSpec& spec, const Strategy& apt,
                                  const Strategy& dift, long long n_per_state, uint64_t seed,
                                  int threads = 1);

std::string stats_to_json(const GameSpec& spec, const RolloutStats& stats);

}  // namespace diftgame
