#pragma once

#include <vector>

#include "diftgame/common.hpp"
#include "diftgame/game.hpp"

namespace diftgame {

// One-shot matrix game at a single state: rows are defender actions, columns
// attacker actions, entries are continuation values.
struct QMatrix {
    StateId state = -1;
    std::vector<int> defender_actions;  // row labels
    std::vector<int> attacker_actions;  // column labels
    std::vector<std::vector<double>> q;  // q[row][col]

    size_t rows() const { return defender_actions.size(); }
    size_t cols() const { return attacker_actions.size(); }
};

struct StageSolution {
    double value = 0.0;
    std::vector<double> defender_mix;  // over rows, on the simplex
    int attacker_best_index = 0;       // column index of the pure best response
};

// Solves max_p min_a sum_d q[d][a] p[d] over the defender simplex with a
// dense two-phase simplex. The attacker best response is the column with
// the smallest security level, ties broken by lowest column index.
StageSolution solve_stage(const QMatrix& q);

}  // namespace diftgame
