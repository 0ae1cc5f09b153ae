#pragma once

#include <cstdint>

#include "diftgame/value_net.hpp"
#include "diftgame/vi_solver.hpp"

namespace diftgame {

// Supplier of Q(s,a,d) estimates for the level-wise policy iteration. The
// net-backed oracle reads only the maintained strategy pair; an exact oracle
// (tests) may instead read the maintained value vector.
class QOracle {
public:
    virtual ~QOracle() = default;
    virtual double q(const GameSpec& spec, const Strategy& apt, const Strategy& dift,
                     const std::vector<double>& values, StateId s, int a, int d) = 0;
};

class NetQOracle : public QOracle {
public:
    explicit NetQOracle(const ValueNet& net) : net_(net) {}
    double q(const GameSpec&, const Strategy& apt, const Strategy& dift,
             const std::vector<double>&, StateId s, int a, int d) override {
        return extract_q(net_, apt, dift, s, a, d);
    }

private:
    const ValueNet& net_;
};

// Level-wise policy iteration over the hierarchical levels, highest first:
// Q-values for each state come from the oracle against the strategy pair
// frozen at level start, the stage LP yields the value and defender mix, and
// the attacker side is set to the pure best response. Works without reading
// FN/FP. Requires an acyclic state graph.
SolveReport hsl_solve(const GameSpec& spec, QOracle& oracle, uint64_t seed);
SolveReport hsl_solve(const GameSpec& spec, const ValueNet& net, uint64_t seed);

}  // namespace diftgame
