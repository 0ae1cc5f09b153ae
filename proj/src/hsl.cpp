#include "diftgame/hsl.hpp"

#include <algorithm>

#include "diftgame/stage_lp.hpp"

namespace diftgame {

SolveReport hsl_solve(const GameSpec& spec, QOracle& oracle, uint64_t seed) {
    Leveling lv = compute_leveling(spec);  // errors on cyclic state graphs

    SolveReport report;
    report.values = boundary_values(spec);

    // Random initial pair: a uniformly drawn action per strategy-bearing
    // state. Coordinates at levels not yet processed feed the oracle's
    // predictions until their level overwrites them.
    Rng rng(seed);
    Strategy apt = Strategy::empty(spec);
    Strategy dift = Strategy::empty(spec);
    for (StateId s = 0; s < spec.state_count(); ++s) {
        if (spec.is_absorbing(s)) continue;
        std::vector<double> pa(spec.attacker_actions(s).size(), 0.0);
        pa[rng.uniform_int(static_cast<int>(pa.size()))] = 1.0;
        apt.apt[s] = std::move(pa);
        if (s == spec.virtual_state()) continue;
        std::vector<double> pd(spec.defender_actions(s).size(), 0.0);
        pd[rng.uniform_int(static_cast<int>(pd.size()))] = 1.0;
        dift.dift[s] = std::move(pd);
    }

    for (int k = lv.level_count - 1; k >= 1; --k) {
        // Queries within a level run against the pair frozen at level start;
        // same-level states cannot reach each other, so commit order is moot.
        const Strategy frozen_apt = apt;
        const Strategy frozen_dift = dift;
        for (StateId s : lv.states_at(k)) {
            if (spec.is_absorbing(s)) continue;
            QMatrix qm;
            qm.state = s;
            qm.defender_actions = spec.defender_actions(s);
            qm.attacker_actions = spec.attacker_actions(s);
            qm.q.assign(qm.rows(), std::vector<double>(qm.cols(), 0.0));
            for (size_t di = 0; di < qm.rows(); ++di)
                for (size_t ai = 0; ai < qm.cols(); ++ai)
                    qm.q[di][ai] = oracle.q(spec, frozen_apt, frozen_dift, report.values, s,
                                            qm.attacker_actions[ai], qm.defender_actions[di]);
            auto sol = solve_stage(qm);
            report.values[s] = sol.value;
            if (s != spec.virtual_state()) dift.dift[s] = sol.defender_mix;
            std::vector<double> pa(qm.cols(), 0.0);
            pa[sol.attacker_best_index] = 1.0;
            apt.apt[s] = std::move(pa);
        }
    }

    report.defender = Strategy::empty(spec);
    report.defender.dift = dift.dift;
    report.attacker_best = Strategy::empty(spec);
    report.attacker_best.apt = apt.apt;
    report.iterations = 1;
    report.final_delta = 0.0;
    report.trace_v0 = {report.values[spec.virtual_state()]};
    report.delta_trace = {0.0};
    return report;
}

SolveReport hsl_solve(const GameSpec& spec, const ValueNet& net, uint64_t seed) {
    if (net.encoding().output_dim != spec.state_count())
        throw DomainError("net encoding does not match this game");
    NetQOracle oracle(net);
    return hsl_solve(spec, oracle, seed);
}

}  // namespace diftgame
