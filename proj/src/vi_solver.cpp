#include "diftgame/vi_solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <sstream>

#include "json.hpp"

namespace diftgame {

using nlohmann::json;

std::vector<StateId> Leveling::states_at(int lvl) const {
    std::vector<StateId> out;
    for (StateId s = 0; s < static_cast<StateId>(level.size()); ++s)
        if (level[s] == lvl) out.push_back(s);
    return out;
}

std::vector<double> boundary_values(const GameSpec& spec) {
    std::vector<double> v(spec.state_count(), 0.0);
    v[spec.detected_state()] = spec.beta();
    v[spec.dropout_state()] = spec.beta();
    return v;
}

QMatrix q_from_values(const GameSpec& spec, StateId s, const std::vector<double>& values) {
    if (spec.is_absorbing(s))
        throw DomainError("Q matrix requested at absorbing state " + spec.state_name(s));
    QMatrix qm;
    qm.state = s;
    qm.defender_actions = spec.defender_actions(s);
    qm.attacker_actions = spec.attacker_actions(s);
    qm.q.assign(qm.rows(), std::vector<double>(qm.cols(), 0.0));
    for (size_t di = 0; di < qm.rows(); ++di) {
        for (size_t ai = 0; ai < qm.cols(); ++ai) {
            double q = 0.0;
            for (const auto& [next, prob] : transition(spec, s, qm.attacker_actions[ai],
                                                       qm.defender_actions[di]))
                q += prob * values[next];
            qm.q[di][ai] = q;
        }
    }
    return qm;
}

namespace {

// Stage solve per non-absorbing state against a fixed value vector; fills
// the strategy pair of the report (defender mix, attacker pure response).
void extract_strategies(const GameSpec& spec, const std::vector<double>& values,
                        SolveReport& report) {
    report.defender = Strategy::empty(spec);
    report.attacker_best = Strategy::empty(spec);
    for (StateId s = 0; s < spec.state_count(); ++s) {
        if (spec.is_absorbing(s)) continue;
        auto sol = solve_stage(q_from_values(spec, s, values));
        if (s != spec.virtual_state()) report.defender.dift[s] = sol.defender_mix;
        std::vector<double> pa(spec.attacker_actions(s).size(), 0.0);
        pa[sol.attacker_best_index] = 1.0;
        report.attacker_best.apt[s] = std::move(pa);
    }
}

}  // namespace

SolveReport value_iteration(const GameSpec& spec, double delta, long max_iterations) {
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
    if (spec.hidden()) throw HiddenParamsError();

    std::vector<double> prev(spec.state_count(), 0.0);  // V^(0)
    std::vector<double> cur = boundary_values(spec);    // V^(1)

    SolveReport report;
    double gap = 0.0;
    for (int s = 0; s < spec.state_count(); ++s) gap = std::max(gap, std::abs(cur[s] - prev[s]));

    while (gap > delta) {
        if (report.iterations >= max_iterations) {
            report.converged = false;
            break;
        }
        std::vector<double> next = boundary_values(spec);
        for (StateId s = 0; s < spec.state_count(); ++s) {
            if (spec.is_absorbing(s)) continue;
            next[s] = solve_stage(q_from_values(spec, s, cur)).value;
        }
        gap = 0.0;
        for (int s = 0; s < spec.state_count(); ++s) {
            double d = next[s] - cur[s];
            gap = std::max(gap, std::abs(d));
            if (d < -1e-9) report.monotone = false;
        }
        report.iterations++;
        report.trace_v0.push_back(next[spec.virtual_state()]);
        report.delta_trace.push_back(gap);
        prev = std::move(cur);
        cur = std::move(next);
    }

    report.final_delta = gap;
    report.values = std::move(cur);
    extract_strategies(spec, report.values, report);
    return report;
}

Leveling compute_leveling(const GameSpec& spec) {
    int n = spec.state_count();
    std::vector<std::vector<StateId>> adj(n);
    std::vector<int> indeg(n, 0);
    for (StateId s = 0; s < n; ++s) {
        if (spec.is_absorbing(s)) continue;
        adj[s] = spec.state_successors(s);
        for (StateId t : adj[s]) indeg[t]++;
    }

    Leveling lv;
    lv.level.assign(n, 0);
    std::queue<StateId> q;
    for (StateId s = 0; s < n; ++s)
        if (indeg[s] == 0) q.push(s);
    std::vector<int> fwd_level(n, 1);
    while (!q.empty()) {
        StateId s = q.front();
        q.pop();
        lv.topo_order.push_back(s);
        for (StateId t : adj[s]) {
            fwd_level[t] = std::max(fwd_level[t], fwd_level[s] + 1);
            if (--indeg[t] == 0) q.push(t);
        }
    }
    if (lv.topo_order.size() != static_cast<size_t>(n)) {
        // Walk the residual graph to exhibit one cycle.
        std::vector<int> state(n, 0);
        std::vector<StateId> stack;
        std::string witness;
        std::function<bool(StateId)> dfs = [&](StateId s) {
            state[s] = 1;
            stack.push_back(s);
            for (StateId t : adj[s]) {
                if (state[t] == 1) {
                    std::ostringstream os;
                    auto it = std::find(stack.begin(), stack.end(), t);
                    for (; it != stack.end(); ++it) os << spec.state_name(*it) << " -> ";
                    os << spec.state_name(t);
                    witness = os.str();
                    return true;
                }
                if (state[t] == 0 && dfs(t)) return true;
            }
            stack.pop_back();
            state[s] = 2;
            return false;
        };
        for (StateId s = 0; s < n && witness.empty(); ++s)
            if (state[s] == 0) dfs(s);
        throw DomainError("state graph has a cycle: " + witness);
    }

    int max_nonabs = 1;
    for (StateId s = 0; s < n; ++s)
        if (!spec.is_absorbing(s)) max_nonabs = std::max(max_nonabs, fwd_level[s]);
    lv.level_count = max_nonabs + 1;
    for (StateId s = 0; s < n; ++s)
        lv.level[s] = spec.is_absorbing(s) ? lv.level_count : fwd_level[s];

    // Keep the topological order consistent with the level pinning.
    std::stable_sort(lv.topo_order.begin(), lv.topo_order.end(),
                     [&](StateId a, StateId b) { return lv.level[a] < lv.level[b]; });
    return lv;
}

SolveReport solve_acyclic(const GameSpec& spec) {
    if (spec.hidden()) throw HiddenParamsError();
    Leveling lv = compute_leveling(spec);

    SolveReport report;
    report.values = boundary_values(spec);
    report.defender = Strategy::empty(spec);
    report.attacker_best = Strategy::empty(spec);
    for (int k = lv.level_count - 1; k >= 1; --k) {
        for (StateId s : lv.states_at(k)) {
            if (spec.is_absorbing(s)) continue;
            auto sol = solve_stage(q_from_values(spec, s, report.values));
            report.values[s] = sol.value;
            if (s != spec.virtual_state()) report.defender.dift[s] = sol.defender_mix;
            std::vector<double> pa(spec.attacker_actions(s).size(), 0.0);
            pa[sol.attacker_best_index] = 1.0;
            report.attacker_best.apt[s] = std::move(pa);
        }
    }
    report.iterations = 1;
    report.final_delta = 0.0;
    report.trace_v0 = {report.values[spec.virtual_state()]};
    report.delta_trace = {0.0};
    return report;
}

std::string solution_to_json(const GameSpec& spec, const SolveReport& report) {
    json doc;
    doc["values"] = json::object();
    for (StateId s = 0; s < spec.state_count(); ++s)
        doc["values"][spec.state_name(s)] = report.values[s];

    json strategies = json::parse(strategy_to_json(spec, report.defender));
    doc["defender"] = strategies["dift"];
    json br = json::parse(strategy_to_json(spec, report.attacker_best));
    doc["attacker_br"] = br["apt"];

    doc["iterations"] = report.iterations;
    doc["trace_v0"] = report.trace_v0;
    doc["final_delta"] = report.final_delta;
    doc["converged"] = report.converged;
    return doc.dump(2) + "\n";
}

}  // namespace diftgame
