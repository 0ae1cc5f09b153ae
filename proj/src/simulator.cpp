#include "diftgame/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "json.hpp"

namespace diftgame {

using nlohmann::json;

// Sole mint for SimulatorAccess keys: rollouts are the system under test and
// may read hidden rates; solvers cannot.
struct SimulatorInternals {
    static SimulatorAccess key() { return SimulatorKeyMint::key(); }
};

namespace {

int sample_index(const std::vector<double>& probs, double u) {
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

Rollout rollout_unchecked(const GameSpec& spec, const Strategy& apt, const Strategy& dift,
                          StateId start, uint64_t seed, bool acyclic, long step_cap) {
    auto key = SimulatorInternals::key();
    Rng rng(seed);
    Rollout r;
    StateId s = start;
    r.states.push_back(s);
    while (!spec.is_absorbing(s)) {
        if (static_cast<long>(r.actions.size()) >= step_cap) {
            r.capped = true;
            break;
        }
        const auto& aa = spec.attacker_actions(s);
        const auto& dd = spec.defender_actions(s);
        // a sampled before d; the draws are independent so the order is a
        // determinism convention only.
        int a = aa[apt.apt[s].empty() ? 0 : sample_index(apt.apt[s], rng.uniform())];
        int d = dd[dift.dift[s].empty() ? 0 : sample_index(dift.dift[s], rng.uniform())];
        auto support = transition(spec, s, a, d, key);
        double u = rng.uniform();
        double acc = 0.0;
        StateId next = support.back().state;
        for (const auto& entry : support) {
            acc += entry.probability;
            if (u < acc) {
                next = entry.state;
                break;
            }
        }
        r.actions.emplace_back(a, d);
        r.states.push_back(next);
        s = next;
    }
    r.termination_time = static_cast<int>(r.actions.size());
    if (!r.capped) {
        r.terminal = s;
        auto [ra, rd] = terminal_payoff(spec, s);
        r.payoff_attacker = ra;
        r.payoff_defender = rd;
        if (acyclic && r.termination_time > spec.state_count())
            throw DomainError("rollout exceeded N+4 steps on an acyclic game");
    }
    return r;
}

struct Tally {
    long long phi = 0, tau_a = 0, tau_b = 0, dest = 0, capped = 0;
};

// Terminal-only walk; no trajectory bookkeeping, same streams as rollout().
StateId run_terminal(const GameSpec& spec, const Strategy& apt, const Strategy& dift,
                     StateId start, uint64_t seed, bool acyclic, long step_cap, bool& capped) {
    auto key = SimulatorInternals::key();
    Rng rng(seed);
    StateId s = start;
    long steps = 0;
    while (!spec.is_absorbing(s)) {
        if (steps >= step_cap) {
            capped = true;
            return s;
        }
        const auto& aa = spec.attacker_actions(s);
        const auto& dd = spec.defender_actions(s);
        int a = aa[apt.apt[s].empty() ? 0 : sample_index(apt.apt[s], rng.uniform())];
        int d = dd[dift.dift[s].empty() ? 0 : sample_index(dift.dift[s], rng.uniform())];
        double u = rng.uniform();
        StateId move_target = a == kDrop ? spec.dropout_state() : spec.node_state(a);
        if (d == kNoTrap) {
            s = move_target;
        } else if (d == a) {
            double fn = spec.raw_fn(d, key);
            s = u < 1.0 - fn ? spec.detected_state() : move_target;
        } else {
            double fp = spec.raw_fp(d, key);
            s = u < fp ? spec.false_positive_state() : move_target;
        }
        steps++;
    }
    capped = false;
    if (acyclic && steps > spec.state_count())
        throw DomainError("rollout exceeded N+4 steps on an acyclic game");
    return s;
}

Tally tally_range(const GameSpec& spec, const Strategy& apt, const Strategy& dift, StateId start,
                  long long lo, long long hi, uint64_t seed, bool acyclic, long step_cap) {
    Tally t;
    for (long long i = lo; i < hi; ++i) {
        bool capped = false;
        StateId terminal = run_terminal(spec, apt, dift, start, derive_seed(seed, i), acyclic,
                                        step_cap, capped);
        if (capped) {
            t.capped++;
        } else if (terminal == spec.dropout_state()) {
            t.phi++;
        } else if (terminal == spec.detected_state()) {
            t.tau_a++;
        } else if (terminal == spec.false_positive_state()) {
            t.tau_b++;
        } else {
            t.dest++;
        }
    }
    return t;
}

void require_valid(const GameSpec& spec, const Strategy& apt, const Strategy& dift) {
    auto check = validate_attacker(spec, apt);
    if (check.ok) check = validate_defender(spec, dift);
    if (!check.ok) throw DomainError("invalid strategy: " + check.message);
}

long cap_for(const GameSpec& spec) { return 1000L * spec.state_count(); }

}  // namespace

Rollout rollout(const GameSpec& spec, const Strategy& apt, const Strategy& dift, StateId start,
                uint64_t seed) {
    require_valid(spec, apt, dift);
    if (spec.is_absorbing(start))
        throw DomainError("rollout start state " + spec.state_name(start) + " is absorbing");
    bool acyclic = spec.state_graph_acyclic();
    return rollout_unchecked(spec, apt, dift, start, seed, acyclic, cap_for(spec));
}

RolloutStats estimate(const GameSpec& spec, const Strategy& apt, const Strategy& dift,
                      StateId start, long long n, uint64_t seed, int threads) {
    if (n < 1) throw DomainError("rollout count must be >= 1");
    require_valid(spec, apt, dift);
    if (spec.is_absorbing(start))
        throw DomainError("rollout start state " + spec.state_name(start) + " is absorbing");
    bool acyclic = spec.state_graph_acyclic();
    long step_cap = cap_for(spec);

    threads = std::max(1, threads);
    std::vector<Tally> parts(threads);
    if (threads == 1) {
        parts[0] = tally_range(spec, apt, dift, start, 0, n, seed, acyclic, step_cap);
    } else {
        std::vector<std::thread> pool;
        long long chunk = (n + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            long long lo = t * chunk, hi = std::min(n, lo + chunk);
            pool.emplace_back([&, t, lo, hi] {
                parts[t] = tally_range(spec, apt, dift, start, lo, hi, seed, acyclic, step_cap);
            });
        }
        for (auto& th : pool) th.join();
    }
    Tally total;
    for (const auto& p : parts) {
        total.phi += p.phi;
        total.tau_a += p.tau_a;
        total.tau_b += p.tau_b;
        total.dest += p.dest;
        total.capped += p.capped;
    }

    RolloutStats st;
    st.capped = total.capped;
    st.rollouts = total.phi + total.tau_a + total.tau_b + total.dest;
    st.count_phi = total.phi;
    st.count_tau_a = total.tau_a;
    st.count_tau_b = total.tau_b;
    st.count_dest = total.dest;
    if (st.rollouts == 0) return st;

    double m = static_cast<double>(st.rollouts);
    st.freq_phi = total.phi / m;
    st.freq_tau_a = total.tau_a / m;
    st.freq_tau_b = total.tau_b / m;
    st.freq_dest = total.dest / m;

    double beta = spec.beta();
    double p_def = static_cast<double>(total.tau_a + total.phi) / m;
    st.u_defender = beta * p_def;
    st.u_attacker = beta - st.u_defender;  // per-rollout constant sum, kept exact
    if (st.rollouts > 1) {
        // Payoffs are beta * Bernoulli, so the sample variance has closed form.
        double var = beta * beta * p_def * (1.0 - p_def) * m / (m - 1.0);
        st.stderr_defender = std::sqrt(var / m);
        st.stderr_attacker = st.stderr_defender;
    }
    return st;
}

std::vector<double> value_samples(const GameSpec& spec, const Strategy& apt,
                                  const Strategy& dift, long long n_per_state, uint64_t seed,
                                  int threads) {
    if (n_per_state < 1) throw DomainError("rollout count must be >= 1");
    require_valid(spec, apt, dift);
    std::vector<double> v(spec.state_count(), 0.0);
    v[spec.detected_state()] = spec.beta();
    v[spec.dropout_state()] = spec.beta();
    for (StateId s = 0; s < spec.state_count(); ++s) {
        if (spec.is_absorbing(s)) continue;
        auto stats = estimate(spec, apt, dift, s, n_per_state, derive_seed(seed, 0x5157ULL + s),
                              threads);
        if (stats.rollouts == 0)
            throw DomainError("every rollout hit the step cap at state " + spec.state_name(s));
        v[s] = stats.u_defender;
    }
    return v;
}

std::string stats_to_json(const GameSpec& spec, const RolloutStats& stats) {
    json doc;
    doc["rollouts"] = stats.rollouts;
    doc["capped"] = stats.capped;
    doc["terminal_freq"] = {{"phi", stats.freq_phi},
                            {"tau_A", stats.freq_tau_a},
                            {"tau_B", stats.freq_tau_b},
                            {"D", stats.freq_dest}};
    doc["terminal_counts"] = {{"phi", stats.count_phi},
                              {"tau_A", stats.count_tau_a},
                              {"tau_B", stats.count_tau_b},
                              {"D", stats.count_dest}};
    doc["u_attacker"] = stats.u_attacker;
    doc["u_defender"] = stats.u_defender;
    doc["stderr_attacker"] = stats.stderr_attacker;
    doc["stderr_defender"] = stats.stderr_defender;
    doc["beta"] = spec.beta();
    return doc.dump(2) + "\n";
}

}  // namespace diftgame
