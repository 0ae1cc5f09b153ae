#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "diftgame/vi_solver.hpp"
#include "test_support.hpp"

using namespace diftgame;
using namespace testsupport;

namespace {

// Defender security slack: min over states of (security level - V(s)).
double min_security_slack(const GameSpec& spec, const SolveReport& rep) {
    double worst = 1e300;
    for (StateId s = 0; s < spec.state_count(); ++s) {
        if (spec.is_absorbing(s)) continue;
        QMatrix qm = q_from_values(spec, s, rep.values);
        std::vector<double> mix = s == spec.virtual_state() ? std::vector<double>{1.0}
                                                            : rep.defender.dift[s];
        worst = std::min(worst, security_level(qm.q, mix) - rep.values[s]);
    }
    return worst;
}

}  // namespace

TEST_CASE("q_from_values: chain boundary expansion matches the hand expansion") {
    GameSpec spec = chain_game();
    auto v = boundary_values(spec);
    StateId v2 = *spec.state_by_name("v2");
    QMatrix qm = q_from_values(spec, v2, v);
    REQUIRE(qm.rows() == 2);
    REQUIRE(qm.cols() == 2);
    // rows: no-trap, trap(v1); cols: move(v1), drop
    CHECK(qm.q[0][0] == doctest::Approx(0.0));
    CHECK(qm.q[0][1] == doctest::Approx(100.0));
    CHECK(qm.q[1][0] == doctest::Approx(80.0));
    CHECK(qm.q[1][1] == doctest::Approx(90.0));
}

TEST_CASE("q_from_values: zero values give a zero matrix; no-trap row is V(target)") {
    GameSpec spec = chain_game();
    StateId v2 = *spec.state_by_name("v2");
    std::vector<double> zeros(spec.state_count(), 0.0);
    QMatrix qm = q_from_values(spec, v2, zeros);
    for (const auto& row : qm.q)
        for (double x : row) CHECK(x == 0.0);

    std::vector<double> v(spec.state_count(), 0.0);
    v[spec.node_state(0)] = 33.0;   // destination v1
    v[spec.dropout_state()] = 55.0;
    QMatrix qm2 = q_from_values(spec, v2, v);
    CHECK(qm2.q[0][0] == 33.0);  // no-trap, move(v1)
    CHECK(qm2.q[0][1] == 55.0);  // no-trap, drop
}

TEST_CASE("q_from_values refuses hidden parameters") {
    GameSpec spec = chain_game(100.0, 0.2, 0.1, true);
    auto v = boundary_values(spec);
    CHECK_THROWS_AS(q_from_values(spec, *spec.state_by_name("v2"), v), HiddenParamsError);
}

TEST_CASE("value_iteration: chain reaches 80 in at most three sweeps") {
    GameSpec spec = chain_game();
    SolveReport rep = value_iteration(spec, 1e-7);
    CHECK(rep.converged);
    CHECK(rep.iterations <= 3);
    CHECK(rep.values[spec.virtual_state()] == doctest::Approx(80.0).epsilon(1e-9));
    StateId v2 = *spec.state_by_name("v2");
    CHECK(rep.values[v2] == doctest::Approx(80.0).epsilon(1e-9));
    REQUIRE(rep.defender.dift[v2].size() == 2);
    CHECK(rep.defender.dift[v2][1] == doctest::Approx(1.0));  // trap(v1)
    CHECK(rep.monotone);
    CHECK(rep.trace_v0.size() == static_cast<size_t>(rep.iterations));
}

TEST_CASE("value_iteration: all-drop game is worth beta to the defender") {
    // Entry node with no outgoing edges: the attacker can only drop.
    IfgGraph g;
    g.nodes = {{"e", NodeKind::Process, "e", std::nullopt},
               {"d", NodeKind::File, "d", std::nullopt},
               {"x", NodeKind::Process, "x", std::nullopt}};
    g.edges = {{"x", "d"}};
    g.entries = {"e"};
    g.destinations = {"d"};
    DetectionParams params;
    for (const auto& n : g.nodes) {
        params.fn[n.id] = 0.2;
        params.fp[n.id] = 0.1;
    }
    GameSpec spec = GameSpec::build(g, params, 100.0);
    SolveReport rep = value_iteration(spec, 1e-7);
    CHECK(rep.values[spec.virtual_state()] == doctest::Approx(100.0));
}

TEST_CASE("value_iteration: iteration cap reports non-convergence") {
    GameSpec spec = synthetic_30_game();
    SolveReport rep = value_iteration(spec, 1e-12, 3);
    CHECK_FALSE(rep.converged);
    CHECK(rep.iterations == 3);
    CHECK(rep.trace_v0.size() == 3);
}

TEST_CASE("value_iteration: 30-node cyclic game converges monotonically") {
    GameSpec spec = synthetic_30_game();
    CHECK(spec.graph().node_count() == 30);
    CHECK(spec.graph().edge_count() == 74);
    SolveReport rep = value_iteration(spec, 1e-7);
    CHECK(rep.converged);
    CHECK(rep.monotone);
    CHECK(rep.final_delta <= 1e-7);
    for (size_t k = 1; k < rep.trace_v0.size(); ++k)
        CHECK(rep.trace_v0[k] >= rep.trace_v0[k - 1] - 1e-9);
    // The sweep operator is sup-norm nonexpansive, so deltas never grow.
    for (size_t k = 1; k < rep.delta_trace.size(); ++k)
        CHECK(rep.delta_trace[k] <= rep.delta_trace[k - 1] + 1e-12);
    for (double v : rep.values) {
        CHECK(v >= -1e-12);
        CHECK(v <= 100.0 + 1e-12);
    }
}

TEST_CASE("compute_leveling: chain levels and absorbing pinning") {
    GameSpec spec = chain_game();
    Leveling lv = compute_leveling(spec);
    CHECK(lv.level_count == 3);
    CHECK(lv.level[spec.virtual_state()] == 1);
    CHECK(lv.level[*spec.state_by_name("v2")] == 2);
    CHECK(lv.level[*spec.state_by_name("v1")] == 3);
    CHECK(lv.level[spec.dropout_state()] == 3);
    CHECK(lv.level[spec.detected_state()] == 3);
    CHECK(lv.level[spec.false_positive_state()] == 3);
    CHECK(lv.states_at(1) == std::vector<StateId>{spec.virtual_state()});
}

TEST_CASE("compute_leveling: diamond longest-path levels") {
    IfgGraph g;
    for (const char* id : {"e", "a", "b", "c"})
        g.nodes.push_back({id, NodeKind::Process, id, std::nullopt});
    g.edges = {{"e", "a"}, {"e", "b"}, {"a", "c"}, {"b", "c"}, {"a", "b"}};
    g.entries = {"e"};
    g.destinations = {"c"};
    DetectionParams params;
    for (const auto& n : g.nodes) {
        params.fn[n.id] = 0.2;
        params.fp[n.id] = 0.1;
    }
    GameSpec spec = GameSpec::build(g, params, 100.0);
    Leveling lv = compute_leveling(spec);
    // Deepest chain v0 -> e -> a -> b against c and the absorbing set.
    CHECK(lv.level[*spec.state_by_name("e")] == 2);
    CHECK(lv.level[*spec.state_by_name("a")] == 3);
    CHECK(lv.level[*spec.state_by_name("b")] == 4);
    CHECK(lv.level[*spec.state_by_name("c")] == lv.level_count);
    // Every state-graph edge ascends strictly.
    for (StateId s = 0; s < spec.state_count(); ++s)
        if (!spec.is_absorbing(s))
            for (StateId t : spec.state_successors(s)) CHECK(lv.level[t] > lv.level[s]);
}

TEST_CASE("compute_leveling: cycle witness in the error") {
    GameSpec spec = synthetic_30_game();
    CHECK_THROWS_WITH_AS(compute_leveling(spec), doctest::Contains("cycle"), DomainError);
}

TEST_CASE("solve_acyclic: equals value_iteration on the chain and random games") {
    GameSpec chain = chain_game();
    SolveReport a = solve_acyclic(chain);
    SolveReport b = value_iteration(chain, 1e-7);
    CHECK(a.iterations == 1);
    for (int s = 0; s < chain.state_count(); ++s)
        CHECK(a.values[s] == doctest::Approx(b.values[s]).epsilon(1e-8));

    Rng rng(808);
    for (int i = 0; i < 30; ++i) {
        GameSpec spec = random_game(rng, 4 + rng.uniform_int(7), false);
        SolveReport lvl = solve_acyclic(spec);
        SolveReport vi = value_iteration(spec, 1e-9);
        for (int s = 0; s < spec.state_count(); ++s)
            CHECK(std::abs(lvl.values[s] - vi.values[s]) <= 1e-6);
    }
}

TEST_CASE("solve_acyclic: near-one false negatives kill the trap value") {
    GameSpec spec = chain_game(100.0, 0.999, 0.1);
    SolveReport rep = solve_acyclic(spec);
    // Trap-free game value is 0; FN ~ 1 approaches it.
    CHECK(rep.values[spec.virtual_state()] < 1.0);
}

TEST_CASE("security level: returned strategy guarantees the value") {
    Rng rng(2718);
    for (int i = 0; i < 20; ++i) {
        GameSpec spec = random_game(rng, 5 + rng.uniform_int(8), false);
        SolveReport rep = solve_acyclic(spec);
        CHECK(min_security_slack(spec, rep) >= -1e-7);
    }
    GameSpec cyc = synthetic_30_game();
    SolveReport rep = value_iteration(cyc, 1e-7);
    CHECK(min_security_slack(cyc, rep) >= -1e-6);
}

TEST_CASE("sweep count: acyclic games stop within the level count") {
    Rng rng(1618);
    for (int i = 0; i < 20; ++i) {
        GameSpec spec = random_game(rng, 5 + rng.uniform_int(10), false);
        Leveling lv = compute_leveling(spec);
        SolveReport rep = value_iteration(spec, 1e-7);
        CHECK(rep.converged);
        CHECK(rep.iterations <= lv.level_count);
    }
}

TEST_CASE("solution json carries the pinned fields") {
    GameSpec spec = chain_game();
    SolveReport rep = solve_acyclic(spec);
    auto doc = solution_to_json(spec, rep);
    CHECK(doc.find("\"values\"") != std::string::npos);
    CHECK(doc.find("\"defender\"") != std::string::npos);
    CHECK(doc.find("\"iterations\"") != std::string::npos);
    CHECK(doc.find("\"trace_v0\"") != std::string::npos);
}
