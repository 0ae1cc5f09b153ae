#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "diftgame/stage_lp.hpp"
#include "test_support.hpp"

using namespace diftgame;
using namespace testsupport;

namespace {

QMatrix make_q(std::vector<std::vector<double>> q) {
    QMatrix qm;
    qm.q = std::move(q);
    qm.defender_actions.resize(qm.q.size());
    qm.attacker_actions.resize(qm.q.front().size());
    return qm;
}

}  // namespace

TEST_CASE("analytic 2x2: the chain stage game") {
    // Rows no-trap/trap(v1), columns move(v1)/drop. Mixing would need
    // 80p = 100 - 10p, i.e. p = 10/9 > 1, so the trap row is played pure.
    auto sol = solve_stage(make_q({{0.0, 100.0}, {80.0, 90.0}}));
    CHECK(sol.value == doctest::Approx(80.0).epsilon(1e-10));
    CHECK(sol.defender_mix[0] == doctest::Approx(0.0));
    CHECK(sol.defender_mix[1] == doctest::Approx(1.0));
    CHECK(sol.attacker_best_index == 0);
}

TEST_CASE("degenerate: single row of identical entries") {
    auto sol = solve_stage(make_q({{7.5, 7.5, 7.5}}));
    CHECK(sol.value == doctest::Approx(7.5));
    CHECK(sol.defender_mix == std::vector<double>{1.0});
}

TEST_CASE("matching pennies") {
    auto sol = solve_stage(make_q({{0.0, 1.0}, {1.0, 0.0}}));
    CHECK(sol.value == doctest::Approx(0.5));
    CHECK(sol.defender_mix[0] == doctest::Approx(0.5));
    CHECK(sol.defender_mix[1] == doctest::Approx(0.5));
}

TEST_CASE("single column: defender takes the max entry") {
    auto sol = solve_stage(make_q({{1.0}, {3.0}, {2.0}}));
    CHECK(sol.value == doctest::Approx(3.0));
    CHECK(sol.defender_mix[1] == doctest::Approx(1.0));
}

TEST_CASE("errors: empty and non-finite input") {
    QMatrix empty;
    CHECK_THROWS_AS(solve_stage(empty), DomainError);
    CHECK_THROWS_AS(solve_stage(make_q({{1.0, std::nan("")}})), DomainError);
    CHECK_THROWS_AS(solve_stage(make_q({{std::numeric_limits<double>::infinity()}})),
                    DomainError);
}

TEST_CASE("scale equivariance and entry bounds") {
    Rng rng(31337);
    for (int i = 0; i < 200; ++i) {
        size_t m = 1 + rng.uniform_int(4), n = 1 + rng.uniform_int(4);
        std::vector<std::vector<double>> q(m, std::vector<double>(n));
        double lo = 1e300, hi = -1e300;
        for (auto& row : q)
            for (auto& v : row) {
                v = rng.uniform(0.0, 100.0);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        auto sol = solve_stage(make_q(q));
        CHECK(sol.value >= lo - 1e-9);
        CHECK(sol.value <= hi + 1e-9);

        double alpha = rng.uniform(0.1, 5.0);
        auto scaled = q;
        for (auto& row : scaled)
            for (auto& v : row) v *= alpha;
        auto sol2 = solve_stage(make_q(scaled));
        CHECK(sol2.value == doctest::Approx(alpha * sol.value).epsilon(1e-8));
        CHECK(sol2.attacker_best_index == sol.attacker_best_index);
    }
}

TEST_CASE("security level identity: the mix guarantees the value") {
    Rng rng(555);
    for (int i = 0; i < 300; ++i) {
        size_t m = 1 + rng.uniform_int(4), n = 1 + rng.uniform_int(4);
        std::vector<std::vector<double>> q(m, std::vector<double>(n));
        for (auto& row : q)
            for (auto& v : row) v = rng.uniform(0.0, 100.0);
        auto sol = solve_stage(make_q(q));
        double sum = 0.0;
        for (double p : sol.defender_mix) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(security_level(q, sol.defender_mix) ==
              doctest::Approx(sol.value).epsilon(1e-8));
    }
}

TEST_CASE("grid-search oracle tracks the LP value") {
    // The LP is exact while the grid is quantized, so the gap is bounded by
    // the entry range times the grid step.
    Rng rng(4242);
    for (int i = 0; i < 120; ++i) {
        size_t m = 1 + rng.uniform_int(4), n = 1 + rng.uniform_int(4);
        std::vector<std::vector<double>> q(m, std::vector<double>(n));
        for (auto& row : q)
            for (auto& v : row) v = rng.uniform(0.0, 100.0);
        auto sol = solve_stage(make_q(q));
        int subdivisions = m <= 2 ? 1000 : (m == 3 ? 400 : 120);
        double grid = grid_search_value(q, subdivisions);
        CHECK(grid <= sol.value + 1e-8);  // grid mixes are feasible
        CHECK(sol.value - grid <= 100.0 * 2.0 / subdivisions + 1e-8);
    }
}

TEST_CASE("tie-break: earliest minimizing column wins") {
    auto sol = solve_stage(make_q({{5.0, 5.0, 6.0}}));
    CHECK(sol.attacker_best_index == 0);
}
