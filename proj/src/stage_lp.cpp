#include "diftgame/stage_lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace diftgame {

namespace {

constexpr double kEps = 1e-11;

// Dense tableau simplex with Bland's rule, specialized to the stage game LP
//
//   maximize V  s.t.  sum_d p_d = 1,  V - sum_d Q[d][a] p_d <= 0,  p >= 0
//
// after shifting Q so all entries are >= 1 (the optimum then has V >= 1, so
// restricting V >= 0 is harmless and the shift cancels afterwards).
class StageSimplex {
public:
    StageSimplex(const std::vector<std::vector<double>>& q_shifted, size_t m, size_t n)
        : m_(m), n_(n), rows_(1 + n), cols_(m + 1 + n + 1) {
        tableau_.assign(rows_, std::vector<double>(cols_, 0.0));
        rhs_.assign(rows_, 0.0);
        basis_.assign(rows_, 0);
        // Row 0: sum p + artificial = 1.
        for (size_t d = 0; d < m_; ++d) tableau_[0][d] = 1.0;
        tableau_[0][art_col()] = 1.0;
        rhs_[0] = 1.0;
        basis_[0] = static_cast<int>(art_col());
        // Rows 1..n: V - sum Q[d][a] p_d + slack_a = 0.
        for (size_t a = 0; a < n_; ++a) {
            auto& row = tableau_[1 + a];
            for (size_t d = 0; d < m_; ++d) row[d] = -q_shifted[d][a];
            row[v_col()] = 1.0;
            row[slack_col(a)] = 1.0;
            basis_[1 + a] = static_cast<int>(slack_col(a));
        }
    }

    // Returns (value V, mix p). Throws DomainError on internal LP failure.
    std::pair<double, std::vector<double>> solve() {
        // Phase 1: drive the artificial variable out (minimize it).
        std::vector<double> c1(cols_, 0.0);
        c1[art_col()] = -1.0;
        run(c1, /*allow_artificial=*/true);
        if (value_of(art_col()) > 1e-9)
            throw DomainError("stage LP infeasible (internal error)");
        pivot_out_artificial();

        std::vector<double> c2(cols_, 0.0);
        c2[v_col()] = 1.0;
        run(c2, /*allow_artificial=*/false);

        std::vector<double> mix(m_, 0.0);
        for (size_t d = 0; d < m_; ++d) mix[d] = value_of(d);
        return {value_of(v_col()), std::move(mix)};
    }

private:
    size_t v_col() const { return m_; }
    size_t slack_col(size_t a) const { return m_ + 1 + a; }
    size_t art_col() const { return m_ + 1 + n_; }

    double value_of(size_t col) const {
        for (size_t i = 0; i < rows_; ++i)
            if (basis_[i] == static_cast<int>(col)) return rhs_[i];
        return 0.0;
    }

    void run(const std::vector<double>& c, bool allow_artificial) {
        while (true) {
            // Reduced costs z_j - c_j; Bland: smallest improving column.
            int entering = -1;
            for (size_t j = 0; j < cols_; ++j) {
                if (!allow_artificial && j == art_col()) continue;
                bool basic = false;
                for (size_t i = 0; i < rows_; ++i)
                    if (basis_[i] == static_cast<int>(j)) basic = true;
                if (basic) continue;
                double zj = 0.0;
                for (size_t i = 0; i < rows_; ++i) zj += c[basis_[i]] * tableau_[i][j];
                if (zj - c[j] < -kEps) {
                    entering = static_cast<int>(j);
                    break;
                }
            }
            if (entering < 0) return;

            int leaving = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < rows_; ++i) {
                double coef = tableau_[i][entering];
                if (coef <= kEps) continue;
                double ratio = rhs_[i] / coef;
                if (ratio < best_ratio - kEps ||
                    (ratio < best_ratio + kEps &&
                     (leaving < 0 || basis_[i] < basis_[leaving]))) {
                    best_ratio = ratio;
                    leaving = static_cast<int>(i);
                }
            }
            if (leaving < 0) throw DomainError("stage LP unbounded (internal error)");
            pivot(static_cast<size_t>(leaving), static_cast<size_t>(entering));
        }
    }

    void pivot(size_t row, size_t col) {
        double p = tableau_[row][col];
        for (size_t j = 0; j < cols_; ++j) tableau_[row][j] /= p;
        rhs_[row] /= p;
        for (size_t i = 0; i < rows_; ++i) {
            if (i == row) continue;
            double f = tableau_[i][col];
            if (f == 0.0) continue;
            for (size_t j = 0; j < cols_; ++j) tableau_[i][j] -= f * tableau_[row][j];
            rhs_[i] -= f * rhs_[row];
        }
        basis_[row] = static_cast<int>(col);
    }

    void pivot_out_artificial() {
        for (size_t i = 0; i < rows_; ++i) {
            if (basis_[i] != static_cast<int>(art_col())) continue;
            for (size_t j = 0; j < art_col(); ++j) {
                if (std::abs(tableau_[i][j]) > kEps) {
                    pivot(i, j);
                    return;
                }
            }
        }
    }

    size_t m_, n_, rows_, cols_;
    std::vector<std::vector<double>> tableau_;
    std::vector<double> rhs_;
    std::vector<int> basis_;
};

}  // namespace

StageSolution solve_stage(const QMatrix& qm) {
    size_t m = qm.rows(), n = qm.cols();
    if (m == 0 || n == 0) throw DomainError("stage game has an empty action set");
    if (qm.q.size() != m) throw DomainError("stage game row count mismatch");
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& row : qm.q) {
        if (row.size() != n) throw DomainError("stage game column count mismatch");
        for (double v : row) {
            if (!std::isfinite(v)) throw DomainError("stage game entry is not finite");
            lo = std::min(lo, v);
        }
    }

    double shift = 1.0 - lo;
    std::vector<std::vector<double>> shifted(m, std::vector<double>(n));
    for (size_t d = 0; d < m; ++d)
        for (size_t a = 0; a < n; ++a) shifted[d][a] = qm.q[d][a] + shift;

    StageSimplex lp(shifted, m, n);
    auto [v_shifted, mix] = lp.solve();

    for (double& p : mix) p = std::max(p, 0.0);
    double total = 0.0;
    for (double p : mix) total += p;
    for (double& p : mix) p /= total;

    StageSolution sol;
    sol.value = v_shifted - shift;
    sol.defender_mix = std::move(mix);

    // Pure best response: column minimizing the defender's security level.
    // At the optimum the binding columns tie exactly, so the lowest-index
    // tie-break uses a scale-aware tolerance.
    std::vector<double> levels(n, 0.0);
    double best = std::numeric_limits<double>::infinity();
    for (size_t a = 0; a < n; ++a) {
        for (size_t d = 0; d < m; ++d) levels[a] += qm.q[d][a] * sol.defender_mix[d];
        best = std::min(best, levels[a]);
    }
    double tie_tol = 1e-9 * (1.0 + std::abs(shift) + std::abs(best));
    for (size_t a = 0; a < n; ++a) {
        if (levels[a] <= best + tie_tol) {
            sol.attacker_best_index = static_cast<int>(a);
            break;
        }
    }
    return sol;
}

}  // namespace diftgame
