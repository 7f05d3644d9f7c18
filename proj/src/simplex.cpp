#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <spdlog/spdlog.h>

#include "iomdp/errors.hpp"
#include "iomdp/lp.hpp"

namespace iomdp {

namespace {

/// One column of the standard-form problem `min cᵀz, Az = b, z ≥ 0, b ≥ 0`.
struct StdColumn {
    enum class Kind { Original, Slack, Artificial } kind;
    std::size_t source;  // original variable or row index
    double sign;         // z maps to sign × original variable
};

class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols) : m_(rows), n_(cols), width_(cols + 1), t_(rows * width_, 0.0), z_(width_, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return t_[i * width_ + j]; }
    double at(std::size_t i, std::size_t j) const { return t_[i * width_ + j]; }
    double& rhs(std::size_t i) { return t_[i * width_ + n_]; }
    double rhs(std::size_t i) const { return t_[i * width_ + n_]; }
    std::vector<double>& objective_row() { return z_; }

    void pivot(std::size_t r, std::size_t q) {
        double* pr = &t_[r * width_];
        const double inv = 1.0 / pr[q];
        nonzero_.clear();
        for (std::size_t j = 0; j < width_; ++j) {
            if (pr[j] == 0.0) continue;
            pr[j] *= inv;
            nonzero_.push_back(j);
        }
        pr[q] = 1.0;
        auto eliminate = [&](double* row) {
            const double f = row[q];
            if (f == 0.0) return;
            for (std::size_t j : nonzero_) {
                double v = row[j] - f * pr[j];
                row[j] = std::abs(v) < 1e-15 ? 0.0 : v;
            }
            row[q] = 0.0;
        };
        for (std::size_t i = 0; i < m_; ++i)
            if (i != r) eliminate(&t_[i * width_]);
        eliminate(z_.data());
    }

    std::size_t rows() const { return m_; }
    std::size_t cols() const { return n_; }

private:
    std::size_t m_, n_, width_;
    std::vector<double> t_;
    std::vector<double> z_;
    std::vector<std::size_t> nonzero_;
};

enum class PhaseResult { Optimal, Unbounded, IterationLimit };

/// Consecutive degenerate pivots before switching to Bland's rule.
constexpr std::size_t kStallLimit = 50;
/// Pivots between rebuilds of the tableau from the original data.
constexpr std::size_t kReinvertEvery = 64;

/// Dantzig pricing with a two-pass (Harris) ratio test that prefers large
/// pivots. After a run of degenerate pivots the rule drops to Bland's until
/// progress resumes. `reinvert` rebuilds the tableau from scratch.
template <class Reinvert>
PhaseResult run_phase(Tableau& t, std::vector<std::size_t>& basis, const std::vector<char>& banned,
                      const SimplexOptions& opt, std::size_t& iterations, Reinvert&& reinvert) {
    auto& z = t.objective_row();
    std::size_t degenerate_run = 0;
    std::size_t since_reinvert = 0;
    while (true) {
        if (iterations >= opt.max_iterations) return PhaseResult::IterationLimit;
        if (since_reinvert >= kReinvertEvery) {
            reinvert();
            since_reinvert = 0;
        }
        const bool bland = degenerate_run >= kStallLimit;
        std::size_t q = t.cols();
        double most_negative = -opt.optimality_tol;
        for (std::size_t j = 0; j < t.cols(); ++j) {
            if (banned[j] || z[j] >= most_negative) continue;
            q = j;
            if (bland) break;
            most_negative = z[j];
        }
        if (q == t.cols()) return PhaseResult::Optimal;

        // Pass 1: largest step that keeps every basic variable above −feasibility_tol.
        double theta_max = std::numeric_limits<double>::infinity();
        double col_max = 0.0;
        for (std::size_t i = 0; i < t.rows(); ++i) col_max = std::max(col_max, t.at(i, q));
        const double pivot_floor = std::max(opt.pivot_tol, 1e-9 * col_max);
        for (std::size_t i = 0; i < t.rows(); ++i) {
            const double a = t.at(i, q);
            if (a <= pivot_floor) continue;
            theta_max = std::min(theta_max, (std::max(t.rhs(i), 0.0) + opt.feasibility_tol) / a);
        }
        if (!std::isfinite(theta_max)) return PhaseResult::Unbounded;
        // Pass 2: among rows blocking within theta_max, take the largest pivot
        // (Bland mode: the lowest basic index).
        std::size_t r = t.rows();
        double best_a = 0.0;
        for (std::size_t i = 0; i < t.rows(); ++i) {
            const double a = t.at(i, q);
            if (a <= pivot_floor || std::max(t.rhs(i), 0.0) / a > theta_max) continue;
            if (r == t.rows() || (!bland && a > best_a) || (bland && basis[i] < basis[r])) {
                r = i;
                best_a = a;
            }
        }
        const double step = std::max(t.rhs(r), 0.0) / t.at(r, q);
        degenerate_run = step <= 1e-12 ? degenerate_run + 1 : 0;
        t.pivot(r, q);
        basis[r] = q;
        ++iterations;
        ++since_reinvert;
    }
}

void load_objective(Tableau& t, const std::vector<std::size_t>& basis, const std::vector<double>& cost) {
    auto& z = t.objective_row();
    std::fill(z.begin(), z.end(), 0.0);
    for (std::size_t j = 0; j < t.cols(); ++j) z[j] = cost[j];
    for (std::size_t i = 0; i < t.rows(); ++i) {
        const double cb = cost[basis[i]];
        if (cb == 0.0) continue;
        for (std::size_t j = 0; j <= t.cols(); ++j) z[j] -= cb * (j == t.cols() ? t.rhs(i) : t.at(i, j));
    }
}

}  // namespace

LpSolution solve_lp(const OccupancyLp& lp, SimplexOptions opt) {
    const std::size_t n = lp.n_vars();
    const std::size_t m = lp.rows.size();
    if (lp.var_kind.size() != n || lp.columns.size() != n) {
        throw Error(ErrorCode::DimensionMismatch, "LP column metadata does not match the objective");
    }

    // Standard-form columns: originals (free split in two), slacks, artificials.
    std::vector<StdColumn> cols;
    std::vector<std::vector<std::size_t>> std_of(n);
    for (std::size_t j = 0; j < n; ++j) {
        switch (lp.var_kind[j]) {
            case VarKind::NonNegative:
                std_of[j].push_back(cols.size());
                cols.push_back({StdColumn::Kind::Original, j, 1.0});
                break;
            case VarKind::NonPositive:
                std_of[j].push_back(cols.size());
                cols.push_back({StdColumn::Kind::Original, j, -1.0});
                break;
            case VarKind::Free:
                std_of[j].push_back(cols.size());
                cols.push_back({StdColumn::Kind::Original, j, 1.0});
                std_of[j].push_back(cols.size());
                cols.push_back({StdColumn::Kind::Original, j, -1.0});
                break;
        }
    }
    std::vector<std::size_t> slack_of(m, SIZE_MAX);
    for (std::size_t i = 0; i < m; ++i) {
        if (lp.rows[i].relation == RowRelation::Equal) continue;
        slack_of[i] = cols.size();
        cols.push_back({StdColumn::Kind::Slack, i, lp.rows[i].relation == RowRelation::LessEqual ? 1.0 : -1.0});
    }
    const std::size_t first_artificial = cols.size();
    for (std::size_t i = 0; i < m; ++i) cols.push_back({StdColumn::Kind::Artificial, i, 1.0});
    const std::size_t total = cols.size();

    // Dense standard-form matrix, rows flipped so that b ≥ 0.
    Matrix a_std(m, total);
    std::vector<double> b_std(m);
    std::vector<double> row_sign(m, 1.0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& row = lp.rows[i];
        for (const auto& [j, v] : row.coeffs) {
            if (j >= n) throw Error(ErrorCode::DimensionMismatch, "row references a missing column");
            for (std::size_t c : std_of[j]) a_std(i, c) += v * cols[c].sign;
        }
        if (slack_of[i] != SIZE_MAX) a_std(i, slack_of[i]) = cols[slack_of[i]].sign;
        if (row.rhs < 0.0) {
            row_sign[i] = -1.0;
            for (std::size_t c = 0; c < first_artificial; ++c) a_std(i, c) = -a_std(i, c);
        }
        b_std[i] = row_sign[i] * row.rhs;
        a_std(i, first_artificial + i) = 1.0;
    }
    std::vector<double> c_std(total, 0.0);
    for (std::size_t c = 0; c < first_artificial; ++c)
        if (cols[c].kind == StdColumn::Kind::Original) c_std[c] = lp.objective[cols[c].source] * cols[c].sign;

    std::vector<std::vector<std::pair<std::size_t, double>>> sparse_cols(total);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < total; ++c)
            if (a_std(i, c) != 0.0) sparse_cols[c].emplace_back(i, a_std(i, c));

    Tableau t(m, total);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t c = 0; c < total; ++c) t.at(i, c) = a_std(i, c);
        t.rhs(i) = b_std[i];
    }
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) basis[i] = first_artificial + i;

    LpSolution sol;
    std::vector<char> banned(total, 0);
    const std::vector<double>* phase_cost = nullptr;

    // Rebuild B⁻¹A, B⁻¹b and the reduced costs from the original matrix so that
    // rounding does not accumulate across pivots. A singular basis keeps the old tableau.
    auto reinvert = [&] {
        Matrix basis_matrix(m, m);
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t i = 0; i < m; ++i) basis_matrix(i, k) = a_std(i, basis[k]);
        std::optional<LuFactorization> lu;
        try {
            lu.emplace(std::move(basis_matrix), 1e-14);
        } catch (const Error&) {
            return;
        }
        // Explicit B⁻¹, then B⁻¹A through the sparse columns of A.
        Matrix inverse(m, m);
        std::vector<double> unit(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            unit[i] = 1.0;
            const auto col = lu->solve(unit);
            for (std::size_t k = 0; k < m; ++k) inverse(k, i) = col[k];
            unit[i] = 0.0;
        }
        for (std::size_t c = 0; c < total; ++c) {
            for (std::size_t k = 0; k < m; ++k) {
                double v = 0.0;
                for (const auto& [i, a] : sparse_cols[c]) v += inverse(k, i) * a;
                t.at(k, c) = std::abs(v) < 1e-15 ? 0.0 : v;
            }
        }
        const auto rhs = lu->solve(b_std);
        for (std::size_t k = 0; k < m; ++k) {
            t.rhs(k) = rhs[k];
            for (std::size_t i = 0; i < m; ++i) t.at(i, basis[k]) = i == k ? 1.0 : 0.0;
        }
        load_objective(t, basis, *phase_cost);
    };

    // Phase 1: minimize the sum of artificials.
    std::vector<double> phase1_cost(total, 0.0);
    for (std::size_t c = first_artificial; c < total; ++c) phase1_cost[c] = 1.0;
    phase_cost = &phase1_cost;
    load_objective(t, basis, phase1_cost);
    const auto p1 = run_phase(t, basis, banned, opt, sol.iterations, reinvert);
    if (p1 == PhaseResult::IterationLimit) throw Error(ErrorCode::NotOptimal, "simplex iteration limit in phase 1");
    reinvert();
    double b_scale = 1.0;
    for (double v : b_std) b_scale = std::max(b_scale, std::abs(v));
    const double infeasibility = -t.objective_row()[total];
    if (infeasibility > opt.feasibility_tol * b_scale) {
        sol.status = LpStatus::Infeasible;
        spdlog::debug("simplex: infeasible, phase-1 residual {:.3e}", infeasibility);
        return sol;
    }

    // Drive artificials out of the basis on the largest available entry; rows
    // where every entry is negligible are redundant and keep their artificial.
    for (std::size_t i = 0; i < m; ++i) {
        if (basis[i] < first_artificial) continue;
        std::size_t best = first_artificial;
        double best_abs = 1e-7;
        for (std::size_t c = 0; c < first_artificial; ++c) {
            if (std::abs(t.at(i, c)) > best_abs) {
                best = c;
                best_abs = std::abs(t.at(i, c));
            }
        }
        if (best == first_artificial) continue;
        t.pivot(i, best);
        basis[i] = best;
    }
    for (std::size_t c = first_artificial; c < total; ++c) banned[c] = 1;

    phase_cost = &c_std;
    load_objective(t, basis, c_std);
    reinvert();
    const auto p2 = run_phase(t, basis, banned, opt, sol.iterations, reinvert);
    if (p2 == PhaseResult::IterationLimit) throw Error(ErrorCode::NotOptimal, "simplex iteration limit in phase 2");
    if (p2 == PhaseResult::Unbounded) {
        sol.status = LpStatus::Unbounded;
        return sol;
    }

    // Recompute the basic solution and multipliers from the original data.
    std::vector<double> z(total, 0.0);
    std::vector<double> y(m, 0.0);
    try {
        Matrix basis_matrix(m, m);
        std::vector<double> c_basis(m);
        for (std::size_t k = 0; k < m; ++k) {
            for (std::size_t i = 0; i < m; ++i) basis_matrix(i, k) = a_std(i, basis[k]);
            c_basis[k] = c_std[basis[k]];
        }
        LuFactorization lu(std::move(basis_matrix), 1e-14);
        const auto zb = lu.solve(b_std);
        for (std::size_t k = 0; k < m; ++k) z[basis[k]] = zb[k];
        y = lu.solve_transposed(c_basis);
    } catch (const Error&) {
        for (std::size_t i = 0; i < m; ++i) z[basis[i]] = t.rhs(i);
        const auto& zrow = t.objective_row();
        for (std::size_t i = 0; i < m; ++i) y[i] = -zrow[first_artificial + i];
    }
    for (auto& v : z)
        if (v < 0.0 && v > -opt.feasibility_tol) v = 0.0;

    sol.x.assign(n, 0.0);
    for (std::size_t c = 0; c < first_artificial; ++c)
        if (cols[c].kind == StdColumn::Kind::Original) sol.x[cols[c].source] += cols[c].sign * z[c];
    sol.row_duals.resize(m);
    for (std::size_t i = 0; i < m; ++i) sol.row_duals[i] = row_sign[i] * y[i];
    sol.objective = dot(lp.objective, sol.x);
    sol.status = LpStatus::Optimal;
    const double residual = primal_infeasibility(lp, sol.x);
    if (residual > 1e-6 * b_scale) {
        throw Error(ErrorCode::NotOptimal, fmt::format("simplex lost feasibility (residual {:.3e})", residual));
    }
    spdlog::debug("simplex: optimal after {} pivots, objective {:.12g}", sol.iterations, sol.objective);
    return sol;
}

std::vector<double> reduced_costs(const OccupancyLp& lp, std::span<const double> row_duals) {
    std::vector<double> d = lp.objective;
    for (std::size_t i = 0; i < lp.rows.size(); ++i)
        for (const auto& [j, v] : lp.rows[i].coeffs) d[j] -= v * row_duals[i];
    return d;
}

double primal_infeasibility(const OccupancyLp& lp, std::span<const double> x) {
    double worst = 0.0;
    for (const auto& row : lp.rows) {
        double lhs = 0.0;
        for (const auto& [j, v] : row.coeffs) lhs += v * x[j];
        const double diff = lhs - row.rhs;
        switch (row.relation) {
            case RowRelation::Equal: worst = std::max(worst, std::abs(diff)); break;
            case RowRelation::LessEqual: worst = std::max(worst, diff); break;
            case RowRelation::GreaterEqual: worst = std::max(worst, -diff); break;
        }
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (lp.var_kind[j] == VarKind::NonNegative) worst = std::max(worst, -x[j]);
        if (lp.var_kind[j] == VarKind::NonPositive) worst = std::max(worst, x[j]);
    }
    return worst;
}

}  // namespace iomdp
