#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "iomdp/belief.hpp"
#include "iomdp/linalg.hpp"

namespace iomdp {

enum class VarKind { NonNegative, Free, NonPositive };
enum class RowRelation { Equal, LessEqual, GreaterEqual };

/// What a row or column stands for. Dualization maps a row with label L to a
/// column with the same label and vice versa, so labels survive re-dualization.
enum class Role { Occupancy, Flow, Normalization, Budget, Marginal, Generic };

struct Label {
    Role role = Role::Generic;
    std::size_t belief = 0;
    std::size_t action = 0;

    friend bool operator==(const Label&, const Label&) = default;
};

struct LpRow {
    std::vector<std::pair<std::size_t, double>> coeffs;
    RowRelation relation = RowRelation::Equal;
    double rhs = 0.0;
    Label label;
};

/// Linear program `min cᵀx` over rows and sign-restricted variables.
///
/// Occupancy LPs built by this library minimize −R·x. A dualized LP stores its
/// `max` objective negated, with `value_sign = −1` so that the value of the
/// problem as posed is value_sign × (minimum of the stored objective).
struct OccupancyLp {
    std::vector<double> objective;
    std::vector<VarKind> var_kind;
    std::vector<Label> columns;
    std::vector<LpRow> rows;
    std::size_t n_beliefs = 0;
    std::size_t n_actions = 0;
    double value_sign = 1.0;

    std::size_t n_vars() const noexcept { return objective.size(); }
    std::size_t count_rows(RowRelation relation) const;
    std::size_t add_column(double cost, VarKind kind, Label label);
    std::size_t find_row(Role role, std::size_t belief = 0) const;
    bool has_row(Role role) const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;
    /// Minimum of the stored objective.
    double objective = std::numeric_limits<double>::quiet_NaN();
    /// Row multipliers y with reduced costs c − Aᵀy ≥ 0 on nonnegative columns;
    /// y ≤ 0 on ≤ rows and y ≥ 0 on ≥ rows.
    std::vector<double> row_duals;
    std::size_t iterations = 0;
};

struct SimplexOptions {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-11;
    std::size_t max_iterations = 5'000'000;
};

/// Two-phase dense-tableau simplex with Bland's rule. Deterministic.
LpSolution solve_lp(const OccupancyLp& lp, SimplexOptions options = {});

/// c_j − A_jᵀ y for every column.
std::vector<double> reduced_costs(const OccupancyLp& lp, std::span<const double> row_duals);

/// Max violation of rows and variable signs at x.
double primal_infeasibility(const OccupancyLp& lp, std::span<const double> x);

/// Dual values read off a solved occupancy LP.
struct OccupancyDuals {
    double psi = 0.0;
    std::vector<double> phi;
    double lambda = 0.0;
};
OccupancyDuals occupancy_duals(const OccupancyLp& lp, const LpSolution& sol);

/// Coefficients of occupancy column (b, a) in the flow rows and the
/// normalization row. Drop-mode truncated columns are the self-loop column
/// rescaled by ρ: unit coefficient on their own row, −[P_aᵀb]_i on pure rows,
/// and weight 1/ρ in the normalization.
struct FlowColumn {
    std::vector<std::pair<std::size_t, double>> flow;
    double normalization = 1.0;
};
FlowColumn flow_column(const BeliefKernel& kernel, std::size_t b, std::size_t a);

/// Full occupancy LP: flow balance per belief, normalization, optional budget row.
OccupancyLp build_primal(const BeliefKernel& kernel, const Matrix& reward, const Matrix& cost, double budget,
                         bool constrained);

/// ν(s, η) = γ(s) ρ (1−ρ)^η for η ≤ K, accumulated onto belief indices.
std::vector<double> closed_form_nu(const BeliefSpace& space, std::span<const double> gamma, double rho);

/// Marginal-pinned LP Σ_a x(b, a) = ν(b) with the budget row, for action-independent models.
OccupancyLp build_reduced_primal(const BeliefSpace& space, const FiniteMdp& model, std::span<const double> gamma);

/// Exact LP dual. The dual's objective is stored negated (value_sign = −1).
OccupancyLp build_dual(const OccupancyLp& primal);

/// Randomized belief policy π(a | b).
struct Policy {
    Matrix probs;
    std::vector<char> on_support;

    std::size_t n_beliefs() const noexcept { return probs.rows(); }
    std::size_t n_actions() const noexcept { return probs.cols(); }
};

Policy extract_policy(const OccupancyLp& lp, const LpSolution& sol, double support_tol = 1e-12);

struct PolicyValue {
    double avg_reward = 0.0;
    double avg_cost = 0.0;
    /// Stationary occupancy of each belief (drop mode: ρ-weighted on truncated columns).
    std::vector<double> occupancy;
};

/// Stationary evaluation of the policy-induced belief chain.
PolicyValue evaluate_policy_exact(const Policy& policy, const BeliefKernel& kernel, const Matrix& reward,
                                  const Matrix& cost);
/// Evaluation against known belief marginals ν.
PolicyValue evaluate_policy_reduced(const Policy& policy, std::span<const double> nu, const Matrix& reward,
                                    const Matrix& cost);

nlohmann::json solution_to_json(const OccupancyLp& lp, const LpSolution& sol);
/// `belief_index,origin,age,pi_a0,...,on_support`
void write_policy_csv(std::ostream& out, const Policy& policy, const BeliefSpace& space);
/// Parses write_policy_csv output; origin/age columns are checked against `space`.
Policy read_policy_csv(std::istream& in, const BeliefSpace& space);

std::string to_string(LpStatus status);

}  // namespace iomdp
