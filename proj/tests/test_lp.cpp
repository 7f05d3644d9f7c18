#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "iomdp/errors.hpp"
#include "iomdp/lp.hpp"
#include "oracles.hpp"

using namespace iomdp;

namespace {

struct Wireless {
    FiniteMdp model;
    BeliefSpace space;
    BeliefKernel kernel;
    Matrix reward;
    Matrix cost;
};

Wireless wireless(double rho, std::size_t depth = 10, double budget = 10.4) {
    Wireless w;
    w.model = wireless_model(rho, budget);
    w.space = build_belief_space(w.model, depth);
    w.kernel = build_kernel(w.space, w.model, BoundaryMode::Drop);
    w.reward = lift_reward(w.space, w.model);
    w.cost = lift_cost(w.space, w.model);
    return w;
}

double column_dot(const OccupancyLp& lp, const std::vector<double>& x, const Matrix& table) {
    double total = 0.0;
    for (std::size_t j = 0; j < lp.n_vars(); ++j)
        if (lp.columns[j].role == Role::Occupancy) total += table(lp.columns[j].belief, lp.columns[j].action) * x[j];
    return total;
}

double value(const OccupancyLp& lp, const LpSolution& sol) { return -lp.value_sign * sol.objective; }

}  // namespace

TEST(OccupancyLp, WirelessDimensions) {
    const auto w = wireless(0.6);
    const auto lp = build_primal(w.kernel, w.reward, w.cost, 10.4, true);
    EXPECT_EQ(lp.n_vars(), 44u);
    EXPECT_EQ(lp.count_rows(RowRelation::Equal), 23u);
    EXPECT_EQ(lp.count_rows(RowRelation::LessEqual), 1u);
    const auto dual = build_dual(lp);
    EXPECT_EQ(dual.n_vars(), 24u);
    EXPECT_EQ(dual.rows.size(), 44u);
    std::size_t free_vars = 0;
    for (auto k : dual.var_kind) free_vars += k == VarKind::Free ? 1 : 0;
    EXPECT_EQ(free_vars, 23u);
}

TEST(OccupancyLp, SingleStateBudgetSplit) {
    // max x₀ + 3x₁ with x₀ + x₁ = 1 and x₀ + 5x₁ ≤ 2: x₁ = 1/4, value 3/2, λ = 1/2.
    FiniteMdp m;
    m.n_states = 1;
    m.n_actions = 2;
    m.transitions = {Matrix::identity(1), Matrix::identity(1)};
    m.reward = Matrix::from_rows({{1, 3}});
    m.cost = Matrix::from_rows({{1, 5}});
    m.budget = 2.0;
    m.rho = 0.5;
    const auto space = build_belief_space(m, 5);
    const auto kernel = build_kernel(space, m, BoundaryMode::Drop);
    const auto lp = build_primal(kernel, lift_reward(space, m), lift_cost(space, m), m.budget, true);
    const auto sol = solve_lp(lp);
    ASSERT_EQ(sol.status, LpStatus::Optimal);
    EXPECT_NEAR(value(lp, sol), 1.5, 1e-12);
    EXPECT_NEAR(sol.x[1], 0.25, 1e-12);
    const auto duals = occupancy_duals(lp, sol);
    EXPECT_NEAR(duals.lambda, 0.5, 1e-12);
    EXPECT_NEAR(duals.psi, -0.5, 1e-12);
}

TEST(OccupancyLp, LooseBudgetMatchesUnconstrained) {
    const auto w = wireless(0.4);
    const auto free = build_primal(w.kernel, w.reward, w.cost, 0.0, false);
    const auto loose = build_primal(w.kernel, w.reward, w.cost, 1e6, true);
    const auto a = solve_lp(free);
    const auto b = solve_lp(loose);
    ASSERT_EQ(a.status, LpStatus::Optimal);
    ASSERT_EQ(b.status, LpStatus::Optimal);
    EXPECT_NEAR(value(free, a), value(loose, b), 1e-10);
    EXPECT_NEAR(occupancy_duals(loose, b).lambda, 0.0, 1e-12);
    // Unconstrained optimum always picks the high-energy action.
    const auto pol = extract_policy(free, a);
    for (std::size_t b2 = 0; b2 < pol.n_beliefs(); ++b2)
        if (pol.on_support[b2]) EXPECT_NEAR(pol.probs(b2, 1), 1.0, 1e-12);
}

TEST(OccupancyLp, ClosedFormMarginals) {
    const auto w = wireless(0.6);
    const std::vector<double> gamma{0.25, 0.75};
    const auto nu = closed_form_nu(w.space, gamma, 0.6);
    EXPECT_NEAR(nu[*w.space.index_of(0, 0)], 0.15, 1e-15);
    EXPECT_NEAR(nu[*w.space.index_of(1, 0)], 0.45, 1e-15);
    EXPECT_NEAR(nu[*w.space.index_of(1, 1)], 0.18, 1e-15);
    double total = 0.0;
    for (double v : nu) total += v;
    EXPECT_NEAR(total, 1.0 - std::pow(0.4, 11), 1e-14);
}

TEST(OccupancyLp, BudgetBindsAndPolicyMatchesKnapsack) {
    for (double rho : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}) {
        const auto w = wireless(rho);
        const auto lp = build_primal(w.kernel, w.reward, w.cost, 10.4, true);
        const auto sol = solve_lp(lp);
        ASSERT_EQ(sol.status, LpStatus::Optimal);
        EXPECT_NEAR(column_dot(lp, sol.x, w.cost), 10.4, 1e-8) << rho;
        const auto pol = extract_policy(lp, sol);
        const auto expected = oracle::wireless_knapsack(rho, 10, 10.4);
        for (std::size_t s = 0; s < 2; ++s)
            for (std::size_t eta = 0; eta <= 10; ++eta)
                EXPECT_NEAR(pol.probs(*w.space.index_of(s, eta), 0), expected[s][eta], 1e-8)
                    << "rho " << rho << " s " << s << " eta " << eta;
    }
}

TEST(OccupancyLp, BudgetIdentityPinsTheFractionalEntry) {
    // Only π(a₁ | e₂, 0) is fractional at ρ = 0.6, so 9 Σν + 7 ν(e₂,0)(1 − d) = 10.4.
    const auto w = wireless(0.6);
    const auto lp = build_primal(w.kernel, w.reward, w.cost, 10.4, true);
    const auto sol = solve_lp(lp);
    const auto pol = extract_policy(lp, sol);
    const double mass = 1.0 - std::pow(0.4, 11);
    const double d = 1.0 - (10.4 - 9.0 * mass) / (7.0 * 0.45);
    EXPECT_NEAR(pol.probs(*w.space.index_of(1, 0), 0), d, 1e-9);
    EXPECT_NEAR(d, 0.5554, 5e-5);
}

TEST(OccupancyLp, FullAndReducedAgree) {
    for (double rho : {0.15, 0.35, 0.6}) {
        const auto w = wireless(rho);
        const auto full = build_primal(w.kernel, w.reward, w.cost, 10.4, true);
        const auto reduced = build_reduced_primal(w.space, w.model, std::vector<double>{0.25, 0.75});
        const auto a = solve_lp(full);
        const auto b = solve_lp(reduced);
        ASSERT_EQ(a.status, LpStatus::Optimal);
        ASSERT_EQ(b.status, LpStatus::Optimal);
        EXPECT_NEAR(value(full, a), value(reduced, b), 1e-10);
        // Occupancy marginals of the full LP equal ν.
        const auto nu = closed_form_nu(w.space, std::vector<double>{0.25, 0.75}, rho);
        std::vector<double> marg(w.space.size(), 0.0);
        for (std::size_t j = 0; j < full.n_vars(); ++j) marg[full.columns[j].belief] += a.x[j];
        EXPECT_LE(max_abs_diff(marg, nu), 1e-10);
    }
}

TEST(OccupancyLp, ReducedNeedsActionIndependence) {
    std::mt19937_64 rng(12);
    const auto m = oracle::random_positive_mdp(rng, 2, 2, 0.5);
    const auto space = build_belief_space(m, 2);
    try {
        build_reduced_primal(space, m, std::vector<double>{0.5, 0.5});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotActionIndependent);
    }
}

TEST(OccupancyLp, DualOfDualAndStrongDuality) {
    const auto w = wireless(0.3);
    const auto lp = build_primal(w.kernel, w.reward, w.cost, 10.4, true);
    const auto dual = build_dual(lp);
    const auto back = build_dual(dual);
    EXPECT_EQ(back.value_sign, lp.value_sign);
    EXPECT_EQ(back.n_vars(), lp.n_vars());
    const auto p = solve_lp(lp);
    const auto d = solve_lp(dual);
    const auto pp = solve_lp(back);
    ASSERT_EQ(d.status, LpStatus::Optimal);
    ASSERT_EQ(pp.status, LpStatus::Optimal);
    EXPECT_NEAR(value(lp, p), value(dual, d), 1e-9);
    EXPECT_NEAR(value(lp, p), value(back, pp), 1e-9);
    for (std::size_t j = 0; j < lp.n_vars(); ++j) EXPECT_EQ(back.columns[j], lp.columns[j]);
}

TEST(OccupancyLp, InfeasibleBudget) {
    // Cheapest policy costs 9 (1 − 0.4¹¹) ≈ 8.9996.
    const auto w = wireless(0.6);
    const auto lp = build_primal(w.kernel, w.reward, w.cost, 8.9, true);
    const auto sol = solve_lp(lp);
    EXPECT_EQ(sol.status, LpStatus::Infeasible);
    try {
        extract_policy(lp, sol);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotOptimal);
    }
}

TEST(OccupancyLp, BudgetMonotonicity) {
    const auto w = wireless(0.45);
    double previous = -1e300;
    for (double budget = 9.0; budget <= 16.0; budget += 0.5) {
        const auto lp = build_primal(w.kernel, w.reward, w.cost, budget, true);
        const auto sol = solve_lp(lp);
        ASSERT_EQ(sol.status, LpStatus::Optimal) << budget;
        EXPECT_GE(value(lp, sol), previous - 1e-12);
        previous = value(lp, sol);
    }
}

TEST(PolicyEvaluation, LowEnergyPolicyCost) {
    const auto w = wireless(0.3);
    Policy pol;
    pol.probs = Matrix(w.space.size(), 2);
    for (std::size_t b = 0; b < w.space.size(); ++b) pol.probs(b, 0) = 1.0;
    pol.on_support.assign(w.space.size(), 1);
    const auto v = evaluate_policy_exact(pol, w.kernel, w.reward, w.cost);
    EXPECT_NEAR(v.avg_cost, 9.0 * (1.0 - std::pow(0.7, 11)), 1e-12);
    const auto nu = closed_form_nu(w.space, std::vector<double>{0.25, 0.75}, 0.3);
    EXPECT_LE(max_abs_diff(v.occupancy, nu), 1e-12);
    const auto r = evaluate_policy_reduced(pol, nu, w.reward, w.cost);
    EXPECT_NEAR(r.avg_reward, v.avg_reward, 1e-12);
}

TEST(PolicyEvaluation, OptimalPolicyReproducesLpValue) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 15; ++trial) {
        const double rho = 0.2 + 0.05 * trial;
        auto m = oracle::random_positive_mdp(rng, 2 + trial % 2, 2, rho);
        const auto space = build_belief_space(m, 3);
        for (auto mode : {BoundaryMode::Drop, BoundaryMode::SelfLoop, BoundaryMode::ForceObs}) {
            const auto kernel = build_kernel(space, m, mode);
            const auto reward = lift_reward(space, m);
            const auto cost = lift_cost(space, m);
            const auto lp = build_primal(kernel, reward, cost, 1e6, false);
            const auto sol = solve_lp(lp);
            ASSERT_EQ(sol.status, LpStatus::Optimal);
            const auto pol = extract_policy(lp, sol);
            const auto v = evaluate_policy_exact(pol, kernel, reward, cost);
            EXPECT_NEAR(v.avg_reward, value(lp, sol), 1e-9) << to_string(mode);
            EXPECT_NEAR(v.avg_cost, column_dot(lp, sol.x, cost), 1e-9);
        }
    }
}

TEST(PolicyCsv, RoundTripAndDomainCheck) {
    const auto w = wireless(0.6);
    const auto lp = build_primal(w.kernel, w.reward, w.cost, 10.4, true);
    const auto pol = extract_policy(lp, solve_lp(lp));
    std::stringstream buf;
    write_policy_csv(buf, pol, w.space);
    const auto back = read_policy_csv(buf, w.space);
    EXPECT_EQ(back.on_support, pol.on_support);
    for (std::size_t b = 0; b < pol.n_beliefs(); ++b)
        for (std::size_t a = 0; a < 2; ++a) EXPECT_EQ(back.probs(b, a), pol.probs(b, a));

    const auto other = build_belief_space(w.model, 9);
    std::stringstream again;
    write_policy_csv(again, pol, w.space);
    try {
        read_policy_csv(again, other);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::PolicyDomainMismatch);
    }
}

TEST(SolutionJson, ReportsRewardAndDuals) {
    const auto w = wireless(0.6);
    const auto lp = build_primal(w.kernel, w.reward, w.cost, 10.4, true);
    const auto sol = solve_lp(lp);
    const auto j = solution_to_json(lp, sol);
    EXPECT_EQ(j["status"], "optimal");
    EXPECT_NEAR(j["objective"].get<double>(), -sol.objective, 1e-15);
    EXPECT_EQ(j["x"].size(), 44u);
    EXPECT_EQ(j["duals"]["phi"].size(), 22u);
    EXPECT_GT(j["duals"]["lambda"].get<double>(), 0.0);
}
