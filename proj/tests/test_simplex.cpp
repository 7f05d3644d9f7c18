#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "iomdp/lp.hpp"
#include "oracles.hpp"

using namespace iomdp;

namespace {

LpRow make_row(std::vector<std::pair<std::size_t, double>> coeffs, RowRelation rel, double rhs) {
    LpRow r;
    r.coeffs = std::move(coeffs);
    r.relation = rel;
    r.rhs = rhs;
    return r;
}

OccupancyLp two_var(double c0, double c1) {
    OccupancyLp lp;
    lp.add_column(c0, VarKind::NonNegative, {});
    lp.add_column(c1, VarKind::NonNegative, {});
    return lp;
}

}  // namespace

TEST(Simplex, TextbookMaximization) {
    // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18: optimum 36 at (2, 6).
    auto lp = two_var(-3, -5);
    lp.rows.push_back(make_row({{0, 1}}, RowRelation::LessEqual, 4));
    lp.rows.push_back(make_row({{1, 2}}, RowRelation::LessEqual, 12));
    lp.rows.push_back(make_row({{0, 3}, {1, 2}}, RowRelation::LessEqual, 18));
    const auto sol = solve_lp(lp);
    ASSERT_EQ(sol.status, LpStatus::Optimal);
    EXPECT_NEAR(sol.objective, -36.0, 1e-12);
    EXPECT_NEAR(sol.x[0], 2.0, 1e-12);
    EXPECT_NEAR(sol.x[1], 6.0, 1e-12);
    // Textbook shadow prices (0, 3/2, 1), negative under the ≤ sign convention.
    EXPECT_NEAR(sol.row_duals[0], 0.0, 1e-12);
    EXPECT_NEAR(sol.row_duals[1], -1.5, 1e-12);
    EXPECT_NEAR(sol.row_duals[2], -1.0, 1e-12);
    for (double rc : reduced_costs(lp, sol.row_duals)) EXPECT_GE(rc, -1e-12);
}

TEST(Simplex, DetectsInfeasibility) {
    auto lp = two_var(1, 1);
    lp.rows.push_back(make_row({{0, 1}, {1, 1}}, RowRelation::LessEqual, 1));
    lp.rows.push_back(make_row({{0, 1}, {1, 1}}, RowRelation::GreaterEqual, 2));
    EXPECT_EQ(solve_lp(lp).status, LpStatus::Infeasible);
}

TEST(Simplex, DetectsUnboundedness) {
    auto lp = two_var(-1, 0);
    lp.rows.push_back(make_row({{0, 1}, {1, -1}}, RowRelation::LessEqual, 1));
    EXPECT_EQ(solve_lp(lp).status, LpStatus::Unbounded);
}

TEST(Simplex, FreeAndNonPositiveVariables) {
    // min x + y, x free, y ≤ 0, x − y = 3, x ≥ −2 (written as −x ≤ 2).
    OccupancyLp lp;
    lp.add_column(1, VarKind::Free, {});
    lp.add_column(1, VarKind::NonPositive, {});
    lp.rows.push_back(make_row({{0, 1}, {1, -1}}, RowRelation::Equal, 3));
    lp.rows.push_back(make_row({{0, -1}}, RowRelation::LessEqual, 2));
    // x = 3 + y, objective 3 + 2y, y as small as x ≥ −2 allows: y = −5.
    const auto sol = solve_lp(lp);
    ASSERT_EQ(sol.status, LpStatus::Optimal);
    EXPECT_NEAR(sol.x[0], -2.0, 1e-12);
    EXPECT_NEAR(sol.x[1], -5.0, 1e-12);
    EXPECT_NEAR(sol.objective, -7.0, 1e-12);
    EXPECT_LE(primal_infeasibility(lp, sol.x), 1e-12);
}

TEST(Simplex, RedundantEqualityRows) {
    auto lp = two_var(1, 2);
    lp.rows.push_back(make_row({{0, 1}, {1, 1}}, RowRelation::Equal, 1));
    lp.rows.push_back(make_row({{0, 2}, {1, 2}}, RowRelation::Equal, 2));
    lp.rows.push_back(make_row({{0, -1}, {1, -1}}, RowRelation::Equal, -1));
    const auto sol = solve_lp(lp);
    ASSERT_EQ(sol.status, LpStatus::Optimal);
    EXPECT_NEAR(sol.objective, 1.0, 1e-12);
    const auto rc = reduced_costs(lp, sol.row_duals);
    EXPECT_NEAR(rc[0], 0.0, 1e-12);
    EXPECT_GE(rc[1], -1e-12);
}

TEST(Simplex, MatchesVertexEnumerationOnRandomLps) {
    std::mt19937_64 rng(20240611);
    int feasible = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto lp = oracle::random_small_lp(rng, 6);
        const auto expected = oracle::vertex_enumeration(lp);
        const auto sol = solve_lp(lp);
        if (!expected.feasible) {
            EXPECT_EQ(sol.status, LpStatus::Infeasible) << "trial " << trial;
            continue;
        }
        ++feasible;
        ASSERT_EQ(sol.status, LpStatus::Optimal) << "trial " << trial;
        EXPECT_NEAR(sol.objective, expected.objective, 1e-9) << "trial " << trial;
        EXPECT_LE(primal_infeasibility(lp, sol.x), 1e-9);
        // Weak duality certificate: bᵀy equals the optimum.
        double by = 0.0;
        for (std::size_t i = 0; i < lp.rows.size(); ++i) by += lp.rows[i].rhs * sol.row_duals[i];
        EXPECT_NEAR(by, sol.objective, 1e-9);
        for (double rc : reduced_costs(lp, sol.row_duals)) EXPECT_GE(rc, -1e-9);
    }
    EXPECT_GT(feasible, 30);
}

TEST(Simplex, Deterministic) {
    std::mt19937_64 rng(77);
    const auto lp = oracle::random_small_lp(rng, 6);
    const auto a = solve_lp(lp);
    const auto b = solve_lp(lp);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.row_duals, b.row_duals);
    EXPECT_EQ(a.iterations, b.iterations);
}
