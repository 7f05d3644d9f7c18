#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "iomdp/errors.hpp"
#include "iomdp/sim.hpp"

using namespace iomdp;

namespace {

struct Solved {
    FiniteMdp model;
    BeliefSpace space;
    BeliefKernel kernel;
    Policy policy;
    double value = 0.0;
    double cost = 0.0;
};

Solved solve_wireless(double rho, std::size_t depth = 10) {
    Solved out;
    out.model = wireless_model(rho);
    out.space = build_belief_space(out.model, depth);
    out.kernel = build_kernel(out.space, out.model, BoundaryMode::Drop);
    const auto reward = lift_reward(out.space, out.model);
    const auto cost = lift_cost(out.space, out.model);
    const auto lp = build_primal(out.kernel, reward, cost, out.model.budget, true);
    const auto sol = solve_lp(lp);
    out.policy = extract_policy(lp, sol);
    const auto v = evaluate_policy_exact(out.policy, out.kernel, reward, cost);
    out.value = v.avg_reward;
    out.cost = v.avg_cost;
    return out;
}

SimConfig small(std::uint64_t seed = 7) {
    SimConfig cfg;
    cfg.horizon = 200'000;
    cfg.replications = 4;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST(Simulation, FullObservationMatchesExactValue) {
    const auto s = solve_wireless(1.0, 3);
    const auto report = simulate(s.model, s.policy, s.space, small());
    EXPECT_NEAR(report.avg_reward.mean, s.value, 4 * report.avg_reward.std_error + 1e-3);
    EXPECT_NEAR(report.avg_cost.mean, s.cost, 4 * report.avg_cost.std_error + 1e-3);
    ASSERT_EQ(report.age_histogram.size(), 1u);
    EXPECT_DOUBLE_EQ(report.age_histogram[0], 1.0);
}

TEST(Simulation, ConstantCostIsExact) {
    auto s = solve_wireless(0.4);
    s.model.cost = Matrix(2, 2, 9.0);
    const auto report = simulate(s.model, s.policy, s.space, small());
    EXPECT_DOUBLE_EQ(report.avg_cost.mean, 9.0);
    EXPECT_DOUBLE_EQ(report.avg_cost.std_error, 0.0);
}

TEST(Simulation, SeedDeterminism) {
    const auto s = solve_wireless(0.5);
    const auto a = simulate(s.model, s.policy, s.space, small(3));
    const auto b = simulate(s.model, s.policy, s.space, small(3));
    const auto c = simulate(s.model, s.policy, s.space, small(4));
    EXPECT_EQ(a.rep_reward, b.rep_reward);
    EXPECT_EQ(a.rep_cost, b.rep_cost);
    EXPECT_EQ(a.age_histogram, b.age_histogram);
    EXPECT_NE(a.rep_reward, c.rep_reward);
}

TEST(Simulation, LongRunAveragesMatchLp) {
    const auto s = solve_wireless(0.6);
    const auto report = simulate(s.model, s.policy, s.space, small());
    EXPECT_NEAR(report.avg_reward.mean, s.value, 4 * report.avg_reward.std_error + 2e-4);
    EXPECT_NEAR(report.avg_cost.mean, 10.4, 4 * report.avg_cost.std_error + 2e-4);
    EXPECT_LT(empirical_age_law(report, 0.6), 0.01);
    EXPECT_LT(visit_frequency_deviation(report, std::vector<double>{0.25, 0.75}, 0.6), 5e-3);
    double total = 0.0;
    for (double p : report.belief_frequency) total += p;
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Simulation, TraceTracksBeliefAndHiddenState) {
    const auto s = solve_wireless(0.3, 4);
    auto cfg = small();
    cfg.trace_steps = 5000;
    cfg.burn_in = 0;
    const auto report = simulate(s.model, s.policy, s.space, cfg);
    ASSERT_EQ(report.trace.size(), 5000u);
    std::size_t last_obs = 0;
    std::size_t deep = 0;
    for (const auto& row : report.trace) {
        if (row.observed) {
            EXPECT_EQ(row.age, 0u);
            EXPECT_EQ(row.belief_index, row.s_true);
            last_obs = row.s_true;
        } else {
            EXPECT_GT(row.age, 0u);
        }
        const auto& origin = s.space.origins[row.belief_index];
        EXPECT_EQ(origin.state, last_obs);
        EXPECT_EQ(origin.age, std::min<std::size_t>(row.age, 4));
        EXPECT_EQ(row.reward, s.model.reward(row.s_true, row.action));
        deep += row.age > 4 ? 1 : 0;
    }
    EXPECT_GT(deep, 0u);
    std::ostringstream csv;
    write_trace_csv(csv, report);
    const std::string text = csv.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5001);
}

TEST(Simulation, AgeLawDistance) {
    SimReport r;
    r.age_histogram = {0.5, 0.25, 0.25};
    // Geometric(½): ½, ¼, ⅛, tail ⅛.
    EXPECT_NEAR(empirical_age_law(r, 0.5), 0.5 * (0.125 + 0.125), 1e-15);
}

TEST(Simulation, RejectsMismatchedPolicy) {
    const auto s = solve_wireless(0.5);
    Policy wrong;
    wrong.probs = Matrix(3, 2, 0.5);
    wrong.on_support.assign(3, 1);
    try {
        simulate(s.model, wrong, s.space, small());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::PolicyDomainMismatch);
    }
}
