#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "iomdp/analysis.hpp"
#include "iomdp/errors.hpp"
#include "iomdp/sim.hpp"
#include "oracles.hpp"

using namespace iomdp;

namespace {

Policy random_policy(std::mt19937_64& rng, std::size_t n_beliefs, std::size_t n_actions) {
    std::exponential_distribution<double> expo(1.0);
    Policy p;
    p.probs = Matrix(n_beliefs, n_actions);
    p.on_support.assign(n_beliefs, 1);
    for (std::size_t b = 0; b < n_beliefs; ++b) {
        double total = 0.0;
        for (std::size_t a = 0; a < n_actions; ++a) total += (p.probs(b, a) = expo(rng));
        for (std::size_t a = 0; a < n_actions; ++a) p.probs(b, a) /= total;
    }
    return p;
}

Policy deterministic(std::size_t n_beliefs, std::size_t n_actions, std::size_t action) {
    Policy p;
    p.probs = Matrix(n_beliefs, n_actions);
    p.on_support.assign(n_beliefs, 1);
    for (std::size_t b = 0; b < n_beliefs; ++b) p.probs(b, action) = 1.0;
    return p;
}

}  // namespace

TEST(ChainClassification, RandomPoliciesOnWirelessAreUnichain) {
    const auto m = wireless_model(0.35);
    const auto space = build_belief_space(m, 10);
    const auto kernel = build_kernel(space, m, BoundaryMode::Drop);
    std::mt19937_64 rng(99);
    for (int k = 0; k < 100; ++k) {
        const auto d = classify_chain(kernel, random_policy(rng, kernel.n_beliefs, 2));
        ASSERT_TRUE(d.unichain());
        const auto& cls = d.recurrent_classes.front();
        EXPECT_TRUE(std::binary_search(cls.begin(), cls.end(), 0u));
        EXPECT_TRUE(std::binary_search(cls.begin(), cls.end(), 1u));
        EXPECT_EQ(cls.size(), kernel.n_beliefs);
        EXPECT_NEAR(d.discarded_mass, 0.65, 1e-12);
    }
}

TEST(ChainClassification, FullObservationLeavesAgesTransient) {
    const auto m = wireless_model(1.0);
    const auto space = build_belief_space(m, 4);
    const auto kernel = build_kernel(space, m, BoundaryMode::Drop);
    const auto d = classify_chain(kernel, deterministic(kernel.n_beliefs, 2, 0));
    ASSERT_TRUE(d.unichain());
    EXPECT_EQ(d.recurrent_classes.front(), (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(d.transient.size(), kernel.n_beliefs - 2);
    for (double t : d.absorption_time) EXPECT_NEAR(t, 1.0, 1e-12);
}

TEST(ChainClassification, IdentityDynamicsGiveTwoClasses) {
    FiniteMdp m = wireless_model(0.5);
    m.transitions = {Matrix::identity(2), Matrix::identity(2)};
    const auto space = build_belief_space(m, 3);
    EXPECT_EQ(space.size(), 2u);
    const auto kernel = build_kernel(space, m, BoundaryMode::Drop);
    const auto d = classify_chain(kernel, deterministic(2, 2, 1));
    EXPECT_EQ(d.recurrent_classes.size(), 2u);
    EXPECT_FALSE(d.unichain());
}

TEST(ChainClassification, AgreesWithSimulatedOccupancy) {
    // Beliefs classified transient should not be visited after burn-in.
    const auto m = wireless_model(1.0);
    const auto space = build_belief_space(m, 3);
    const auto kernel = build_kernel(space, m, BoundaryMode::Drop);
    const auto pol = deterministic(kernel.n_beliefs, 2, 1);
    const auto d = classify_chain(kernel, pol);
    SimConfig cfg;
    cfg.horizon = 20'000;
    cfg.replications = 2;
    const auto report = simulate(m, pol, space, cfg);
    for (auto b : d.transient) EXPECT_EQ(report.belief_frequency[b], 0.0);
    for (auto b : d.recurrent_classes.front()) EXPECT_GT(report.belief_frequency[b], 0.0);
}

TEST(Contraction, WirelessIdentityAndDrift) {
    for (double rho : {0.1, 0.35, 0.6, 0.9}) {
        const auto m = wireless_model(rho);
        const auto space = build_belief_space(m, 10);
        const auto kernel = build_kernel(space, m, BoundaryMode::Drop);
        const auto cert = check_contraction(kernel, rho);
        EXPECT_TRUE(cert.violated.empty());
        EXPECT_LE(cert.identity_deviation, 1e-12);
        EXPECT_EQ(cert.identity_rows, 2u * 2u * 10u);
        const auto drift = foster_drift(kernel);
        EXPECT_NEAR(drift.max_drift, -rho, 1e-12);
        EXPECT_NEAR(drift.min_drift, -rho, 1e-12);
    }
}

TEST(Contraction, RandomModelsAllModes) {
    std::mt19937_64 rng(17);
    for (auto mode : {BoundaryMode::Drop, BoundaryMode::SelfLoop}) {
        for (int trial = 0; trial < 10; ++trial) {
            const double rho = 0.1 + 0.08 * trial;
            const auto m = oracle::random_positive_mdp(rng, 3, 2, rho);
            const auto space = build_belief_space(m, 3);
            const auto kernel = build_kernel(space, m, mode);
            const auto cert = check_contraction(kernel, rho);
            EXPECT_LE(cert.identity_deviation, 1e-12);
            EXPECT_GT(cert.identity_rows, 0u);
        }
    }
}

TEST(DualityGap, WirelessAndPerturbed) {
    const auto m = wireless_model(0.6);
    const auto space = build_belief_space(m, 10);
    const auto kernel = build_kernel(space, m, BoundaryMode::Drop);
    const auto lp = build_primal(kernel, lift_reward(space, m), lift_cost(space, m), 10.4, true);
    const auto dual = build_dual(lp);
    const auto ps = solve_lp(lp);
    auto ds = solve_lp(dual);
    EXPECT_LE(duality_gap(lp, ps, dual, ds), 1e-8);

    // Shifting the normalization multiplier moves the dual value one for one.
    for (std::size_t k = 0; k < dual.n_vars(); ++k)
        if (dual.columns[k].role == Role::Normalization) ds.x[k] += 0.1;
    EXPECT_NEAR(duality_gap(lp, ps, dual, ds), 0.1, 1e-9);

    LpSolution bad;
    bad.status = LpStatus::Infeasible;
    try {
        duality_gap(lp, ps, dual, bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::StatusMismatch);
    }
}

TEST(Acoe, ResidualSignsOnWireless) {
    for (double rho : {0.1, 0.3, 0.6}) {
        const auto m = wireless_model(rho);
        const auto space = build_belief_space(m, 10);
        const auto kernel = build_kernel(space, m, BoundaryMode::Drop);
        const auto lp = build_primal(kernel, lift_reward(space, m), lift_cost(space, m), 10.4, true);
        const auto sol = solve_lp(lp);
        const auto r = acoe_residual(lp, sol);
        EXPECT_GE(r.min_residual, -1e-8);
        EXPECT_LE(r.max_support_residual, 1e-8);
        EXPECT_GE(r.support_size, 22u);
    }
}

TEST(ClosedFormNu, MatchesStationaryLaw) {
    for (double rho : {0.1, 0.25, 0.6, 1.0}) {
        const auto m = wireless_model(rho);
        const auto space = build_belief_space(m, 10);
        const auto kernel = build_kernel(space, m, BoundaryMode::Drop);
        const std::vector<double> gamma{0.25, 0.75};
        const auto check = verify_nu_closed_form(space, kernel, gamma, rho);
        EXPECT_LE(check.max_deviation, 1e-10);
        EXPECT_NEAR(check.total_mass, 1.0 - std::pow(1.0 - rho, 11), 1e-12);
    }
}

TEST(ClosedFormNu, RandomActionIndependentModels) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        auto m = oracle::random_positive_mdp(rng, 3, 1, 0.2 + 0.07 * trial);
        m.n_actions = 2;
        m.transitions.push_back(m.transitions[0]);
        m.reward = Matrix(3, 2, 1.0);
        m.cost = Matrix(3, 2, 1.0);
        const auto space = build_belief_space(m, 6);
        const auto kernel = build_kernel(space, m, BoundaryMode::Drop);
        const auto gamma = stationary_distribution(m.transitions[0]);
        const auto check = verify_nu_closed_form(space, kernel, gamma, m.rho);
        EXPECT_LE(check.max_deviation, 1e-10);
        EXPECT_NEAR(check.total_mass, 1.0 - std::pow(1.0 - m.rho, 7), 1e-12);
    }
}

TEST(RandomBattery, StrongDualityAndAcoe) {
    std::mt19937_64 rng(5150);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t ns = 2 + trial % 3;
        const std::size_t na = 2 + trial % 2;
        auto m = oracle::random_positive_mdp(rng, ns, na, 0.3 + 0.05 * trial);
        const auto space = build_belief_space(m, na == 3 ? 2 : 4);
        const auto kernel = build_kernel(space, m, BoundaryMode::Drop);
        const auto reward = lift_reward(space, m);
        const auto cost = lift_cost(space, m);
        // Feasible budget: midway between the cheapest and the unconstrained cost.
        Matrix neg(cost.rows(), cost.cols());
        for (std::size_t b = 0; b < cost.rows(); ++b)
            for (std::size_t a = 0; a < cost.cols(); ++a) neg(b, a) = -cost(b, a);
        const auto cheap_lp = build_primal(kernel, neg, cost, 0.0, false);
        const auto cheap = solve_lp(cheap_lp);
        ASSERT_EQ(cheap.status, LpStatus::Optimal);
        const double budget = cheap.objective + 0.5;
        const auto lp = build_primal(kernel, reward, cost, budget, true);
        const auto dual = build_dual(lp);
        const auto ps = solve_lp(lp);
        const auto ds = solve_lp(dual);
        ASSERT_EQ(ps.status, LpStatus::Optimal);
        EXPECT_LE(duality_gap(lp, ps, dual, ds), 1e-8);
        const auto r = acoe_residual(lp, ps);
        EXPECT_GE(r.min_residual, -1e-8);
        EXPECT_LE(r.max_support_residual, 1e-8);
    }
}
