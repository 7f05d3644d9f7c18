#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "iomdp/belief.hpp"
#include "iomdp/lp.hpp"
#include "iomdp/mdp_core.hpp"

namespace iomdp {

struct SimConfig {
    std::uint64_t horizon = 1'000'000;
    /// Steps discarded before averaging; defaults to horizon / 10.
    std::optional<std::uint64_t> burn_in;
    std::uint64_t seed = 1;
    std::size_t replications = 10;
    /// Per-step trace of replication 0, capped at this many steps (0 disables).
    std::uint64_t trace_steps = 0;

    std::uint64_t effective_burn_in() const { return burn_in.value_or(horizon / 10); }
};

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
};

struct TraceRow {
    std::uint64_t t = 0;
    std::size_t s_true = 0;
    bool observed = false;
    std::size_t age = 0;
    std::size_t belief_index = 0;
    std::size_t action = 0;
    double reward = 0.0;
    double cost = 0.0;
};

struct SimReport {
    Estimate avg_reward;
    Estimate avg_cost;
    std::vector<double> rep_reward;
    std::vector<double> rep_cost;
    /// Empirical law of the age η, pooled across replications; sums to 1.
    std::vector<double> age_histogram;
    /// visit_frequency[s][η]: fraction of steps whose last observation was s, η steps ago.
    std::vector<std::vector<double>> visit_frequency;
    /// Fraction of steps spent at each belief index.
    std::vector<double> belief_frequency;
    std::vector<TraceRow> trace;
};

/// Simulates the hidden chain with Bernoulli(ρ) observations; the tracked
/// belief only drives the action choice, rewards and costs are scored on the
/// true state. Replications use independent streams seeded from (seed, index).
SimReport simulate(const FiniteMdp& model, const Policy& policy, const BeliefSpace& space, const SimConfig& config);

/// Total-variation distance between the empirical age law and Geometric(ρ) on {0, 1, ...}.
double empirical_age_law(const SimReport& report, double rho);

/// max_{s,η} |visit_frequency[s][η] − γ(s) ρ (1−ρ)^η|.
double visit_frequency_deviation(const SimReport& report, std::span<const double> gamma, double rho);

/// Initial-state law: γ of P (action-independent) or of the uniform-action average chain.
std::vector<double> initial_state_law(const FiniteMdp& model);

nlohmann::json report_to_json(const SimReport& report);
/// `t,s_true,observed,age,belief_index,action,reward,cost`
void write_trace_csv(std::ostream& out, const SimReport& report);

}  // namespace iomdp
