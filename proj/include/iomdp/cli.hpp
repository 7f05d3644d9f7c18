#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "iomdp/analysis.hpp"
#include "iomdp/belief.hpp"
#include "iomdp/lp.hpp"
#include "iomdp/mdp_core.hpp"

namespace iomdp::cli {

enum class Command { Validate, Solve, Simulate, Analyze, Reproduce };

struct RunConfig {
    Command command = Command::Solve;
    std::filesystem::path model_path;
    std::optional<double> rho;
    std::size_t depth = 10;
    BoundaryMode mode = BoundaryMode::Drop;
    bool constrained = false;
    std::optional<double> budget;
    std::uint64_t seed = 1;
    std::uint64_t horizon = 1'000'000;
    std::size_t replications = 10;
    std::filesystem::path out_dir = "out";
    bool trace = false;
};

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitCheckFailed = 3;

/// Everything produced by one truncated solve.
struct SolveResult {
    FiniteMdp model;
    BeliefSpace space;
    BeliefKernel kernel;
    Matrix reward;
    Matrix cost;
    OccupancyLp primal;
    LpSolution primal_solution;
    OccupancyLp dual;
    LpSolution dual_solution;
    std::optional<Policy> policy;
    double gap = 0.0;
    AcoeResidual acoe;
};

SolveResult solve_model(const FiniteMdp& model, std::size_t depth, BoundaryMode mode, bool constrained);

/// Writes model.json, run.json, beliefs.csv, kernel.csv, solution.json, policy.csv and gap.json.
void write_solve_artifacts(const SolveResult& result, const RunConfig& cfg, const std::filesystem::path& dir);

int cmd_validate(const RunConfig& cfg);
int cmd_solve(const RunConfig& cfg);
int cmd_simulate(const RunConfig& cfg);
int cmd_analyze(const RunConfig& cfg);
int cmd_reproduce(const RunConfig& cfg);

/// Dispatches the command, mapping errors to exit codes.
int run(const RunConfig& cfg);

/// Probability of the low-energy action a₁ for the wireless instance,
/// indexed [ρ ∈ {0.1..0.6}][η ∈ {0..4}], for state 1 and state 2.
inline constexpr std::array<double, 6> kReferenceRhos = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
inline constexpr double kReferenceState1[6][5] = {
    {1, 1, 1, 0.8208, 0}, {1, 1, 1, 1, 1}, {1, 1, 1, 1, 1},
    {1, 1, 1, 1, 1},      {1, 1, 1, 1, 1}, {1, 1, 1, 1, 1},
};
inline constexpr double kReferenceState2[6][5] = {
    {0, 0, 0, 0, 0},      {0, 0, 0.5786, 1, 1}, {0, 0.9973, 1, 1, 1},
    {0.3178, 1, 1, 1, 1}, {0.4650, 1, 1, 1, 1}, {0.5554, 1, 1, 1, 1},
};
inline constexpr double kFractionalTolerance = 5e-3;
inline constexpr double kIntegralTolerance = 1e-9;

/// π(a₁ | s, η) for η ≤ K from a solved wireless policy.
std::vector<double> low_energy_row(const Policy& policy, const BeliefSpace& space, std::size_t state);

std::string format_rho(double rho);
void configure_logging();

}  // namespace iomdp::cli
