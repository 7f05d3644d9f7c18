#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iomdp/linalg.hpp"

namespace iomdp {

/// Input-level probability tolerance (row sums of user-supplied matrices).
inline constexpr double kInputProbTol = 1e-12;
/// Tolerance for derived probability quantities (stationary distributions).
inline constexpr double kDerivedProbTol = 1e-10;

/// Finite constrained MDP with intermittent state observation.
///
/// The controller sees the true state with probability `rho` at every step and
/// nothing otherwise. Rewards and costs are indexed [state][action], transition
/// matrices [action](state, next_state).
struct FiniteMdp {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<Matrix> transitions;
    Matrix reward;
    Matrix cost;
    double budget = 0.0;
    double rho = 1.0;

    double prob(std::size_t a, std::size_t s, std::size_t next) const { return transitions[a](s, next); }
};

struct ValidationReport {
    bool stochastic = false;
    bool recurrent = false;
    /// True when recurrence was only checked on sampled policies.
    bool sampled = false;
    std::size_t policies_checked = 0;
    std::string detail;
};

/// Throws Error with EmptyModel, DimensionMismatch, InvalidInput or
/// NonStochasticRow when the model is malformed. Recurrence is not checked.
void check_model_shape(const FiniteMdp& model);

/// Checks stochasticity and recurrence of every deterministic stationary policy.
/// Throws Error(NotRecurrent) when a policy induces a reducible chain.
ValidationReport validate_mdp(const FiniteMdp& model);

/// Stationary distribution of an irreducible row-stochastic matrix, computed by
/// direct elimination with one balance equation replaced by Σγ = 1.
std::vector<double> stationary_distribution(const Matrix& p);

/// True when every P[a] equals P[0] within `tol` entrywise.
bool is_action_independent(const FiniteMdp& model, double tol = 1e-14);

/// Strong connectivity of the directed graph {(i, j) : m(i, j) > threshold}.
bool strongly_connected(const Matrix& m, double threshold = 0.0);

FiniteMdp model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const FiniteMdp& model);
FiniteMdp load_model(const std::filesystem::path& path);
void save_model(const FiniteMdp& model, const std::filesystem::path& path);

/// Two-state wireless channel instance: r = [[0,1],[1,4]], P_W = [[0.7,0.3],[0.1,0.9]]
/// for both actions, energy levels a₁ = 1, a₂ = 2 with cost (2 + a)² = (9, 16).
FiniteMdp wireless_model(double rho, double budget = 10.4);

}  // namespace iomdp
