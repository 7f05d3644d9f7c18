#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iomdp/linalg.hpp"
#include "iomdp/mdp_core.hpp"

namespace iomdp {

using Belief = std::vector<double>;

/// Returns P_aᵀ b, with negative rounding dust clamped and the result renormalized.
Belief belief_update(std::span<const double> b, std::size_t action, const FiniteMdp& model);

/// How the no-observation branch is treated when its successor lies beyond depth K.
enum class BoundaryMode { Unset, Drop, SelfLoop, ForceObs };

std::string to_string(BoundaryMode mode);
BoundaryMode parse_boundary_mode(const std::string& text);

/// Where a belief came from: the last observed state and the actions taken since.
struct BeliefOrigin {
    std::size_t state = 0;
    /// Age η, the number of steps since the observation.
    std::size_t age = 0;
    /// Action sequence; empty for action-independent models, where the age alone
    /// determines the belief.
    std::vector<std::uint32_t> actions;
};

struct BeliefSpaceOptions {
    double dedup_tol = 1e-10;
    std::size_t max_beliefs = 1'000'000;
};

/// Reachable beliefs up to depth K. Indices [0, |S|) hold the pure states e_i.
struct BeliefSpace {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::size_t depth_limit = 0;
    double dedup_tol = 1e-10;
    bool action_independent = false;
    std::vector<Belief> beliefs;
    std::vector<BeliefOrigin> origins;
    /// successor[b][a]: index of P_aᵀ b, or nullopt when it lies beyond the truncation.
    std::vector<std::vector<std::optional<std::size_t>>> successor;

    std::size_t size() const noexcept { return beliefs.size(); }
    bool is_pure(std::size_t b) const noexcept { return b < n_states; }
    std::size_t age(std::size_t b) const { return origins[b].age; }
    bool truncated(std::size_t b, std::size_t a) const { return !successor[b][a].has_value(); }

    /// Index of the belief reached from e_s after η no-observation steps in an
    /// action-independent model, or nullopt if the chain hits the truncation.
    std::optional<std::size_t> index_of(std::size_t state, std::size_t age) const;
};

/// Breadth-first enumeration from the pure states. Throws Error(ExplosionGuard)
/// when the space exceeds options.max_beliefs.
BeliefSpace build_belief_space(const FiniteMdp& model, std::size_t depth_limit, BeliefSpaceOptions options = {});

struct Transition {
    std::size_t to = 0;
    double prob = 0.0;
};

/// Sparse belief transition law Q(b′ | b, a).
struct BeliefKernel {
    std::size_t n_beliefs = 0;
    std::size_t n_actions = 0;
    /// Number of pure beliefs; indices below this form the set E.
    std::size_t n_pure = 0;
    double rho = 1.0;
    BoundaryMode mode = BoundaryMode::Unset;
    std::vector<std::vector<Transition>> rows;
    /// Distribution P_aᵀ b of the next hidden state, per (b, a).
    std::vector<std::vector<double>> next_state;
    std::vector<char> truncated_flags;

    std::size_t slot(std::size_t b, std::size_t a) const { return b * n_actions + a; }
    std::span<const Transition> row(std::size_t b, std::size_t a) const { return rows[slot(b, a)]; }
    bool truncated(std::size_t b, std::size_t a) const { return truncated_flags[slot(b, a)] != 0; }
    double row_mass(std::size_t b, std::size_t a) const;
    bool is_pure(std::size_t b) const noexcept { return b < n_pure; }
};

/// Throws Error(ModeRequired) when some (b, a) is truncated and mode is Unset.
BeliefKernel build_kernel(const BeliefSpace& space, const FiniteMdp& model, BoundaryMode mode);

/// R(b, a) = Σ_s b(s) r(s, a).
Matrix lift_reward(const BeliefSpace& space, const FiniteMdp& model);
/// C(b, a) = Σ_s b(s) c(s, a).
Matrix lift_cost(const BeliefSpace& space, const FiniteMdp& model);

/// `index,origin_state,age_or_action_seq,prob_0,...`
void write_belief_space_csv(std::ostream& out, const BeliefSpace& space);
/// `from,action,to,prob`
void write_kernel_csv(std::ostream& out, const BeliefKernel& kernel);

}  // namespace iomdp
