#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "iomdp/belief.hpp"
#include "iomdp/lp.hpp"

namespace iomdp {

/// Structural zeros: kernel edges at or below this probability are ignored.
inline constexpr double kEdgeThreshold = 1e-14;

struct ChainDiagnostics {
    /// Closed communicating classes, each sorted by belief index.
    std::vector<std::vector<std::size_t>> recurrent_classes;
    std::vector<std::size_t> transient;
    /// Expected steps to enter the recurrent set, aligned with `transient`.
    std::vector<double> absorption_time;
    /// Largest per-belief mass missing from the kernel rows (drop-mode truncation).
    double discarded_mass = 0.0;

    bool unichain() const noexcept { return recurrent_classes.size() == 1; }
};

/// SCC analysis of the policy-induced graph {b → b′ : Σ_a π(a|b) Q(b′|b,a) > kEdgeThreshold}.
ChainDiagnostics classify_chain(const BeliefKernel& kernel, const Policy& policy);

struct DriftCertificate {
    std::vector<double> mu;
    double factor = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> violated;
    /// max |Σ_{b′∉E} Q(b′|b,a) − (1−ρ)| over interior (b, a) whose successor is not pure.
    double identity_deviation = 0.0;
    std::size_t identity_rows = 0;
};

/// Checks Σ_{b′∉E} Q(b′|b,a) μ(b′) ≤ (1−ρ) μ(b) with μ = 1 off E and 2 on E.
DriftCertificate check_contraction(const BeliefKernel& kernel, double rho);

/// Foster drift E[V(b′)] − V(b) per (b, a) for V = 2 off E and 1 on E, for non-pure b.
/// Mass discarded by drop-mode truncation is counted as staying off E.
struct FosterDrift {
    double max_drift = 0.0;
    double min_drift = 0.0;
    std::size_t rows = 0;
};
FosterDrift foster_drift(const BeliefKernel& kernel);

/// |value(primal) − value(dual)| with both values recomputed from the solution vectors.
double duality_gap(const OccupancyLp& primal, const LpSolution& primal_sol, const OccupancyLp& dual,
                   const LpSolution& dual_sol);

/// Average-cost optimality residual c_j − A_jᵀy per occupancy column. On flow
/// columns this is −R + λC + ΣQφ − φ(b) − ψ.
struct AcoeResidual {
    double min_residual = 0.0;
    /// Largest |residual| over columns with x > support_tol.
    double max_support_residual = 0.0;
    std::size_t support_size = 0;
};
AcoeResidual acoe_residual(const OccupancyLp& lp, const LpSolution& sol, double support_tol = 1e-12);

struct NuCheck {
    double max_deviation = 0.0;
    double total_mass = 0.0;
    std::vector<double> nu;
};

/// Stationary law of the belief chain (linear solve) versus γ(s) ρ (1−ρ)^η for η < K.
NuCheck verify_nu_closed_form(const BeliefSpace& space, const BeliefKernel& kernel, std::span<const double> gamma,
                              double rho);

nlohmann::json diagnostics_to_json(const ChainDiagnostics& d);
nlohmann::json certificate_to_json(const DriftCertificate& c);

}  // namespace iomdp
