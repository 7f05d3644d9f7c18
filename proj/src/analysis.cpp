#include "iomdp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "iomdp/errors.hpp"

namespace iomdp {

namespace {

std::vector<std::vector<std::size_t>> policy_graph(const BeliefKernel& kernel, const Policy& policy,
                                                   std::vector<std::vector<double>>* weights) {
    const std::size_t n = kernel.n_beliefs;
    std::vector<std::vector<std::size_t>> adj(n);
    if (weights) weights->assign(n, {});
    for (std::size_t b = 0; b < n; ++b) {
        std::vector<std::pair<std::size_t, double>> out;
        for (std::size_t a = 0; a < kernel.n_actions; ++a) {
            const double p = policy.probs(b, a);
            if (p == 0.0) continue;
            for (const auto& t : kernel.row(b, a)) out.emplace_back(t.to, p * t.prob);
        }
        std::sort(out.begin(), out.end());
        for (std::size_t k = 0; k < out.size();) {
            std::size_t to = out[k].first;
            double w = 0.0;
            for (; k < out.size() && out[k].first == to; ++k) w += out[k].second;
            if (w > kEdgeThreshold) {
                adj[b].push_back(to);
                if (weights) (*weights)[b].push_back(w);
            }
        }
    }
    return adj;
}

/// Iterative Tarjan; returns the component id of each node.
std::vector<std::size_t> strongly_connected_components(const std::vector<std::vector<std::size_t>>& adj,
                                                       std::size_t& n_components) {
    const std::size_t n = adj.size();
    constexpr std::size_t kUnvisited = SIZE_MAX;
    std::vector<std::size_t> index(n, kUnvisited), low(n, 0), comp(n, kUnvisited);
    std::vector<char> on_stack(n, 0);
    std::vector<std::size_t> stack;
    std::size_t counter = 0;
    n_components = 0;

    struct Frame {
        std::size_t node;
        std::size_t edge;
    };
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != kUnvisited) continue;
        std::vector<Frame> call{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            auto& f = call.back();
            if (f.edge < adj[f.node].size()) {
                const std::size_t w = adj[f.node][f.edge++];
                if (index[w] == kUnvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.node] = std::min(low[f.node], index[w]);
                }
                continue;
            }
            const std::size_t v = f.node;
            call.pop_back();
            if (!call.empty()) low[call.back().node] = std::min(low[call.back().node], low[v]);
            if (low[v] == index[v]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp[w] = n_components;
                } while (w != v);
                ++n_components;
            }
        }
    }
    return comp;
}

}  // namespace

ChainDiagnostics classify_chain(const BeliefKernel& kernel, const Policy& policy) {
    if (policy.n_beliefs() != kernel.n_beliefs || policy.n_actions() != kernel.n_actions) {
        throw Error(ErrorCode::DimensionMismatch, "policy does not match the kernel");
    }
    const std::size_t n = kernel.n_beliefs;
    std::vector<std::vector<double>> weights;
    const auto adj = policy_graph(kernel, policy, &weights);
    std::size_t n_comp = 0;
    const auto comp = strongly_connected_components(adj, n_comp);

    std::vector<char> closed(n_comp, 1);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t to : adj[b])
            if (comp[to] != comp[b]) closed[comp[b]] = 0;

    ChainDiagnostics d;
    std::vector<std::size_t> class_slot(n_comp, SIZE_MAX);
    // Classes are numbered by their smallest member.
    for (std::size_t b = 0; b < n; ++b) {
        if (!closed[comp[b]]) {
            d.transient.push_back(b);
            continue;
        }
        if (class_slot[comp[b]] == SIZE_MAX) {
            class_slot[comp[b]] = d.recurrent_classes.size();
            d.recurrent_classes.emplace_back();
        }
        d.recurrent_classes[class_slot[comp[b]]].push_back(b);
    }
    for (std::size_t b = 0; b < n; ++b) {
        double mass = 0.0;
        for (std::size_t a = 0; a < kernel.n_actions; ++a) mass += policy.probs(b, a) * kernel.row_mass(b, a);
        d.discarded_mass = std::max(d.discarded_mass, 1.0 - mass);
    }

    // Expected hitting time of the recurrent set: (I − Q_TT) t = 1.
    const std::size_t m = d.transient.size();
    if (m > 0) {
        std::vector<std::size_t> pos(n, SIZE_MAX);
        for (std::size_t k = 0; k < m; ++k) pos[d.transient[k]] = k;
        Matrix sys = Matrix::identity(m);
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t b = d.transient[k];
            for (std::size_t e = 0; e < adj[b].size(); ++e)
                if (pos[adj[b][e]] != SIZE_MAX) sys(k, pos[adj[b][e]]) -= weights[b][e];
        }
        try {
            d.absorption_time = solve_linear(std::move(sys), std::vector<double>(m, 1.0));
        } catch (const Error&) {
            d.absorption_time.assign(m, std::numeric_limits<double>::infinity());
        }
    }
    return d;
}

DriftCertificate check_contraction(const BeliefKernel& kernel, double rho) {
    DriftCertificate c;
    c.factor = 1.0 - rho;
    c.mu.resize(kernel.n_beliefs);
    for (std::size_t b = 0; b < kernel.n_beliefs; ++b) c.mu[b] = kernel.is_pure(b) ? 2.0 : 1.0;
    for (std::size_t b = 0; b < kernel.n_beliefs; ++b) {
        for (std::size_t a = 0; a < kernel.n_actions; ++a) {
            double off = 0.0;
            double off_mass = 0.0;
            for (const auto& t : kernel.row(b, a)) {
                if (kernel.is_pure(t.to)) continue;
                off += t.prob * c.mu[t.to];
                off_mass += t.prob;
            }
            if (off > c.factor * c.mu[b] + 1e-12) c.violated.emplace_back(b, a);
            const bool interior = !kernel.truncated(b, a);
            bool successor_pure = false;
            if (interior && rho < 1.0) {
                // The no-observation branch carries exactly 1−ρ; it lands in E only if P_aᵀb is pure.
                const auto& next = kernel.next_state[kernel.slot(b, a)];
                successor_pure = std::any_of(next.begin(), next.end(), [](double p) { return p >= 1.0 - 1e-10; });
            }
            if (interior && !successor_pure) {
                c.identity_deviation = std::max(c.identity_deviation, std::abs(off_mass - (1.0 - rho)));
                ++c.identity_rows;
            }
        }
    }
    return c;
}

FosterDrift foster_drift(const BeliefKernel& kernel) {
    FosterDrift f;
    f.min_drift = std::numeric_limits<double>::infinity();
    f.max_drift = -std::numeric_limits<double>::infinity();
    for (std::size_t b = kernel.n_pure; b < kernel.n_beliefs; ++b) {
        for (std::size_t a = 0; a < kernel.n_actions; ++a) {
            double expected = 0.0;
            double mass = 0.0;
            for (const auto& t : kernel.row(b, a)) {
                expected += t.prob * (kernel.is_pure(t.to) ? 1.0 : 2.0);
                mass += t.prob;
            }
            expected += 2.0 * (1.0 - mass);
            const double drift = expected - 2.0;
            f.min_drift = std::min(f.min_drift, drift);
            f.max_drift = std::max(f.max_drift, drift);
            ++f.rows;
        }
    }
    if (f.rows == 0) f.min_drift = f.max_drift = 0.0;
    return f;
}

double duality_gap(const OccupancyLp& primal, const LpSolution& primal_sol, const OccupancyLp& dual,
                   const LpSolution& dual_sol) {
    if (primal_sol.status != LpStatus::Optimal || dual_sol.status != LpStatus::Optimal) {
        throw Error(ErrorCode::StatusMismatch,
                    "duality gap needs two optimal solutions, got " + to_string(primal_sol.status) + " and " +
                        to_string(dual_sol.status));
    }
    const double p = primal.value_sign * dot(primal.objective, primal_sol.x);
    const double d = dual.value_sign * dot(dual.objective, dual_sol.x);
    return std::abs(p - d);
}

AcoeResidual acoe_residual(const OccupancyLp& lp, const LpSolution& sol, double support_tol) {
    if (sol.status != LpStatus::Optimal) throw Error(ErrorCode::NotOptimal, "ACOE residual needs an optimal solution");
    const auto d = reduced_costs(lp, sol.row_duals);
    AcoeResidual r;
    r.min_residual = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < lp.n_vars(); ++j) {
        if (lp.columns[j].role != Role::Occupancy) continue;
        r.min_residual = std::min(r.min_residual, d[j]);
        if (sol.x[j] > support_tol) {
            r.max_support_residual = std::max(r.max_support_residual, std::abs(d[j]));
            ++r.support_size;
        }
    }
    return r;
}

NuCheck verify_nu_closed_form(const BeliefSpace& space, const BeliefKernel& kernel, std::span<const double> gamma,
                              double rho) {
    if (!space.action_independent) throw Error(ErrorCode::NotActionIndependent, "closed-form ν needs P[a] ≡ P");
    // Any fixed action: the chain does not depend on it.
    Policy first_action;
    first_action.probs = Matrix(kernel.n_beliefs, kernel.n_actions);
    for (std::size_t b = 0; b < kernel.n_beliefs; ++b) first_action.probs(b, 0) = 1.0;
    const Matrix zeros(kernel.n_beliefs, kernel.n_actions);
    const auto value = evaluate_policy_exact(first_action, kernel, zeros, zeros);

    NuCheck check;
    check.nu = value.occupancy;
    for (double v : check.nu) check.total_mass += v;
    const auto expected = closed_form_nu(space, gamma, rho);
    for (std::size_t s = 0; s < space.n_states; ++s) {
        for (std::size_t eta = 0; eta < space.depth_limit; ++eta) {
            const auto idx = space.index_of(s, eta);
            if (!idx) break;
            check.max_deviation = std::max(check.max_deviation, std::abs(check.nu[*idx] - expected[*idx]));
        }
    }
    return check;
}

nlohmann::json diagnostics_to_json(const ChainDiagnostics& d) {
    return {{"recurrent_classes", d.recurrent_classes},
            {"transient", d.transient},
            {"absorption_time", d.absorption_time},
            {"discarded_mass", d.discarded_mass},
            {"unichain", d.unichain()}};
}

nlohmann::json certificate_to_json(const DriftCertificate& c) {
    auto violated = nlohmann::json::array();
    for (const auto& [b, a] : c.violated) violated.push_back({b, a});
    return {{"factor", c.factor},
            {"violated", violated},
            {"identity_deviation", c.identity_deviation},
            {"identity_rows", c.identity_rows}};
}

}  // namespace iomdp
