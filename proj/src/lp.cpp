#include "iomdp/lp.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "iomdp/errors.hpp"

namespace iomdp {

namespace {

void check_tables(const BeliefKernel& kernel, const Matrix& reward, const Matrix& cost) {
    for (const Matrix* m : {&reward, &cost}) {
        if (m->rows() != kernel.n_beliefs || m->cols() != kernel.n_actions) {
            throw Error(ErrorCode::DimensionMismatch,
                        fmt::format("lifted table is {}x{}, kernel has {} beliefs x {} actions", m->rows(), m->cols(),
                                    kernel.n_beliefs, kernel.n_actions));
        }
    }
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& text, std::size_t line) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw Error(ErrorCode::InvalidInput, fmt::format("policy CSV line {}: bad number '{}'", line, text));
    }
    return v;
}

std::size_t parse_index(const std::string& text, std::size_t line) {
    std::size_t v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw Error(ErrorCode::InvalidInput, fmt::format("policy CSV line {}: bad integer '{}'", line, text));
    }
    return v;
}

}  // namespace

std::string to_string(LpStatus status) {
    switch (status) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
    }
    return "unknown";
}

std::size_t OccupancyLp::count_rows(RowRelation relation) const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.relation == relation ? 1 : 0;
    return n;
}

std::size_t OccupancyLp::add_column(double cost, VarKind kind, Label label) {
    objective.push_back(cost);
    var_kind.push_back(kind);
    columns.push_back(label);
    return objective.size() - 1;
}

std::size_t OccupancyLp::find_row(Role role, std::size_t belief) const {
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].label.role == role && rows[i].label.belief == belief) return i;
    throw Error(ErrorCode::DimensionMismatch, "LP has no such row");
}

bool OccupancyLp::has_row(Role role) const {
    for (const auto& r : rows)
        if (r.label.role == role) return true;
    return false;
}

FlowColumn flow_column(const BeliefKernel& kernel, std::size_t b, std::size_t a) {
    const bool rescale = kernel.truncated(b, a) && kernel.mode == BoundaryMode::Drop;
    const double scale = rescale ? 1.0 / kernel.rho : 1.0;
    std::map<std::size_t, double> entries;
    entries[b] += 1.0;
    for (const auto& t : kernel.row(b, a)) entries[t.to] -= scale * t.prob;
    FlowColumn col;
    col.normalization = scale;
    for (const auto& [row, v] : entries)
        if (v != 0.0) col.flow.emplace_back(row, v);
    return col;
}

OccupancyLp build_primal(const BeliefKernel& kernel, const Matrix& reward, const Matrix& cost, double budget,
                         bool constrained) {
    check_tables(kernel, reward, cost);
    OccupancyLp lp;
    lp.n_beliefs = kernel.n_beliefs;
    lp.n_actions = kernel.n_actions;
    const std::size_t n = kernel.n_beliefs;

    lp.rows.resize(n + 1 + (constrained ? 1 : 0));
    for (std::size_t b = 0; b < n; ++b) lp.rows[b] = {{}, RowRelation::Equal, 0.0, {Role::Flow, b, 0}};
    auto& norm = lp.rows[n];
    norm = {{}, RowRelation::Equal, 1.0, {Role::Normalization, 0, 0}};
    if (constrained) lp.rows[n + 1] = {{}, RowRelation::LessEqual, budget, {Role::Budget, 0, 0}};

    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t a = 0; a < kernel.n_actions; ++a) {
            const std::size_t j = lp.add_column(-reward(b, a), VarKind::NonNegative, {Role::Occupancy, b, a});
            const auto col = flow_column(kernel, b, a);
            for (const auto& [row, v] : col.flow) lp.rows[row].coeffs.emplace_back(j, v);
            norm.coeffs.emplace_back(j, col.normalization);
            if (constrained) lp.rows[n + 1].coeffs.emplace_back(j, cost(b, a));
        }
    }
    return lp;
}

std::vector<double> closed_form_nu(const BeliefSpace& space, std::span<const double> gamma, double rho) {
    if (!space.action_independent) throw Error(ErrorCode::NotActionIndependent, "closed-form ν needs P[a] ≡ P");
    if (gamma.size() != space.n_states) throw Error(ErrorCode::DimensionMismatch, "γ has the wrong length");
    std::vector<double> nu(space.size(), 0.0);
    for (std::size_t s = 0; s < space.n_states; ++s) {
        double weight = gamma[s] * rho;
        for (std::size_t eta = 0; eta <= space.depth_limit; ++eta) {
            const auto idx = space.index_of(s, eta);
            if (!idx) break;
            nu[*idx] += weight;
            weight *= 1.0 - rho;
        }
    }
    return nu;
}

OccupancyLp build_reduced_primal(const BeliefSpace& space, const FiniteMdp& model, std::span<const double> gamma) {
    if (!space.action_independent || !is_action_independent(model)) {
        throw Error(ErrorCode::NotActionIndependent, "reduced LP requires identical transition matrices");
    }
    const auto nu = closed_form_nu(space, gamma, model.rho);
    const Matrix reward = lift_reward(space, model);
    const Matrix cost = lift_cost(space, model);

    OccupancyLp lp;
    lp.n_beliefs = space.size();
    lp.n_actions = model.n_actions;
    lp.rows.resize(space.size() + 1);
    auto& budget = lp.rows.back();
    budget = {{}, RowRelation::LessEqual, model.budget, {Role::Budget, 0, 0}};
    for (std::size_t b = 0; b < space.size(); ++b) {
        lp.rows[b] = {{}, RowRelation::Equal, nu[b], {Role::Marginal, b, 0}};
        for (std::size_t a = 0; a < model.n_actions; ++a) {
            const std::size_t j = lp.add_column(-reward(b, a), VarKind::NonNegative, {Role::Occupancy, b, a});
            lp.rows[b].coeffs.emplace_back(j, 1.0);
            budget.coeffs.emplace_back(j, cost(b, a));
        }
    }
    return lp;
}

OccupancyLp build_dual(const OccupancyLp& primal) {
    OccupancyLp dual;
    dual.n_beliefs = primal.n_beliefs;
    dual.n_actions = primal.n_actions;
    dual.value_sign = -primal.value_sign;

    // For min cᵀx the multiplier of a ≤ row is nonpositive; it is carried as
    // w = −y ≥ 0 so that budget multipliers come out as λ ≥ 0.
    std::vector<double> flip(primal.rows.size(), 1.0);
    for (std::size_t i = 0; i < primal.rows.size(); ++i) {
        const auto& row = primal.rows[i];
        VarKind kind = VarKind::Free;
        if (row.relation == RowRelation::LessEqual) {
            flip[i] = -1.0;
            kind = VarKind::NonNegative;
        } else if (row.relation == RowRelation::GreaterEqual) {
            kind = VarKind::NonNegative;
        }
        dual.add_column(-flip[i] * row.rhs, kind, row.label);
    }

    dual.rows.resize(primal.n_vars());
    for (std::size_t j = 0; j < primal.n_vars(); ++j) {
        auto& r = dual.rows[j];
        r.label = primal.columns[j];
        r.rhs = primal.objective[j];
        switch (primal.var_kind[j]) {
            case VarKind::NonNegative: r.relation = RowRelation::LessEqual; break;
            case VarKind::Free: r.relation = RowRelation::Equal; break;
            case VarKind::NonPositive: r.relation = RowRelation::GreaterEqual; break;
        }
    }
    for (std::size_t i = 0; i < primal.rows.size(); ++i)
        for (const auto& [j, v] : primal.rows[i].coeffs) dual.rows[j].coeffs.emplace_back(i, flip[i] * v);
    return dual;
}

OccupancyDuals occupancy_duals(const OccupancyLp& lp, const LpSolution& sol) {
    if (sol.status != LpStatus::Optimal) throw Error(ErrorCode::NotOptimal, "duals need an optimal solution");
    OccupancyDuals d;
    d.phi.assign(lp.n_beliefs, 0.0);
    for (std::size_t i = 0; i < lp.rows.size(); ++i) {
        const auto& label = lp.rows[i].label;
        const double y = sol.row_duals[i];
        switch (label.role) {
            case Role::Flow:
            case Role::Marginal: d.phi[label.belief] = y; break;
            case Role::Normalization: d.psi = y; break;
            case Role::Budget: d.lambda = -y; break;
            default: break;
        }
    }
    return d;
}

Policy extract_policy(const OccupancyLp& lp, const LpSolution& sol, double support_tol) {
    if (sol.status != LpStatus::Optimal) throw Error(ErrorCode::NotOptimal, "cannot extract a policy from " + to_string(sol.status));
    Policy policy;
    policy.probs = Matrix(lp.n_beliefs, lp.n_actions);
    for (std::size_t j = 0; j < lp.n_vars(); ++j) {
        const auto& label = lp.columns[j];
        if (label.role != Role::Occupancy) continue;
        policy.probs(label.belief, label.action) = std::max(sol.x[j], 0.0);
    }
    policy.on_support.assign(lp.n_beliefs, 0);
    for (std::size_t b = 0; b < lp.n_beliefs; ++b) {
        auto row = policy.probs.row(b);
        double total = 0.0;
        for (double v : row) total += v;
        if (total > support_tol) {
            for (auto& v : row) v /= total;
            policy.on_support[b] = 1;
        } else {
            for (auto& v : row) v = 1.0 / double(lp.n_actions);
        }
    }
    return policy;
}

PolicyValue evaluate_policy_exact(const Policy& policy, const BeliefKernel& kernel, const Matrix& reward,
                                  const Matrix& cost) {
    check_tables(kernel, reward, cost);
    if (policy.n_beliefs() != kernel.n_beliefs || policy.n_actions() != kernel.n_actions) {
        throw Error(ErrorCode::DimensionMismatch, "policy does not match the kernel");
    }
    const std::size_t n = kernel.n_beliefs;
    Matrix balance(n, n);
    std::vector<double> weight(n, 0.0);
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t a = 0; a < kernel.n_actions; ++a) {
            const double p = policy.probs(b, a);
            if (p == 0.0) continue;
            const auto col = flow_column(kernel, b, a);
            for (const auto& [row, v] : col.flow) balance(row, b) += p * v;
            weight[b] += p * col.normalization;
        }
    }
    // Flow rows sum to zero, so one of them is replaced by the normalization.
    for (std::size_t b = 0; b < n; ++b) balance(0, b) = weight[b];
    std::vector<double> rhs(n, 0.0);
    rhs[0] = 1.0;

    std::vector<double> occ;
    try {
        occ = solve_linear(std::move(balance), rhs);
    } catch (const Error&) {
        throw Error(ErrorCode::SingularChain, "policy-induced belief chain has no unique stationary law");
    }
    PolicyValue out;
    for (std::size_t b = 0; b < n; ++b) {
        if (occ[b] < -1e-9) throw Error(ErrorCode::SingularChain, "stationary solve produced negative mass");
        occ[b] = std::max(occ[b], 0.0);
        for (std::size_t a = 0; a < kernel.n_actions; ++a) {
            out.avg_reward += occ[b] * policy.probs(b, a) * reward(b, a);
            out.avg_cost += occ[b] * policy.probs(b, a) * cost(b, a);
        }
    }
    out.occupancy = std::move(occ);
    return out;
}

PolicyValue evaluate_policy_reduced(const Policy& policy, std::span<const double> nu, const Matrix& reward,
                                    const Matrix& cost) {
    if (nu.size() != policy.n_beliefs() || reward.rows() != nu.size() || cost.rows() != nu.size()) {
        throw Error(ErrorCode::DimensionMismatch, "ν, policy and tables disagree on the belief count");
    }
    PolicyValue out;
    out.occupancy.assign(nu.begin(), nu.end());
    for (std::size_t b = 0; b < nu.size(); ++b) {
        for (std::size_t a = 0; a < policy.n_actions(); ++a) {
            out.avg_reward += nu[b] * policy.probs(b, a) * reward(b, a);
            out.avg_cost += nu[b] * policy.probs(b, a) * cost(b, a);
        }
    }
    return out;
}

nlohmann::json solution_to_json(const OccupancyLp& lp, const LpSolution& sol) {
    nlohmann::json j;
    j["status"] = to_string(sol.status);
    if (sol.status != LpStatus::Optimal) {
        j["objective"] = nullptr;
        j["x"] = nlohmann::json::array();
        j["duals"] = nullptr;
        return j;
    }
    // Occupancy LPs minimize −reward; report the reward.
    j["objective"] = -lp.value_sign * sol.objective;
    j["minimized_objective"] = sol.objective;
    auto xs = nlohmann::json::array();
    for (std::size_t k = 0; k < lp.n_vars(); ++k) {
        const auto& label = lp.columns[k];
        if (label.role != Role::Occupancy) continue;
        xs.push_back({{"belief", label.belief}, {"action", label.action}, {"value", sol.x[k]}});
    }
    j["x"] = xs;
    const auto d = occupancy_duals(lp, sol);
    j["duals"] = {{"psi", d.psi}, {"phi", d.phi}, {"lambda", d.lambda}};
    j["iterations"] = sol.iterations;
    return j;
}

void write_policy_csv(std::ostream& out, const Policy& policy, const BeliefSpace& space) {
    if (policy.n_beliefs() != space.size()) throw Error(ErrorCode::PolicyDomainMismatch, "policy/space size mismatch");
    out << "belief_index,origin,age";
    for (std::size_t a = 0; a < policy.n_actions(); ++a) out << ",pi_a" << a;
    out << ",on_support\n";
    for (std::size_t b = 0; b < policy.n_beliefs(); ++b) {
        out << b << ',' << space.origins[b].state << ',' << space.origins[b].age;
        for (double p : policy.probs.row(b)) out << ',' << fmt::format("{:.17g}", p);
        out << ',' << (policy.on_support[b] ? 1 : 0) << '\n';
    }
}

Policy read_policy_csv(std::istream& in, const BeliefSpace& space) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::InvalidInput, "policy CSV is empty");
    const auto header = split_csv(line);
    if (header.size() < 5 || header[0] != "belief_index") throw Error(ErrorCode::InvalidInput, "policy CSV header is malformed");
    const std::size_t n_actions = header.size() - 4;
    if (n_actions != space.n_actions) {
        throw Error(ErrorCode::PolicyDomainMismatch,
                    fmt::format("policy has {} actions, model has {}", n_actions, space.n_actions));
    }
    Policy policy;
    policy.probs = Matrix(space.size(), n_actions);
    policy.on_support.assign(space.size(), 0);
    std::vector<char> seen(space.size(), 0);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != header.size()) throw Error(ErrorCode::InvalidInput, fmt::format("policy CSV line {}: wrong field count", line_no));
        const std::size_t b = parse_index(f[0], line_no);
        if (b >= space.size()) {
            throw Error(ErrorCode::PolicyDomainMismatch, fmt::format("policy CSV line {}: belief {} outside the space", line_no, b));
        }
        if (parse_index(f[1], line_no) != space.origins[b].state || parse_index(f[2], line_no) != space.origins[b].age) {
            throw Error(ErrorCode::PolicyDomainMismatch, fmt::format("policy CSV line {}: origin/age disagree with the belief space", line_no));
        }
        double total = 0.0;
        for (std::size_t a = 0; a < n_actions; ++a) {
            const double p = parse_double(f[3 + a], line_no);
            if (p < 0.0) throw Error(ErrorCode::InvalidInput, fmt::format("policy CSV line {}: negative probability", line_no));
            policy.probs(b, a) = p;
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::InvalidInput, fmt::format("policy CSV line {}: row does not sum to 1", line_no));
        policy.on_support[b] = parse_index(f.back(), line_no) != 0;
        seen[b] = 1;
    }
    for (std::size_t b = 0; b < space.size(); ++b)
        if (!seen[b]) throw Error(ErrorCode::PolicyDomainMismatch, fmt::format("policy CSV has no row for belief {}", b));
    return policy;
}

}  // namespace iomdp
