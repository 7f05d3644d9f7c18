#include "iomdp/mdp_core.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "iomdp/errors.hpp"

namespace iomdp {

namespace {

constexpr std::size_t kExhaustivePolicyLimit = 1'000'000;
constexpr std::size_t kSampledPolicies = 1000;

bool reaches_all(const Matrix& m, double threshold, bool reverse) {
    const std::size_t n = m.rows();
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t v = 0; v < n; ++v) {
            const double w = reverse ? m(v, u) : m(u, v);
            if (w > threshold && !seen[v]) {
                seen[v] = 1;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == n;
}

Matrix policy_chain(const FiniteMdp& model, const std::vector<std::size_t>& policy) {
    Matrix out(model.n_states, model.n_states);
    for (std::size_t s = 0; s < model.n_states; ++s) {
        auto src = model.transitions[policy[s]].row(s);
        std::copy(src.begin(), src.end(), out.row(s).begin());
    }
    return out;
}

std::string describe_policy(const std::vector<std::size_t>& policy) {
    std::string out = "[";
    for (std::size_t i = 0; i < policy.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(policy[i]);
    }
    return out + "]";
}

void require_finite(double v, const std::string& where) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, where + ": value is not finite");
}

Matrix read_table(const nlohmann::json& j, const std::string& name, std::size_t rows, std::size_t cols) {
    if (!j.contains(name)) throw Error(ErrorCode::InvalidInput, "missing field '" + name + "'");
    const auto& t = j.at(name);
    if (!t.is_array() || t.size() != rows) {
        throw Error(ErrorCode::DimensionMismatch,
                    name + ": expected " + std::to_string(rows) + " rows");
    }
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto& row = t[i];
        if (!row.is_array() || row.size() != cols) {
            throw Error(ErrorCode::DimensionMismatch, name + "[" + std::to_string(i) + "]: expected " +
                                                          std::to_string(cols) + " entries");
        }
        for (std::size_t k = 0; k < cols; ++k) {
            const std::string where = name + "[" + std::to_string(i) + "][" + std::to_string(k) + "]";
            if (!row[k].is_number()) throw Error(ErrorCode::InvalidInput, where + ": not a number");
            out(i, k) = row[k].get<double>();
            require_finite(out(i, k), where);
        }
    }
    return out;
}

nlohmann::json table_to_json(const Matrix& m) {
    auto out = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        out.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return out;
}

}  // namespace

void check_model_shape(const FiniteMdp& model) {
    if (model.n_states == 0 || model.n_actions == 0) {
        throw Error(ErrorCode::EmptyModel, "model has no states or no actions");
    }
    if (model.transitions.size() != model.n_actions) {
        throw Error(ErrorCode::DimensionMismatch, "expected one transition matrix per action");
    }
    for (std::size_t a = 0; a < model.n_actions; ++a) {
        const auto& p = model.transitions[a];
        if (p.rows() != model.n_states || p.cols() != model.n_states) {
            throw Error(ErrorCode::DimensionMismatch, "P[" + std::to_string(a) + "] is not |S|x|S|");
        }
        for (std::size_t s = 0; s < model.n_states; ++s) {
            double sum = 0.0;
            for (std::size_t t = 0; t < model.n_states; ++t) {
                const double v = p(s, t);
                require_finite(v, "P[" + std::to_string(a) + "][" + std::to_string(s) + "]");
                if (v < 0.0) {
                    throw Error(ErrorCode::NonStochasticRow, "P[" + std::to_string(a) + "][" +
                                                                 std::to_string(s) + "] has a negative entry");
                }
                sum += v;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                throw Error(ErrorCode::NonStochasticRow, "P[" + std::to_string(a) + "][" + std::to_string(s) +
                                                             "] sums to " + std::to_string(sum));
            }
        }
    }
    for (const auto* table : {&model.reward, &model.cost}) {
        if (table->rows() != model.n_states || table->cols() != model.n_actions) {
            throw Error(ErrorCode::DimensionMismatch, "reward/cost tables must be |S|x|A|");
        }
        for (std::size_t s = 0; s < model.n_states; ++s)
            for (std::size_t a = 0; a < model.n_actions; ++a) require_finite((*table)(s, a), "reward/cost");
    }
    require_finite(model.budget, "B");
    if (!(model.rho > 0.0 && model.rho <= 1.0)) {
        throw Error(ErrorCode::InvalidInput, "rho must lie in (0, 1], got " + std::to_string(model.rho));
    }
}

bool strongly_connected(const Matrix& m, double threshold) {
    if (m.rows() == 0) return true;
    return reaches_all(m, threshold, false) && reaches_all(m, threshold, true);
}

ValidationReport validate_mdp(const FiniteMdp& model) {
    check_model_shape(model);
    ValidationReport report;
    report.stochastic = true;

    const std::size_t n = model.n_states;
    const std::size_t k = model.n_actions;
    double total = 1.0;
    for (std::size_t i = 0; i < n && total <= double(kExhaustivePolicyLimit); ++i) total *= double(k);

    std::vector<std::size_t> policy(n, 0);
    auto check = [&](const std::vector<std::size_t>& pol) {
        ++report.policies_checked;
        if (!strongly_connected(policy_chain(model, pol))) {
            throw Error(ErrorCode::NotRecurrent,
                        "deterministic policy " + describe_policy(pol) + " induces a reducible chain");
        }
    };

    if (total <= double(kExhaustivePolicyLimit)) {
        // Mixed-radix enumeration of all |A|^|S| deterministic policies.
        while (true) {
            check(policy);
            std::size_t pos = 0;
            while (pos < n && ++policy[pos] == k) policy[pos++] = 0;
            if (pos == n) break;
        }
        report.detail = "exhaustive";
    } else {
        Matrix graph(n, n);
        for (const auto& p : model.transitions)
            for (std::size_t s = 0; s < n; ++s)
                for (std::size_t t = 0; t < n; ++t) graph(s, t) += p(s, t);
        if (!strongly_connected(graph)) {
            throw Error(ErrorCode::NotRecurrent, "union transition graph is not strongly connected");
        }
        std::mt19937_64 rng(0x5eed);
        std::uniform_int_distribution<std::size_t> pick(0, k - 1);
        for (std::size_t trial = 0; trial < kSampledPolicies; ++trial) {
            for (auto& a : policy) a = pick(rng);
            check(policy);
        }
        report.sampled = true;
        report.detail = "sampled";
    }
    report.recurrent = true;
    return report;
}

std::vector<double> stationary_distribution(const Matrix& p) {
    const std::size_t n = p.rows();
    if (n == 0 || p.cols() != n) throw Error(ErrorCode::DimensionMismatch, "stationary distribution needs a square matrix");
    // Balance equations (Pᵀ − I) γ = 0 with the last one replaced by Σγ = 1.
    Matrix a(n, n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a(i, j) = p(j, i);
        a(i, i) -= 1.0;
    }
    for (std::size_t j = 0; j < n; ++j) a(n - 1, j) = 1.0;
    std::vector<double> rhs(n, 0.0);
    rhs[n - 1] = 1.0;

    std::vector<double> gamma;
    try {
        gamma = solve_linear(std::move(a), rhs);
    } catch (const Error& e) {
        throw Error(ErrorCode::SingularSystem, "stationary distribution is not unique");
    }
    double sum = 0.0;
    for (auto& g : gamma) {
        if (g < -kDerivedProbTol) throw Error(ErrorCode::SingularSystem, "stationary solve produced negative mass");
        g = std::max(g, 0.0);
        sum += g;
    }
    for (auto& g : gamma) g /= sum;
    return gamma;
}

bool is_action_independent(const FiniteMdp& model, double tol) {
    for (std::size_t a = 1; a < model.n_actions; ++a)
        for (std::size_t s = 0; s < model.n_states; ++s)
            for (std::size_t t = 0; t < model.n_states; ++t)
                if (std::abs(model.transitions[a](s, t) - model.transitions[0](s, t)) > tol) return false;
    return true;
}

FiniteMdp model_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidInput, "model must be a JSON object");
    auto get_count = [&](const char* name) {
        if (!j.contains(name) || !j.at(name).is_number_integer() || j.at(name).get<long long>() <= 0) {
            throw Error(ErrorCode::InvalidInput, std::string("'") + name + "' must be a positive integer");
        }
        return static_cast<std::size_t>(j.at(name).get<long long>());
    };
    auto get_scalar = [&](const char* name) {
        if (!j.contains(name) || !j.at(name).is_number()) {
            throw Error(ErrorCode::InvalidInput, std::string("'") + name + "' must be a number");
        }
        const double v = j.at(name).get<double>();
        require_finite(v, name);
        return v;
    };

    FiniteMdp m;
    m.n_states = get_count("n_states");
    m.n_actions = get_count("n_actions");
    if (!j.contains("P") || !j.at("P").is_array() || j.at("P").size() != m.n_actions) {
        throw Error(ErrorCode::DimensionMismatch, "P: expected " + std::to_string(m.n_actions) + " matrices");
    }
    for (std::size_t a = 0; a < m.n_actions; ++a) {
        nlohmann::json wrapper = {{"P[" + std::to_string(a) + "]", j.at("P")[a]}};
        m.transitions.push_back(read_table(wrapper, "P[" + std::to_string(a) + "]", m.n_states, m.n_states));
    }
    m.reward = read_table(j, "r", m.n_states, m.n_actions);
    m.cost = read_table(j, "c", m.n_states, m.n_actions);
    m.budget = get_scalar("B");
    m.rho = get_scalar("rho");
    check_model_shape(m);
    return m;
}

nlohmann::json model_to_json(const FiniteMdp& model) {
    nlohmann::json j;
    j["n_states"] = model.n_states;
    j["n_actions"] = model.n_actions;
    auto p = nlohmann::json::array();
    for (const auto& t : model.transitions) p.push_back(table_to_json(t));
    j["P"] = p;
    j["r"] = table_to_json(model.reward);
    j["c"] = table_to_json(model.cost);
    j["B"] = model.budget;
    j["rho"] = model.rho;
    return j;
}

FiniteMdp load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingArtifact, "cannot open model file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidInput, path.string() + ": " + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void save_model(const FiniteMdp& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
    out << model_to_json(model).dump(2) << '\n';
}

FiniteMdp wireless_model(double rho, double budget) {
    FiniteMdp m;
    m.n_states = 2;
    m.n_actions = 2;
    const Matrix pw = Matrix::from_rows({{0.7, 0.3}, {0.1, 0.9}});
    m.transitions = {pw, pw};
    m.reward = Matrix::from_rows({{0.0, 1.0}, {1.0, 4.0}});
    const double energy[2] = {1.0, 2.0};
    m.cost = Matrix(2, 2);
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t a = 0; a < 2; ++a) m.cost(s, a) = (2.0 + energy[a]) * (2.0 + energy[a]);
    m.budget = budget;
    m.rho = rho;
    return m;
}

}  // namespace iomdp
