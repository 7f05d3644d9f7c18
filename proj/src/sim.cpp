#include "iomdp/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "iomdp/errors.hpp"

namespace iomdp {

namespace {

/// Uniform double in [0, 1) from the top 53 bits; portable across standard libraries.
double uniform01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

std::size_t sample(std::span<const double> probs, std::mt19937_64& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    // Rounding left u above the cumulative sum; take the last positive entry.
    for (std::size_t i = probs.size(); i-- > 0;)
        if (probs[i] > 0.0) return i;
    return 0;
}

struct Replication {
    double reward = 0.0;
    double cost = 0.0;
    std::vector<std::uint64_t> age_counts;
    std::vector<std::vector<std::uint64_t>> visit_counts;
    std::vector<std::uint64_t> belief_counts;
    std::vector<TraceRow> trace;
};

Replication run_replication(const FiniteMdp& model, const Policy& policy, const BeliefSpace& space,
                            const SimConfig& cfg, std::span<const double> initial, std::size_t rep) {
    std::seed_seq seq{std::uint32_t(cfg.seed), std::uint32_t(cfg.seed >> 32), std::uint32_t(rep),
                      std::uint32_t(std::uint64_t(rep) >> 32)};
    std::mt19937_64 rng(seq);

    Replication out;
    out.visit_counts.assign(model.n_states, {});
    out.belief_counts.assign(space.size(), 0);
    const std::uint64_t burn = cfg.effective_burn_in();
    const bool tracing = rep == 0 && cfg.trace_steps > 0;

    std::size_t state = sample(initial, rng);
    std::size_t belief = state;
    std::size_t last_observed = state;
    std::size_t age = 0;
    std::size_t prev_action = 0;
    double reward_sum = 0.0;
    double cost_sum = 0.0;

    for (std::uint64_t t = 0; t < cfg.horizon; ++t) {
        bool observed = true;
        if (t > 0) {
            observed = uniform01(rng) < model.rho;
            if (observed) {
                belief = state;
                last_observed = state;
                age = 0;
            } else {
                ++age;
                // Past the truncation the age-K belief of the same origin keeps serving the lookup.
                if (const auto next = space.successor[belief][prev_action]) belief = *next;
            }
        }
        const std::size_t action = sample(policy.probs.row(belief), rng);
        const double r = model.reward(state, action);
        const double c = model.cost(state, action);
        if (t >= burn) {
            reward_sum += r;
            cost_sum += c;
            if (out.age_counts.size() <= age) out.age_counts.resize(age + 1, 0);
            ++out.age_counts[age];
            auto& row = out.visit_counts[last_observed];
            if (row.size() <= age) row.resize(age + 1, 0);
            ++row[age];
            ++out.belief_counts[belief];
        }
        if (tracing && t < cfg.trace_steps) out.trace.push_back({t, state, observed, age, belief, action, r, c});
        state = sample(model.transitions[action].row(state), rng);
        prev_action = action;
    }
    const double steps = double(cfg.horizon - burn);
    out.reward = reward_sum / steps;
    out.cost = cost_sum / steps;
    return out;
}

Estimate summarize(const std::vector<double>& xs) {
    Estimate e;
    for (double x : xs) e.mean += x;
    e.mean /= double(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - e.mean) * (x - e.mean);
        e.std_error = std::sqrt(ss / double(xs.size() - 1) / double(xs.size()));
    }
    return e;
}

}  // namespace

std::vector<double> initial_state_law(const FiniteMdp& model) {
    Matrix avg(model.n_states, model.n_states);
    for (const auto& p : model.transitions)
        for (std::size_t s = 0; s < model.n_states; ++s)
            for (std::size_t t = 0; t < model.n_states; ++t) avg(s, t) += p(s, t) / double(model.n_actions);
    try {
        return stationary_distribution(avg);
    } catch (const Error&) {
        return std::vector<double>(model.n_states, 1.0 / double(model.n_states));
    }
}

SimReport simulate(const FiniteMdp& model, const Policy& policy, const BeliefSpace& space, const SimConfig& cfg) {
    if (policy.n_beliefs() != space.size() || policy.n_actions() != model.n_actions ||
        space.n_states != model.n_states || space.n_actions != model.n_actions) {
        throw Error(ErrorCode::PolicyDomainMismatch, "policy, belief space and model disagree on dimensions");
    }
    if (cfg.replications == 0 || cfg.horizon <= cfg.effective_burn_in()) {
        throw Error(ErrorCode::InvalidInput, "need horizon > burn_in and at least one replication");
    }
    const auto initial = initial_state_law(model);

    std::vector<Replication> reps(cfg.replications);
    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, cfg.replications);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t r = w; r < cfg.replications; r += workers)
                    reps[r] = run_replication(model, policy, space, cfg, initial, r);
            });
        }
    }

    // Deterministic reduction in replication order.
    SimReport report;
    std::vector<std::uint64_t> ages;
    std::vector<std::vector<std::uint64_t>> visits(model.n_states);
    std::vector<std::uint64_t> beliefs(space.size(), 0);
    for (auto& rep : reps) {
        report.rep_reward.push_back(rep.reward);
        report.rep_cost.push_back(rep.cost);
        if (ages.size() < rep.age_counts.size()) ages.resize(rep.age_counts.size(), 0);
        for (std::size_t k = 0; k < rep.age_counts.size(); ++k) ages[k] += rep.age_counts[k];
        for (std::size_t s = 0; s < model.n_states; ++s) {
            auto& dst = visits[s];
            const auto& src = rep.visit_counts[s];
            if (dst.size() < src.size()) dst.resize(src.size(), 0);
            for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
        }
        for (std::size_t b = 0; b < space.size(); ++b) beliefs[b] += rep.belief_counts[b];
    }
    report.avg_reward = summarize(report.rep_reward);
    report.avg_cost = summarize(report.rep_cost);
    const double total = double(cfg.horizon - cfg.effective_burn_in()) * double(cfg.replications);
    for (auto c : ages) report.age_histogram.push_back(double(c) / total);
    for (const auto& row : visits) {
        auto& dst = report.visit_frequency.emplace_back();
        for (auto c : row) dst.push_back(double(c) / total);
    }
    for (auto c : beliefs) report.belief_frequency.push_back(double(c) / total);
    report.trace = std::move(reps.front().trace);
    return report;
}

double empirical_age_law(const SimReport& report, double rho) {
    // TV = ½ Σ|p̂ − p|; the geometric tail beyond the histogram counts in full.
    double diff = 0.0;
    double covered = 0.0;
    double geo = rho;
    for (double p : report.age_histogram) {
        diff += std::abs(p - geo);
        covered += geo;
        geo *= 1.0 - rho;
    }
    diff += std::max(0.0, 1.0 - covered);
    return 0.5 * diff;
}

double visit_frequency_deviation(const SimReport& report, std::span<const double> gamma, double rho) {
    double worst = 0.0;
    for (std::size_t s = 0; s < report.visit_frequency.size(); ++s) {
        double geo = gamma[s] * rho;
        for (double f : report.visit_frequency[s]) {
            worst = std::max(worst, std::abs(f - geo));
            geo *= 1.0 - rho;
        }
    }
    return worst;
}

nlohmann::json report_to_json(const SimReport& report) {
    nlohmann::json j;
    j["avg_reward"] = {{"mean", report.avg_reward.mean}, {"std_error", report.avg_reward.std_error}};
    j["avg_cost"] = {{"mean", report.avg_cost.mean}, {"std_error", report.avg_cost.std_error}};
    j["replication_reward"] = report.rep_reward;
    j["replication_cost"] = report.rep_cost;
    j["age_histogram"] = report.age_histogram;
    j["visit_frequency"] = report.visit_frequency;
    j["belief_frequency"] = report.belief_frequency;
    return j;
}

void write_trace_csv(std::ostream& out, const SimReport& report) {
    out << "t,s_true,observed,age,belief_index,action,reward,cost\n";
    for (const auto& r : report.trace) {
        out << r.t << ',' << r.s_true << ',' << (r.observed ? 1 : 0) << ',' << r.age << ',' << r.belief_index << ','
            << r.action << ',' << fmt::format("{:.17g},{:.17g}", r.reward, r.cost) << '\n';
    }
}

}  // namespace iomdp
