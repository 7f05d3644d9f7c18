#include "iomdp/belief.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <ostream>

#include <fmt/format.h>

#include "iomdp/errors.hpp"

namespace iomdp {

namespace {

/// Index of beliefs keyed by a fixed linear projection. Two beliefs within
/// `tol` in ∞-norm project to keys within tol·Σ|w|, so a range scan finds
/// every candidate.
class BeliefIndex {
public:
    BeliefIndex(std::size_t dim, double tol) : weights_(dim), tol_(tol) {
        for (std::size_t i = 0; i < dim; ++i) weights_[i] = 1.0 / (double(i) + 1.6180339887);
        for (double w : weights_) weight_sum_ += w;
    }

    std::optional<std::size_t> find(const Belief& b, const std::vector<Belief>& store) const {
        const double key = project(b);
        const double radius = tol_ * weight_sum_ + 1e-15;
        for (auto it = keys_.lower_bound(key - radius); it != keys_.end() && it->first <= key + radius; ++it) {
            if (max_abs_diff(store[it->second], b) <= tol_) return it->second;
        }
        return std::nullopt;
    }

    void insert(const Belief& b, std::size_t idx) { keys_.emplace(project(b), idx); }

private:
    double project(const Belief& b) const {
        double s = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) s += weights_[i] * b[i];
        return s;
    }

    std::vector<double> weights_;
    double weight_sum_ = 0.0;
    double tol_;
    std::multimap<double, std::size_t> keys_;
};

Belief unit_vector(std::size_t n, std::size_t i) {
    Belief e(n, 0.0);
    e[i] = 1.0;
    return e;
}

Matrix lift(const BeliefSpace& space, const Matrix& table) {
    Matrix out(space.size(), table.cols());
    for (std::size_t b = 0; b < space.size(); ++b) {
        const auto v = left_multiply(space.beliefs[b], table);
        std::copy(v.begin(), v.end(), out.row(b).begin());
    }
    return out;
}

}  // namespace

Belief belief_update(std::span<const double> b, std::size_t action, const FiniteMdp& model) {
    Belief next = left_multiply(b, model.transitions.at(action));
    double sum = 0.0;
    for (auto& v : next) {
        if (v < 0.0) v = 0.0;
        sum += v;
    }
    for (auto& v : next) v /= sum;
    return next;
}

std::string to_string(BoundaryMode mode) {
    switch (mode) {
        case BoundaryMode::Unset: return "unset";
        case BoundaryMode::Drop: return "drop";
        case BoundaryMode::SelfLoop: return "selfloop";
        case BoundaryMode::ForceObs: return "forceobs";
    }
    return "unset";
}

BoundaryMode parse_boundary_mode(const std::string& text) {
    if (text == "drop") return BoundaryMode::Drop;
    if (text == "selfloop") return BoundaryMode::SelfLoop;
    if (text == "forceobs") return BoundaryMode::ForceObs;
    throw Error(ErrorCode::InvalidInput, "unknown boundary mode '" + text + "'");
}

std::optional<std::size_t> BeliefSpace::index_of(std::size_t state, std::size_t age) const {
    std::optional<std::size_t> idx = state;
    for (std::size_t k = 0; k < age && idx; ++k) idx = successor[*idx][0];
    return idx;
}

BeliefSpace build_belief_space(const FiniteMdp& model, std::size_t depth_limit, BeliefSpaceOptions options) {
    check_model_shape(model);
    BeliefSpace space;
    space.n_states = model.n_states;
    space.n_actions = model.n_actions;
    space.depth_limit = depth_limit;
    space.dedup_tol = options.dedup_tol;
    space.action_independent = is_action_independent(model);

    const std::size_t n = model.n_states;
    if (n > options.max_beliefs) throw Error(ErrorCode::ExplosionGuard, "more pure states than the belief cap");
    BeliefIndex index(n, options.dedup_tol);
    for (std::size_t i = 0; i < n; ++i) {
        space.beliefs.push_back(unit_vector(n, i));
        space.origins.push_back({i, 0, {}});
        index.insert(space.beliefs.back(), i);
    }
    space.successor.assign(n, std::vector<std::optional<std::size_t>>(model.n_actions));

    // Action-independent models need only one successor per belief.
    const std::size_t branching = space.action_independent ? 1 : model.n_actions;

    std::deque<std::size_t> frontier;
    for (std::size_t i = 0; i < n; ++i) frontier.push_back(i);
    std::vector<std::size_t> boundary;

    while (!frontier.empty()) {
        const std::size_t b = frontier.front();
        frontier.pop_front();
        if (space.origins[b].age >= depth_limit) {
            boundary.push_back(b);
            continue;
        }
        for (std::size_t a = 0; a < branching; ++a) {
            Belief next = belief_update(space.beliefs[b], a, model);
            std::size_t target;
            if (auto hit = index.find(next, space.beliefs)) {
                target = *hit;
            } else {
                if (space.beliefs.size() >= options.max_beliefs) {
                    throw Error(ErrorCode::ExplosionGuard,
                                fmt::format("belief space exceeds {} entries at depth {}", options.max_beliefs,
                                            space.origins[b].age + 1));
                }
                target = space.beliefs.size();
                BeliefOrigin origin = space.origins[b];
                origin.age += 1;
                if (!space.action_independent) origin.actions.push_back(static_cast<std::uint32_t>(a));
                space.beliefs.push_back(std::move(next));
                space.origins.push_back(std::move(origin));
                space.successor.emplace_back(model.n_actions);
                index.insert(space.beliefs.back(), target);
                frontier.push_back(target);
            }
            space.successor[b][a] = target;
        }
    }

    // Depth-K beliefs keep a successor only if it already exists in the space.
    for (std::size_t b : boundary) {
        for (std::size_t a = 0; a < branching; ++a) {
            space.successor[b][a] = index.find(belief_update(space.beliefs[b], a, model), space.beliefs);
        }
    }
    if (space.action_independent) {
        for (auto& row : space.successor)
            for (std::size_t a = 1; a < row.size(); ++a) row[a] = row[0];
    }
    return space;
}

double BeliefKernel::row_mass(std::size_t b, std::size_t a) const {
    double s = 0.0;
    for (const auto& t : row(b, a)) s += t.prob;
    return s;
}

BeliefKernel build_kernel(const BeliefSpace& space, const FiniteMdp& model, BoundaryMode mode) {
    if (space.n_states != model.n_states || space.n_actions != model.n_actions) {
        throw Error(ErrorCode::DimensionMismatch, "belief space was built from a different model");
    }
    const double rho = model.rho;
    BeliefKernel k;
    k.n_beliefs = space.size();
    k.n_actions = model.n_actions;
    k.n_pure = model.n_states;
    k.rho = rho;
    k.mode = mode;
    k.rows.resize(k.n_beliefs * k.n_actions);
    k.next_state.resize(k.rows.size());
    k.truncated_flags.assign(k.rows.size(), 0);

    for (std::size_t b = 0; b < k.n_beliefs; ++b) {
        for (std::size_t a = 0; a < k.n_actions; ++a) {
            const std::size_t slot = k.slot(b, a);
            const Belief next = belief_update(space.beliefs[b], a, model);
            k.next_state[slot] = next;
            const auto succ = space.successor[b][a];
            const bool cut = !succ.has_value();
            if (cut && mode == BoundaryMode::Unset) {
                throw Error(ErrorCode::ModeRequired, "beliefs at the truncation depth need a boundary mode");
            }
            k.truncated_flags[slot] = cut ? 1 : 0;

            const double obs_scale = (cut && mode == BoundaryMode::ForceObs) ? 1.0 : rho;
            std::map<std::size_t, double> mass;
            for (std::size_t i = 0; i < next.size(); ++i)
                if (next[i] > 0.0) mass[i] += obs_scale * next[i];
            if (rho < 1.0) {
                if (succ) {
                    mass[*succ] += 1.0 - rho;
                } else if (mode == BoundaryMode::SelfLoop) {
                    mass[b] += 1.0 - rho;
                }
            }
            auto& row = k.rows[slot];
            row.reserve(mass.size());
            for (const auto& [to, p] : mass) row.push_back({to, p});
        }
    }
    return k;
}

Matrix lift_reward(const BeliefSpace& space, const FiniteMdp& model) { return lift(space, model.reward); }
Matrix lift_cost(const BeliefSpace& space, const FiniteMdp& model) { return lift(space, model.cost); }

void write_belief_space_csv(std::ostream& out, const BeliefSpace& space) {
    out << "index,origin_state,age_or_action_seq";
    for (std::size_t i = 0; i < space.n_states; ++i) out << ",prob_" << i;
    out << '\n';
    for (std::size_t b = 0; b < space.size(); ++b) {
        const auto& o = space.origins[b];
        out << b << ',' << o.state << ',';
        if (space.action_independent) {
            out << o.age;
        } else {
            for (std::size_t k = 0; k < o.actions.size(); ++k) out << (k ? "." : "") << o.actions[k];
        }
        for (double p : space.beliefs[b]) out << ',' << fmt::format("{:.17g}", p);
        out << '\n';
    }
}

void write_kernel_csv(std::ostream& out, const BeliefKernel& kernel) {
    out << "from,action,to,prob\n";
    for (std::size_t b = 0; b < kernel.n_beliefs; ++b)
        for (std::size_t a = 0; a < kernel.n_actions; ++a)
            for (const auto& t : kernel.row(b, a)) out << b << ',' << a << ',' << t.to << ',' << fmt::format("{:.17g}", t.prob) << '\n';
}

}  // namespace iomdp
