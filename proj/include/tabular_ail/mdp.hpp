#pragma once

#include "tabular_ail/core.hpp"

#include <optional>
#include <utility>

namespace tabular_ail {

/**
 * Finite-horizon tabular MDP.
 *
 * Transitions are stored for steps 0..H-2 only; the episode ends after the
 * action at step H-1, so the last step has no successor. Rewards are optional
 * (reward-free environments) and lie in [0, 1] when present.
 *
 * Immutable after construction. Use MdpBuilder to assemble one by hand.
 */
class TabularMdp {
public:
    TabularMdp(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
               std::vector<double> transitions, std::vector<double> initial_dist,
               std::optional<StateActionTable> rewards, bool renormalize = false)
        : states_(num_states), actions_(num_actions), horizon_(horizon),
          transitions_(std::move(transitions)), rho_(std::move(initial_dist)),
          rewards_(std::move(rewards)) {
        if (states_ == 0 || actions_ == 0 || horizon_ == 0) {
            throw ConfigError("TabularMdp: dimensions must be positive");
        }
        if (transitions_.size() != (horizon_ - 1) * states_ * actions_ * states_) {
            throw ConfigError("TabularMdp: transition tensor has wrong size");
        }
        if (rho_.size() != states_) throw ConfigError("TabularMdp: initial distribution size");
        check_distribution(rho_, renormalize, "TabularMdp initial distribution");
        const std::size_t rows = transitions_.size() / states_;
        for (std::size_t row = 0; row < rows; ++row) {
            check_distribution(std::span<double>(transitions_.data() + row * states_, states_),
                               renormalize, "TabularMdp transition row");
        }
        if (rewards_) {
            if (rewards_->horizon() != horizon_ || rewards_->num_states() != states_ ||
                rewards_->num_actions() != actions_) {
                throw ConfigError("TabularMdp: reward table shape mismatch");
            }
            for (double r : rewards_->data()) {
                if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("TabularMdp: reward outside [0,1]");
            }
        }
    }

    std::size_t num_states() const { return states_; }
    std::size_t num_actions() const { return actions_; }
    std::size_t horizon() const { return horizon_; }

    /// P_h(. | s, a) for h in [0, H-1).
    std::span<const double> transition(std::size_t h, std::size_t s, std::size_t a) const {
        return {transitions_.data() + ((h * states_ + s) * actions_ + a) * states_, states_};
    }
    const std::vector<double>& transitions() const { return transitions_; }
    const std::vector<double>& initial_distribution() const { return rho_; }
    bool has_rewards() const { return rewards_.has_value(); }
    const StateActionTable& rewards() const {
        if (!rewards_) throw ConfigError("TabularMdp: no reward function");
        return *rewards_;
    }
    const std::optional<StateActionTable>& optional_rewards() const { return rewards_; }

    /// Same dynamics with rewards replaced (or removed).
    TabularMdp with_rewards(std::optional<StateActionTable> rewards) const {
        return TabularMdp(states_, actions_, horizon_, transitions_, rho_, std::move(rewards));
    }

    friend bool operator==(const TabularMdp&, const TabularMdp&) = default;

private:
    std::size_t states_;
    std::size_t actions_;
    std::size_t horizon_;
    std::vector<double> transitions_;
    std::vector<double> rho_;
    std::optional<StateActionTable> rewards_;
};

/// Mutable staging area for a TabularMdp. Starts with all-zero transitions and
/// initial distribution.
struct MdpBuilder {
    std::size_t num_states;
    std::size_t num_actions;
    std::size_t horizon;
    std::vector<double> transitions;
    std::vector<double> initial_dist;
    std::optional<StateActionTable> rewards;

    MdpBuilder(std::size_t states, std::size_t actions, std::size_t h)
        : num_states(states), num_actions(actions), horizon(h),
          transitions(h == 0 ? 0 : (h - 1) * states * actions * states, 0.0),
          initial_dist(states, 0.0) {}

    std::span<double> transition(std::size_t h, std::size_t s, std::size_t a) {
        return {transitions.data() + ((h * num_states + s) * num_actions + a) * num_states,
                num_states};
    }

    StateActionTable& reward_table() {
        if (!rewards) rewards.emplace(horizon, num_states, num_actions, 0.0);
        return *rewards;
    }

    TabularMdp build(bool renormalize = false) const {
        return TabularMdp(num_states, num_actions, horizon, transitions, initial_dist, rewards,
                          renormalize);
    }
};

/// Non-stationary stochastic policy pi_h(a|s).
class Policy {
public:
    Policy() = default;
    explicit Policy(StateActionTable probs, bool renormalize = false) : probs_(std::move(probs)) {
        for (std::size_t h = 0; h < probs_.horizon(); ++h) {
            for (std::size_t s = 0; s < probs_.num_states(); ++s) {
                check_distribution(probs_.row(h, s), renormalize, "Policy action distribution");
            }
        }
    }

    static Policy uniform(std::size_t horizon, std::size_t states, std::size_t actions) {
        return Policy(StateActionTable(horizon, states, actions, 1.0 / static_cast<double>(actions)));
    }

    /// actions[h][s] is the chosen action.
    static Policy deterministic(const std::vector<std::vector<std::size_t>>& actions,
                                std::size_t num_actions) {
        const std::size_t horizon = actions.size();
        const std::size_t states = horizon == 0 ? 0 : actions.front().size();
        StateActionTable probs(horizon, states, num_actions, 0.0);
        for (std::size_t h = 0; h < horizon; ++h) {
            if (actions[h].size() != states) throw ConfigError("Policy::deterministic: ragged input");
            for (std::size_t s = 0; s < states; ++s) {
                if (actions[h][s] >= num_actions) {
                    throw ConfigError("Policy::deterministic: action out of range");
                }
                probs(h, s, actions[h][s]) = 1.0;
            }
        }
        return Policy(std::move(probs));
    }

    /// Every (h, s) plays `action`.
    static Policy constant(std::size_t horizon, std::size_t states, std::size_t actions,
                           std::size_t action) {
        return deterministic(std::vector<std::vector<std::size_t>>(
                                 horizon, std::vector<std::size_t>(states, action)),
                             actions);
    }

    std::size_t horizon() const { return probs_.horizon(); }
    std::size_t num_states() const { return probs_.num_states(); }
    std::size_t num_actions() const { return probs_.num_actions(); }

    double operator()(std::size_t h, std::size_t s, std::size_t a) const { return probs_(h, s, a); }
    std::span<const double> row(std::size_t h, std::size_t s) const { return probs_.row(h, s); }
    const StateActionTable& table() const { return probs_; }

    bool is_deterministic() const {
        return std::all_of(probs_.data().begin(), probs_.data().end(),
                           [](double p) { return p == 0.0 || p == 1.0; });
    }
    /// Chosen action of a deterministic row (argmax otherwise).
    std::size_t action(std::size_t h, std::size_t s) const {
        auto r = row(h, s);
        return static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
    }

    friend bool operator==(const Policy&, const Policy&) = default;

private:
    StateActionTable probs_;
};

/// d_h(s, a). True occupancies have unit mass per step; estimator outputs are
/// flagged with `is_estimate` and may not.
class OccupancyMeasure {
public:
    OccupancyMeasure() = default;
    explicit OccupancyMeasure(StateActionTable values, bool is_estimate = false)
        : values_(std::move(values)), is_estimate_(is_estimate) {}

    std::size_t horizon() const { return values_.horizon(); }
    std::size_t num_states() const { return values_.num_states(); }
    std::size_t num_actions() const { return values_.num_actions(); }
    double operator()(std::size_t h, std::size_t s, std::size_t a) const { return values_(h, s, a); }
    const StateActionTable& table() const { return values_; }
    StateActionTable& table() { return values_; }
    bool is_estimate() const { return is_estimate_; }

    /// d_h(s) = sum_a d_h(s, a).
    double state_mass(std::size_t h, std::size_t s) const {
        auto r = values_.row(h, s);
        return std::accumulate(r.begin(), r.end(), 0.0);
    }

private:
    StateActionTable values_;
    bool is_estimate_ = false;
};

/// Adversarial reward iterate w with every entry in [-1, 1].
class RewardWeights {
public:
    RewardWeights() = default;
    explicit RewardWeights(StateActionTable values) : values_(std::move(values)) {
        for (double v : values_.data()) {
            if (!(v >= -1.0 && v <= 1.0)) throw ConfigError("RewardWeights: entry outside [-1,1]");
        }
    }
    static RewardWeights zeros(std::size_t horizon, std::size_t states, std::size_t actions) {
        return RewardWeights(StateActionTable(horizon, states, actions, 0.0));
    }
    const StateActionTable& table() const { return values_; }
    double operator()(std::size_t h, std::size_t s, std::size_t a) const { return values_(h, s, a); }

private:
    StateActionTable values_;
};

struct Step {
    std::size_t state;
    std::size_t action;
    friend bool operator==(const Step&, const Step&) = default;
};

/// Length-H sequence of (state, action) pairs.
struct Trajectory {
    std::vector<Step> steps;
    std::size_t length() const { return steps.size(); }
    const Step& operator[](std::size_t h) const { return steps[h]; }
    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

using TrajectoryDataset = std::vector<Trajectory>;

inline void require_policy_matches(const TabularMdp& mdp, const Policy& policy) {
    if (policy.horizon() != mdp.horizon() || policy.num_states() != mdp.num_states() ||
        policy.num_actions() != mdp.num_actions()) {
        throw ConfigError("policy dimensions do not match the MDP");
    }
}

inline void require_rewards_match(const TabularMdp& mdp, const StateActionTable& rewards) {
    if (rewards.horizon() != mdp.horizon() || rewards.num_states() != mdp.num_states() ||
        rewards.num_actions() != mdp.num_actions()) {
        throw ConfigError("reward table dimensions do not match the MDP");
    }
}

/// Forward flow: d_0(s,a) = rho(s) pi_0(a|s),
/// d_h(s,a) = [sum_{s',a'} d_{h-1}(s',a') P_{h-1}(s|s',a')] pi_h(a|s).
inline OccupancyMeasure compute_occupancy(const TabularMdp& mdp, const Policy& policy) {
    require_policy_matches(mdp, policy);
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    StateActionTable d(H, S, A, 0.0);
    std::vector<double> state_mass(mdp.initial_distribution());
    for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t s = 0; s < S; ++s) {
            if (state_mass[s] == 0.0) continue;
            for (std::size_t a = 0; a < A; ++a) d(h, s, a) = state_mass[s] * policy(h, s, a);
        }
        if (h + 1 == H) break;
        std::fill(state_mass.begin(), state_mass.end(), 0.0);
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                const double mass = d(h, s, a);
                if (mass == 0.0) continue;
                auto next = mdp.transition(h, s, a);
                for (std::size_t s2 = 0; s2 < S; ++s2) state_mass[s2] += mass * next[s2];
            }
        }
    }
    return OccupancyMeasure(std::move(d));
}

/// Dual form of the value: sum_h sum_{s,a} d_h(s,a) r_h(s,a).
inline double policy_value(const OccupancyMeasure& occupancy, const StateActionTable& rewards) {
    require_same_shape(occupancy.table(), rewards, "policy_value");
    const auto& d = occupancy.table().data();
    const auto& r = rewards.data();
    double value = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) value += d[i] * r[i];
    return value;
}

/// Per-step state values V_h(s) of `policy` by backward recursion.
inline std::vector<std::vector<double>> state_values(const TabularMdp& mdp, const Policy& policy,
                                                     const StateActionTable& rewards) {
    require_policy_matches(mdp, policy);
    require_rewards_match(mdp, rewards);
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    std::vector<std::vector<double>> values(H + 1, std::vector<double>(S, 0.0));
    for (std::size_t h = H; h-- > 0;) {
        for (std::size_t s = 0; s < S; ++s) {
            double v = 0.0;
            for (std::size_t a = 0; a < A; ++a) {
                const double p = policy(h, s, a);
                if (p == 0.0) continue;
                double q = rewards(h, s, a);
                if (h + 1 < H) {
                    auto next = mdp.transition(h, s, a);
                    for (std::size_t s2 = 0; s2 < S; ++s2) q += next[s2] * values[h + 1][s2];
                }
                v += p * q;
            }
            values[h][s] = v;
        }
    }
    values.pop_back();
    return values;
}

/// Expected return under rho by backward recursion.
inline double evaluate_policy_direct(const TabularMdp& mdp, const Policy& policy,
                                     const StateActionTable& rewards) {
    const auto values = state_values(mdp, policy, rewards);
    const auto& rho = mdp.initial_distribution();
    double v = 0.0;
    for (std::size_t s = 0; s < mdp.num_states(); ++s) v += rho[s] * values[0][s];
    return v;
}

inline double evaluate_policy_direct(const TabularMdp& mdp, const Policy& policy) {
    return evaluate_policy_direct(mdp, policy, mdp.rewards());
}

struct PlanningResult {
    Policy policy;
    double value;
};

/// Exact finite-horizon dynamic programming. Rewards may be any reals.
/// Ties go to the lowest action index.
inline PlanningResult value_iteration(const TabularMdp& mdp, const StateActionTable& rewards) {
    require_rewards_match(mdp, rewards);
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    std::vector<std::vector<std::size_t>> greedy(H, std::vector<std::size_t>(S, 0));
    std::vector<double> next_values(S, 0.0), values(S, 0.0);
    for (std::size_t h = H; h-- > 0;) {
        for (std::size_t s = 0; s < S; ++s) {
            double best = 0.0;
            std::size_t best_action = 0;
            for (std::size_t a = 0; a < A; ++a) {
                double q = rewards(h, s, a);
                if (h + 1 < H) {
                    auto next = mdp.transition(h, s, a);
                    for (std::size_t s2 = 0; s2 < S; ++s2) q += next[s2] * next_values[s2];
                }
                if (a == 0 || q > best) {
                    best = q;
                    best_action = a;
                }
            }
            values[s] = best;
            greedy[h][s] = best_action;
        }
        std::swap(values, next_values);
    }
    const auto& rho = mdp.initial_distribution();
    double value = 0.0;
    for (std::size_t s = 0; s < S; ++s) value += rho[s] * next_values[s];
    return {Policy::deterministic(greedy, A), value};
}

inline PlanningResult value_iteration(const TabularMdp& mdp) {
    return value_iteration(mdp, mdp.rewards());
}

/// One episode: s_0 ~ rho, a_h ~ pi_h(.|s_h), s_{h+1} ~ P_h(.|s_h,a_h); stops after a_{H-1}.
inline Trajectory rollout(const TabularMdp& mdp, const Policy& policy, Rng& rng) {
    Trajectory tr;
    tr.steps.reserve(mdp.horizon());
    std::size_t s = sample_index(mdp.initial_distribution(), rng);
    for (std::size_t h = 0; h < mdp.horizon(); ++h) {
        const std::size_t a = sample_index(policy.row(h, s), rng);
        tr.steps.push_back({s, a});
        if (h + 1 < mdp.horizon()) s = sample_index(mdp.transition(h, s, a), rng);
    }
    return tr;
}

inline TrajectoryDataset sample_trajectories(const TabularMdp& mdp, const Policy& policy,
                                             std::size_t count, Rng& rng) {
    require_policy_matches(mdp, policy);
    TrajectoryDataset data;
    data.reserve(count);
    for (std::size_t i = 0; i < count; ++i) data.push_back(rollout(mdp, policy, rng));
    return data;
}

inline TrajectoryDataset sample_trajectories(const TabularMdp& mdp, const Policy& policy,
                                             std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    return sample_trajectories(mdp, policy, count, rng);
}

/// sum_h ||a_h - b_h||_1.
inline double l1_occupancy_distance(const OccupancyMeasure& a, const OccupancyMeasure& b) {
    require_same_shape(a.table(), b.table(), "l1_occupancy_distance");
    const auto& x = a.table().data();
    const auto& y = b.table().data();
    double dist = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dist += std::abs(x[i] - y[i]);
    return dist;
}

} // namespace tabular_ail
