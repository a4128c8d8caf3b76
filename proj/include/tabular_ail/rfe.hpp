#pragma once

#include "tabular_ail/environment.hpp"
#include "tabular_ail/envs.hpp"
#include "tabular_ail/mdp_io.hpp"

#include <numbers>

namespace tabular_ail {

/**
 * Count-based transition model.
 *
 * visit_count(h,s,a) counts occurrences of (s,a) at step h for h in [0,H);
 * transition_count(h,s,a,s') is kept for h in [0,H-1). The empirical kernel is
 * the count ratio on visited pairs and uniform on unvisited ones.
 *
 * States may be abstract: `record` accepts a step-indexed state map.
 */
class EmpiricalModel {
public:
    EmpiricalModel(std::size_t num_states, std::size_t num_actions, std::size_t horizon)
        : states_(num_states), actions_(num_actions), horizon_(horizon),
          visits_(horizon * num_states * num_actions, 0),
          transitions_(horizon == 0 ? 0 : (horizon - 1) * num_states * num_actions * num_states, 0) {
        if (num_states == 0 || num_actions == 0 || horizon == 0) {
            throw ConfigError("EmpiricalModel: dimensions must be positive");
        }
    }

    std::size_t num_states() const { return states_; }
    std::size_t num_actions() const { return actions_; }
    std::size_t horizon() const { return horizon_; }

    std::uint64_t visit_count(std::size_t h, std::size_t s, std::size_t a) const {
        return visits_[sa_index(h, s, a)];
    }
    std::uint64_t transition_count(std::size_t h, std::size_t s, std::size_t a, std::size_t s2) const {
        return transitions_[sa_index(h, s, a) * states_ + s2];
    }
    std::span<const std::uint64_t> transition_counts(std::size_t h, std::size_t s, std::size_t a) const {
        return {transitions_.data() + sa_index(h, s, a) * states_, states_};
    }

    /// Adds one trajectory; `map(h, s)` sends a concrete state to this model's state space.
    template <class StateMap>
    void record(const Trajectory& tr, StateMap&& map) {
        if (tr.length() != horizon_) throw ConfigError("EmpiricalModel: trajectory length != horizon");
        for (std::size_t h = 0; h < horizon_; ++h) {
            const std::size_t x = map(h, tr[h].state);
            const std::size_t a = tr[h].action;
            if (x >= states_ || a >= actions_) throw ConfigError("EmpiricalModel: index out of range");
            ++visits_[sa_index(h, x, a)];
            if (h + 1 < horizon_) {
                const std::size_t x2 = map(h + 1, tr[h + 1].state);
                if (x2 >= states_) throw ConfigError("EmpiricalModel: index out of range");
                ++transitions_[sa_index(h, x, a) * states_ + x2];
            }
        }
    }

    void record(const Trajectory& tr) {
        record(tr, [](std::size_t, std::size_t s) { return s; });
    }

    /// P-hat_h(s'|s,a); uniform 1/|S| when (h,s,a) is unvisited.
    double p_hat(std::size_t h, std::size_t s, std::size_t a, std::size_t s2) const {
        const auto n = visit_count(h, s, a);
        if (n == 0) return 1.0 / static_cast<double>(states_);
        return static_cast<double>(transition_count(h, s, a, s2)) / static_cast<double>(n);
    }

    /// Tabular MDP with kernel P-hat, the given initial distribution and no rewards.
    TabularMdp to_mdp(const std::vector<double>& rho) const {
        MdpBuilder b(states_, actions_, horizon_);
        b.initial_dist = rho;
        for (std::size_t h = 0; h + 1 < horizon_; ++h) {
            for (std::size_t s = 0; s < states_; ++s) {
                for (std::size_t a = 0; a < actions_; ++a) {
                    auto row = b.transition(h, s, a);
                    for (std::size_t s2 = 0; s2 < states_; ++s2) row[s2] = p_hat(h, s, a, s2);
                }
            }
        }
        // count ratios can miss 1 by an ulp; rescale
        return b.build(/*renormalize=*/true);
    }

    /// Flat count arrays in (h,s,a) and (h,s,a,s') order.
    std::span<const std::uint64_t> visit_counts() const { return visits_; }
    std::span<const std::uint64_t> all_transition_counts() const { return transitions_; }

    static EmpiricalModel from_counts(std::size_t num_states, std::size_t num_actions, std::size_t horizon,
                                      std::vector<std::uint64_t> visits, std::vector<std::uint64_t> transitions) {
        EmpiricalModel m(num_states, num_actions, horizon);
        if (visits.size() != m.visits_.size() || transitions.size() != m.transitions_.size()) {
            throw ConfigError("EmpiricalModel: count arrays have the wrong size");
        }
        m.visits_ = std::move(visits);
        m.transitions_ = std::move(transitions);
        for (std::size_t h = 0; h + 1 < horizon; ++h) {
            for (std::size_t s = 0; s < num_states; ++s) {
                for (std::size_t a = 0; a < num_actions; ++a) {
                    const auto row = m.transition_counts(h, s, a);
                    if (std::accumulate(row.begin(), row.end(), std::uint64_t{0}) != m.visit_count(h, s, a)) {
                        throw ConfigError("EmpiricalModel: transition counts do not sum to visit counts");
                    }
                }
            }
        }
        return m;
    }

    friend bool operator==(const EmpiricalModel&, const EmpiricalModel&) = default;

private:
    std::size_t sa_index(std::size_t h, std::size_t s, std::size_t a) const {
        return (h * states_ + s) * actions_ + a;
    }

    std::size_t states_;
    std::size_t actions_;
    std::size_t horizon_;
    std::vector<std::uint64_t> visits_;
    std::vector<std::uint64_t> transitions_;
};

/// beta(n, delta) = log(3|S||A|H/delta) + |S| log(8e(n+1)).
inline double rfe_beta(std::uint64_t n, double delta, std::size_t num_states, std::size_t num_actions,
                       std::size_t horizon) {
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("rfe_beta: delta must lie in (0,1)");
    const double S = static_cast<double>(num_states);
    return std::log(3.0 * S * static_cast<double>(num_actions) * static_cast<double>(horizon) / delta) +
           S * std::log(8.0 * std::numbers::e * (static_cast<double>(n) + 1.0));
}

/// Exploration-bonus constants. Unset fields take the theoretical values
/// 15 H^2 and 1 + 1/H.
struct BonusConstants {
    std::optional<double> scale;
    std::optional<double> continuation;

    double scale_for(std::size_t horizon) const {
        const double H = static_cast<double>(horizon);
        return scale.value_or(15.0 * H * H);
    }
    double continuation_for(std::size_t horizon) const {
        return continuation.value_or(1.0 + 1.0 / static_cast<double>(horizon));
    }
};

/// W_h(s,a) table of the exploration bonus, entries in [0, H].
struct RfeBonus {
    StateActionTable w_table;
};

/**
 * Backward recursion from W_H = 0:
 *   W_h(s,a) = min(H, scale * beta(n,delta)/n + continuation * sum_s' P-hat(s'|s,a) max_a' W_{h+1}(s',a')).
 * Unvisited pairs get W = H directly.
 */
inline RfeBonus compute_bonus(const EmpiricalModel& model, double delta,
                              const BonusConstants& constants = {}) {
    const std::size_t S = model.num_states(), A = model.num_actions(), H = model.horizon();
    const double cap = static_cast<double>(H);
    const double scale = constants.scale_for(H);
    const double continuation = constants.continuation_for(H);
    StateActionTable w(H, S, A, 0.0);
    std::vector<double> next_max(S, 0.0);
    for (std::size_t h = H; h-- > 0;) {
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                const auto n = model.visit_count(h, s, a);
                if (n == 0) {
                    w(h, s, a) = cap;
                    continue;
                }
                double future = 0.0;
                if (h + 1 < H) {
                    auto counts = model.transition_counts(h, s, a);
                    for (std::size_t s2 = 0; s2 < S; ++s2) {
                        if (counts[s2] != 0) future += static_cast<double>(counts[s2]) * next_max[s2];
                    }
                    future /= static_cast<double>(n);
                }
                const double bonus = scale * rfe_beta(n, delta, S, A, H) / static_cast<double>(n);
                w(h, s, a) = std::min(cap, bonus + continuation * future);
            }
        }
        for (std::size_t s = 0; s < S; ++s) {
            auto r = w.row(h, s);
            next_max[s] = *std::max_element(r.begin(), r.end());
        }
    }
    return {std::move(w)};
}

/**
 * pi_h(s) = argmax_a W_h(s,a). Ties go to the least visited action, then the
 * lowest index; while every entry is clipped at H this cycles through actions
 * instead of replaying action 0.
 */
inline Policy greedy_policy(const StateActionTable& w, const EmpiricalModel& model) {
    std::vector<std::vector<std::size_t>> choice(w.horizon(), std::vector<std::size_t>(w.num_states()));
    for (std::size_t h = 0; h < w.horizon(); ++h) {
        for (std::size_t s = 0; s < w.num_states(); ++s) {
            std::size_t best = 0;
            for (std::size_t a = 1; a < w.num_actions(); ++a) {
                if (w(h, s, a) > w(h, s, best) ||
                    (w(h, s, a) == w(h, s, best) && model.visit_count(h, s, a) < model.visit_count(h, s, best))) {
                    best = a;
                }
            }
            choice[h][s] = best;
        }
    }
    return Policy::deterministic(choice, w.num_actions());
}

/// sum_s rho(s) [3e sqrt(W_0(s, pi(s))) + W_0(s, pi(s))] for the greedy pi.
inline double stopping_statistic(const RfeBonus& bonus, std::span<const double> rho) {
    const auto& w = bonus.w_table;
    double total = 0.0;
    for (std::size_t s = 0; s < w.num_states(); ++s) {
        if (rho[s] == 0.0) continue;
        auto r = w.row(0, s);
        const double top = *std::max_element(r.begin(), r.end());
        total += rho[s] * (3.0 * std::numbers::e * std::sqrt(top) + top);
    }
    return total;
}

struct RfeConfig {
    double epsilon = 0.5;
    double delta = 0.05;
    std::size_t max_episodes = 1'000'000;
    BonusConstants constants;

    void validate() const {
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("RF-Express: epsilon must lie in (0,1)");
        if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("RF-Express: delta must lie in (0,1)");
    }
};

struct RfeResult {
    EmpiricalModel model;
    std::size_t episodes_used = 0;
    /// The episode cap was reached before the stopping rule fired.
    bool stopped_early = false;
    double final_statistic = 0.0;
};

namespace detail {

/// Shared exploration loop. `num_model_states` and `map` define the state
/// space the model lives in; `lift(policy)` turns a model-space policy into
/// one that runs on the concrete environment.
template <class StateMap, class Lift>
RfeResult rf_express_loop(SamplingEnv& env, std::size_t num_model_states,
                          const std::vector<double>& model_rho, StateMap map, Lift lift,
                          const RfeConfig& cfg, Rng& rng) {
    cfg.validate();
    RfeResult result{EmpiricalModel(num_model_states, env.num_actions(), env.horizon())};
    for (;;) {
        const RfeBonus bonus = compute_bonus(result.model, cfg.delta, cfg.constants);
        const Policy explore = greedy_policy(bonus.w_table, result.model);
        result.final_statistic = stopping_statistic(bonus, model_rho);
        if (result.final_statistic <= cfg.epsilon / 2.0) break;
        if (result.episodes_used >= cfg.max_episodes) {
            result.stopped_early = true;
            break;
        }
        const Trajectory tr = env.rollout(lift(explore), rng);
        ++result.episodes_used;
        result.model.record(tr, map);
    }
    return result;
}

} // namespace detail

/**
 * RF-Express. Each round rebuilds the bonus from the current counts, derives
 * the greedy exploration policy, checks the stopping rule (in expectation
 * over the initial distribution), and otherwise rolls the policy out once.
 */
inline RfeResult rf_express(SamplingEnv& env, const RfeConfig& cfg, Rng& rng) {
    return detail::rf_express_loop(
        env, env.num_states(), env.initial_distribution(),
        [](std::size_t, std::size_t s) { return s; }, [](const Policy& p) -> const Policy& { return p; },
        cfg, rng);
}

inline RfeResult rf_express(const TabularMdp& mdp, const RfeConfig& cfg, std::uint64_t seed) {
    SamplingEnv env(mdp);
    Rng rng(seed);
    return rf_express(env, cfg, rng);
}

/// max over random (policy, reward in [-1,1]) probes of |V^{pi,P,r} - V^{pi,P-hat,r}|.
/// A lower bound on the supremum over all pairs.
inline double uniform_evaluation_error(const TabularMdp& mdp, const TabularMdp& estimate,
                                       std::size_t probe_count, Rng& rng) {
    if (probe_count == 0) throw ConfigError("uniform_evaluation_error: probe_count must be >= 1");
    if (estimate.num_states() != mdp.num_states() || estimate.num_actions() != mdp.num_actions() ||
        estimate.horizon() != mdp.horizon()) {
        throw ConfigError("uniform_evaluation_error: model dimensions differ from the MDP");
    }
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    double worst = 0.0;
    for (std::size_t i = 0; i < probe_count; ++i) {
        const Policy pi = random_policy(H, S, A, rng);
        const StateActionTable r = random_rewards(H, S, A, -1.0, 1.0, rng);
        worst = std::max(worst, std::abs(evaluate_policy_direct(mdp, pi, r) -
                                         evaluate_policy_direct(estimate, pi, r)));
    }
    return worst;
}

inline double uniform_evaluation_error(const TabularMdp& mdp, const EmpiricalModel& model,
                                       std::size_t probe_count, Rng& rng) {
    if (model.num_states() != mdp.num_states() || model.num_actions() != mdp.num_actions() ||
        model.horizon() != mdp.horizon()) {
        throw ConfigError("uniform_evaluation_error: model dimensions differ from the MDP");
    }
    return uniform_evaluation_error(mdp, model.to_mdp(mdp.initial_distribution()), probe_count, rng);
}

inline double uniform_evaluation_error(const TabularMdp& mdp, const EmpiricalModel& model,
                                       std::size_t probe_count, std::uint64_t seed) {
    Rng rng(seed);
    return uniform_evaluation_error(mdp, model, probe_count, rng);
}

/// MDP JSON of the P-hat model plus a "counts" section with flat visit and transition counts.
inline json empirical_model_to_json(const EmpiricalModel& model, const std::vector<double>& rho) {
    json j = mdp_to_json(model.to_mdp(rho));
    j["counts"] = {{"visits", model.visit_counts()}, {"transitions", model.all_transition_counts()}};
    return j;
}

inline EmpiricalModel empirical_model_from_json(const json& j) {
    try {
        const auto& c = j.at("counts");
        return EmpiricalModel::from_counts(j.at("num_states").get<std::size_t>(), j.at("num_actions").get<std::size_t>(),
                                           j.at("horizon").get<std::size_t>(),
                                           c.at("visits").get<std::vector<std::uint64_t>>(),
                                           c.at("transitions").get<std::vector<std::uint64_t>>());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("empirical model JSON: ") + e.what());
    }
}

} // namespace tabular_ail
