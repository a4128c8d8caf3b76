#pragma once

#include "tabular_ail/mdp.hpp"

namespace tabular_ail {

/**
 * Parameters of the Reset Cliff benchmark.
 *
 * The last state is the absorbing state b and the last action is the expert
 * action. `expert_trajectory_count_m` only shapes the initial distribution:
 * the first |S|-2 states get mass 1/m each, state |S|-2 gets the remainder and
 * b gets none.
 */
struct ResetCliffSpec {
    std::size_t num_states = 20;
    std::size_t num_actions = 5;
    std::size_t horizon = 20;
    std::size_t expert_trajectory_count_m = 100;

    std::size_t absorbing_state() const { return num_states - 1; }
    std::size_t expert_action() const { return num_actions - 1; }
};

/// Only the expert action earns reward (+1, outside b). Any other action from
/// a regular state drops the agent into b, which absorbs under every action.
/// The expert action moves uniformly over the |S|-1 regular states.
inline TabularMdp build_reset_cliff(const ResetCliffSpec& spec) {
    if (spec.num_states < 3) throw ConfigError("reset cliff: need at least 3 states");
    if (spec.num_actions < 2) throw ConfigError("reset cliff: need at least 2 actions");
    if (spec.horizon < 1) throw ConfigError("reset cliff: horizon must be positive");
    const std::size_t S = spec.num_states, A = spec.num_actions, H = spec.horizon;
    const std::size_t m = spec.expert_trajectory_count_m;
    if (m == 0 || S - 2 > m) {
        throw ConfigError("reset cliff: m too small, (|S|-2)/m exceeds 1");
    }
    const std::size_t b = spec.absorbing_state();
    const std::size_t expert = spec.expert_action();

    MdpBuilder builder(S, A, H);
    for (std::size_t s = 0; s + 2 < S; ++s) builder.initial_dist[s] = 1.0 / static_cast<double>(m);
    builder.initial_dist[S - 2] = 1.0 - static_cast<double>(S - 2) / static_cast<double>(m);

    const double spread = 1.0 / static_cast<double>(S - 1);
    for (std::size_t h = 0; h + 1 < H; ++h) {
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                auto row = builder.transition(h, s, a);
                if (s == b || a != expert) {
                    row[b] = 1.0;
                } else {
                    for (std::size_t s2 = 0; s2 < b; ++s2) row[s2] = spread;
                }
            }
        }
    }
    auto& r = builder.reward_table();
    for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t s = 0; s < b; ++s) r(h, s, expert) = 1.0;
    }
    // uniform rows are 1/(S-1) summed S-1 times; absorb the rounding
    return builder.build(/*renormalize=*/true);
}

inline Policy reset_cliff_expert(const ResetCliffSpec& spec) {
    return Policy::constant(spec.horizon, spec.num_states, spec.num_actions, spec.expert_action());
}

namespace detail {

/// Flat Dirichlet draw via normalized exponentials.
inline void fill_flat_dirichlet(std::span<double> out, Rng& rng) {
    double total = 0.0;
    for (double& v : out) {
        v = -std::log1p(-uniform01(rng));
        total += v;
    }
    if (total <= 0.0) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
        return;
    }
    for (double& v : out) v /= total;
}

} // namespace detail

/// Seeded random MDP: flat-Dirichlet transition rows and initial distribution,
/// rewards uniform on [0, 1].
inline TabularMdp build_random_mdp(std::size_t num_states, std::size_t num_actions,
                                   std::size_t horizon, std::uint64_t seed) {
    if (num_states == 0 || num_actions == 0 || horizon == 0) {
        throw ConfigError("random MDP: dimensions must be positive");
    }
    Rng rng(seed);
    MdpBuilder b(num_states, num_actions, horizon);
    detail::fill_flat_dirichlet(b.initial_dist, rng);
    for (std::size_t h = 0; h + 1 < horizon; ++h) {
        for (std::size_t s = 0; s < num_states; ++s) {
            for (std::size_t a = 0; a < num_actions; ++a) {
                detail::fill_flat_dirichlet(b.transition(h, s, a), rng);
            }
        }
    }
    auto& r = b.reward_table();
    for (double& v : r.data()) v = uniform01(rng);
    return b.build(/*renormalize=*/true);
}

/// Random stochastic policy with flat-Dirichlet action distributions.
inline Policy random_policy(std::size_t horizon, std::size_t states, std::size_t actions, Rng& rng) {
    StateActionTable probs(horizon, states, actions);
    for (std::size_t h = 0; h < horizon; ++h) {
        for (std::size_t s = 0; s < states; ++s) detail::fill_flat_dirichlet(probs.row(h, s), rng);
    }
    return Policy(std::move(probs), /*renormalize=*/true);
}

inline Policy random_deterministic_policy(std::size_t horizon, std::size_t states,
                                          std::size_t actions, Rng& rng) {
    std::vector<std::vector<std::size_t>> choice(horizon, std::vector<std::size_t>(states));
    for (auto& layer : choice) {
        for (auto& a : layer) a = static_cast<std::size_t>(rng() % actions);
    }
    return Policy::deterministic(choice, actions);
}

/// Reward table with entries uniform on [lo, hi].
inline StateActionTable random_rewards(std::size_t horizon, std::size_t states,
                                       std::size_t actions, double lo, double hi, Rng& rng) {
    StateActionTable r(horizon, states, actions);
    for (double& v : r.data()) v = lo + (hi - lo) * uniform01(rng);
    return r;
}

} // namespace tabular_ail
