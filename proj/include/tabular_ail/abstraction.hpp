#pragma once

#include "tabular_ail/estimators.hpp"
#include "tabular_ail/mdp_io.hpp"
#include "tabular_ail/rfe.hpp"

namespace tabular_ail {

/// Step-indexed maps phi_h : S -> Phi onto a shared abstract space of size num_abstract.
class StateAbstraction {
public:
    StateAbstraction(std::vector<std::vector<std::size_t>> maps, std::size_t num_abstract)
        : maps_(std::move(maps)), num_abstract_(num_abstract) {
        if (maps_.empty()) throw ConfigError("StateAbstraction: no steps");
        if (num_abstract_ == 0) throw ConfigError("StateAbstraction: empty abstract space");
        const std::size_t S = maps_.front().size();
        for (const auto& m : maps_) {
            if (m.size() != S) throw ConfigError("StateAbstraction: steps disagree on |S|");
            for (std::size_t x : m) {
                if (x >= num_abstract_) throw ConfigError("StateAbstraction: abstract index out of range");
            }
        }
    }

    static StateAbstraction identity(std::size_t horizon, std::size_t num_states) {
        std::vector<std::size_t> id(num_states);
        std::iota(id.begin(), id.end(), std::size_t{0});
        return StateAbstraction(std::vector<std::vector<std::size_t>>(horizon, id), num_states);
    }

    std::size_t horizon() const { return maps_.size(); }
    std::size_t num_states() const { return maps_.front().size(); }
    std::size_t num_abstract() const { return num_abstract_; }
    std::size_t operator()(std::size_t h, std::size_t s) const { return maps_[h][s]; }
    const std::vector<std::vector<std::size_t>>& maps() const { return maps_; }

    /// Lowest concrete state of each block at step h; throws on an empty block.
    std::vector<std::size_t> representatives(std::size_t h) const {
        constexpr auto none = std::numeric_limits<std::size_t>::max();
        std::vector<std::size_t> rep(num_abstract_, none);
        for (std::size_t s = 0; s < num_states(); ++s) {
            if (rep[maps_[h][s]] == none) rep[maps_[h][s]] = s;
        }
        for (std::size_t x = 0; x < num_abstract_; ++x) {
            if (rep[x] == none) {
                throw ConfigError("StateAbstraction: abstract state " + std::to_string(x) +
                                  " has no preimage at step " + std::to_string(h));
            }
        }
        return rep;
    }

    friend bool operator==(const StateAbstraction&, const StateAbstraction&) = default;

private:
    std::vector<std::vector<std::size_t>> maps_;
    std::size_t num_abstract_;
};

inline void require_abstraction_matches(const StateAbstraction& abs, std::size_t horizon, std::size_t states) {
    if (abs.horizon() != horizon || abs.num_states() != states) {
        throw ConfigError("state abstraction dimensions do not match the MDP");
    }
}

struct BisimulationReport {
    bool ok = true;
    std::string violation;
    explicit operator bool() const { return ok; }
};

/**
 * Checks that merged states agree on rewards, on block-transition
 * probabilities (tolerance 1e-9) and on the expert action, at every step.
 * Reports the first violation found.
 */
inline BisimulationReport check_bisimulation(const TabularMdp& mdp, const Policy& expert,
                                             const StateAbstraction& abs) {
    require_abstraction_matches(abs, mdp.horizon(), mdp.num_states());
    require_policy_matches(mdp, expert);
    if (!expert.is_deterministic()) throw ConfigError("check_bisimulation: expert must be deterministic");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    const std::size_t X = abs.num_abstract();
    auto fail = [](std::string msg) { return BisimulationReport{false, std::move(msg)}; };
    auto where = [](std::size_t h, std::size_t s1, std::size_t s2) {
        return " at step " + std::to_string(h) + " between states " + std::to_string(s1) + " and " +
               std::to_string(s2);
    };

    std::vector<double> block1(X), block2(X);
    for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t s1 = 0; s1 < S; ++s1) {
            for (std::size_t s2 = s1 + 1; s2 < S; ++s2) {
                if (abs(h, s1) != abs(h, s2)) continue;
                if (mdp.has_rewards()) {
                    for (std::size_t a = 0; a < A; ++a) {
                        if (mdp.rewards()(h, s1, a) != mdp.rewards()(h, s2, a)) {
                            return fail("reward mismatch for action " + std::to_string(a) + where(h, s1, s2));
                        }
                    }
                }
                if (expert.action(h, s1) != expert.action(h, s2)) {
                    return fail("expert action mismatch" + where(h, s1, s2));
                }
                if (h + 1 == H) continue;
                for (std::size_t a = 0; a < A; ++a) {
                    std::fill(block1.begin(), block1.end(), 0.0);
                    std::fill(block2.begin(), block2.end(), 0.0);
                    auto p1 = mdp.transition(h, s1, a);
                    auto p2 = mdp.transition(h, s2, a);
                    for (std::size_t n = 0; n < S; ++n) {
                        block1[abs(h + 1, n)] += p1[n];
                        block2[abs(h + 1, n)] += p2[n];
                    }
                    for (std::size_t x = 0; x < X; ++x) {
                        if (std::abs(block1[x] - block2[x]) > kProbTolerance) {
                            return fail("block transition mismatch for action " + std::to_string(a) +
                                        " into abstract state " + std::to_string(x) + where(h, s1, s2));
                        }
                    }
                }
            }
        }
    }
    return {};
}

/// Block-summed initial distribution rho^phi(x) = sum_{s in phi_0^-1(x)} rho(s).
inline std::vector<double> abstract_initial_distribution(const std::vector<double>& rho,
                                                         const StateAbstraction& abs) {
    std::vector<double> out(abs.num_abstract(), 0.0);
    for (std::size_t s = 0; s < rho.size(); ++s) out[abs(0, s)] += rho[s];
    return out;
}

/**
 * Abstract MDP over Phi: P^phi_h(x'|x,a) sums P_h(.|s,a) over the block of x'
 * for the representative s (lowest index) of x; rewards come from the
 * representative. Meaningful only when check_bisimulation passes.
 */
inline TabularMdp build_abstract_mdp(const TabularMdp& mdp, const StateAbstraction& abs) {
    require_abstraction_matches(abs, mdp.horizon(), mdp.num_states());
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    const std::size_t X = abs.num_abstract();
    MdpBuilder b(X, A, H);
    b.initial_dist = abstract_initial_distribution(mdp.initial_distribution(), abs);
    std::vector<std::vector<std::size_t>> reps(H);
    for (std::size_t h = 0; h < H; ++h) reps[h] = abs.representatives(h);
    for (std::size_t h = 0; h + 1 < H; ++h) {
        for (std::size_t x = 0; x < X; ++x) {
            for (std::size_t a = 0; a < A; ++a) {
                auto row = b.transition(h, x, a);
                auto p = mdp.transition(h, reps[h][x], a);
                for (std::size_t n = 0; n < S; ++n) row[abs(h + 1, n)] += p[n];
            }
        }
    }
    if (mdp.has_rewards()) {
        auto& r = b.reward_table();
        for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t x = 0; x < X; ++x) {
                for (std::size_t a = 0; a < A; ++a) r(h, x, a) = mdp.rewards()(h, reps[h][x], a);
            }
        }
    }
    return b.build(/*renormalize=*/true);
}

/// [pi^phi]^M: pi_h(a|s) = pi^phi_h(a|phi_h(s)).
inline Policy lift_policy(const Policy& abstract_policy, const StateAbstraction& abs) {
    if (abstract_policy.horizon() != abs.horizon() || abstract_policy.num_states() != abs.num_abstract()) {
        throw ConfigError("lift_policy: policy is not over the abstract space");
    }
    const std::size_t A = abstract_policy.num_actions();
    StateActionTable probs(abs.horizon(), abs.num_states(), A);
    for (std::size_t h = 0; h < abs.horizon(); ++h) {
        for (std::size_t s = 0; s < abs.num_states(); ++s) {
            auto src = abstract_policy.row(h, abs(h, s));
            std::copy(src.begin(), src.end(), probs.row(h, s).begin());
        }
    }
    return Policy(std::move(probs));
}

/// Reads each block's row from its representative state.
inline Policy project_policy(const Policy& policy, const StateAbstraction& abs) {
    require_abstraction_matches(abs, policy.horizon(), policy.num_states());
    StateActionTable probs(abs.horizon(), abs.num_abstract(), policy.num_actions());
    for (std::size_t h = 0; h < abs.horizon(); ++h) {
        const auto reps = abs.representatives(h);
        for (std::size_t x = 0; x < abs.num_abstract(); ++x) {
            auto src = policy.row(h, reps[x]);
            std::copy(src.begin(), src.end(), probs.row(h, x).begin());
        }
    }
    return Policy(std::move(probs));
}

/// d^{pi,phi}_h(x,a) = sum_{s in phi_h^-1(x)} d^pi_h(s,a).
inline OccupancyMeasure block_sum(const OccupancyMeasure& d, const StateAbstraction& abs) {
    require_abstraction_matches(abs, d.horizon(), d.num_states());
    StateActionTable out(d.horizon(), abs.num_abstract(), d.num_actions(), 0.0);
    for (std::size_t h = 0; h < d.horizon(); ++h) {
        for (std::size_t s = 0; s < d.num_states(); ++s) {
            for (std::size_t a = 0; a < d.num_actions(); ++a) out(h, abs(h, s), a) += d(h, s, a);
        }
    }
    return OccupancyMeasure(std::move(out), d.is_estimate());
}

inline OccupancyMeasure abstract_occupancy(const TabularMdp& mdp, const Policy& policy,
                                           const StateAbstraction& abs) {
    return block_sum(compute_occupancy(mdp, policy), abs);
}

/// RF-Express with counts over abstract states; exploration rolls out the lifted greedy policy.
inline RfeResult rf_express_abstract(SamplingEnv& env, const StateAbstraction& abs, const RfeConfig& cfg,
                                     Rng& rng) {
    require_abstraction_matches(abs, env.horizon(), env.num_states());
    return detail::rf_express_loop(
        env, abs.num_abstract(), abstract_initial_distribution(env.initial_distribution(), abs),
        [&abs](std::size_t h, std::size_t s) { return abs(h, s); },
        [&abs](const Policy& p) { return lift_policy(p, abs); }, cfg, rng);
}

/// Abstract behavioral cloning: pi'^phi_h(a|x) = n_h(x,a)/n_h(x), uniform if unseen.
inline Policy abstract_bc_policy(const TrajectoryDataset& d1, const StateAbstraction& abs,
                                 std::size_t num_actions) {
    return bc_policy(d1, Dimensions{abs.num_abstract(), num_actions, abs.horizon()},
                     [&abs](std::size_t h, std::size_t s) { return abs(h, s); });
}

/**
 * Transition-aware estimator over Phi x A: region membership uses abstract
 * states visited in split.d1. `rollouts` must come from the lifted abstract BC
 * policy of split.d1.
 */
inline OccupancyMeasure transition_aware_estimator_abstract(const DatasetSplit& split,
                                                            const TrajectoryDataset& rollouts,
                                                            const StateAbstraction& abs,
                                                            std::size_t num_actions) {
    if (rollouts.empty()) throw ConfigError("transition_aware_estimator_abstract: empty rollout set");
    const Dimensions concrete{abs.num_states(), num_actions, abs.horizon()};
    validate_dataset(split.d1, concrete);
    validate_dataset(split.d1c, concrete);
    validate_dataset(rollouts, concrete);
    return combine_terms(transition_aware_terms(split, rollouts,
                                                Dimensions{abs.num_abstract(), num_actions, abs.horizon()},
                                                [&abs](std::size_t h, std::size_t s) { return abs(h, s); }));
}

/// A k-fold copy of an MDP together with the abstraction merging the copies.
struct DuplicatedMdp {
    TabularMdp mdp;
    StateAbstraction abstraction;
};

/**
 * Replaces every state s by k copies s*k + j that share rewards and split the
 * incoming probability (and initial mass) evenly. Merging the copies is a
 * bisimulation by construction.
 */
inline DuplicatedMdp duplicate_states(const TabularMdp& mdp, std::size_t k) {
    if (k == 0) throw ConfigError("duplicate_states: k must be >= 1");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    const std::size_t N = S * k;
    const double share = 1.0 / static_cast<double>(k);
    MdpBuilder b(N, A, H);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t j = 0; j < k; ++j) b.initial_dist[s * k + j] = mdp.initial_distribution()[s] * share;
    }
    for (std::size_t h = 0; h + 1 < H; ++h) {
        for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t a = 0; a < A; ++a) {
                auto src = mdp.transition(h, n / k, a);
                auto dst = b.transition(h, n, a);
                for (std::size_t s2 = 0; s2 < S; ++s2) {
                    for (std::size_t j = 0; j < k; ++j) dst[s2 * k + j] = src[s2] * share;
                }
            }
        }
    }
    if (mdp.has_rewards()) {
        auto& r = b.reward_table();
        for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t n = 0; n < N; ++n) {
                for (std::size_t a = 0; a < A; ++a) r(h, n, a) = mdp.rewards()(h, n / k, a);
            }
        }
    }
    std::vector<std::size_t> phi(N);
    for (std::size_t n = 0; n < N; ++n) phi[n] = n / k;
    return {b.build(/*renormalize=*/true), StateAbstraction(std::vector<std::vector<std::size_t>>(H, phi), S)};
}

inline json abstraction_to_json(const StateAbstraction& abs) { return json(abs.maps()); }

/// JSON list of H arrays, each holding the abstract index of every state.
inline StateAbstraction abstraction_from_json(const json& j) {
    try {
        auto maps = j.get<std::vector<std::vector<std::size_t>>>();
        std::size_t top = 0;
        for (const auto& m : maps) {
            for (std::size_t x : m) top = std::max(top, x + 1);
        }
        return StateAbstraction(std::move(maps), top);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("abstraction JSON: ") + e.what());
    }
}

} // namespace tabular_ail
