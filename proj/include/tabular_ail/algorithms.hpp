#pragma once

// Imitation algorithms behind one interface:
//   (sampling env, gap oracle, expert, budget, config, seed) -> ImitationResult
// Learners see the environment only through SamplingEnv. The GapOracle is
// consulted after learning, to report the exact imitation gap.

#include "tabular_ail/abstraction.hpp"
#include "tabular_ail/saddle.hpp"

#include <functional>
#include <map>

namespace tabular_ail {

struct ImitationBudget {
    std::size_t expert_trajectories_m = 100;
    std::size_t interactions_total = 0;
    /// Share of interactions given to reward-free exploration; the rest feeds the estimator.
    double rfe_fraction = 0.8;

    void validate() const {
        if (expert_trajectories_m < 2 || expert_trajectories_m % 2 != 0) {
            throw ConfigError("budget: m must be an even number >= 2");
        }
        if (!(rfe_fraction >= 0.0 && rfe_fraction <= 1.0)) {
            throw ConfigError("budget: rfe_fraction must lie in [0,1]");
        }
    }
    std::size_t exploration_cap() const {
        return static_cast<std::size_t>(std::llround(rfe_fraction * static_cast<double>(interactions_total)));
    }
    std::size_t estimator_rollouts() const { return interactions_total - exploration_cap(); }
};

struct ImitationDiagnostics {
    std::size_t rfe_episodes = 0;
    bool rfe_stopped_early = false;
    std::size_t rollout_episodes = 0;
    /// Target occupancy the learner matched (over the abstract space for abstract runs).
    std::optional<OccupancyMeasure> target;
    /// Learned transition model the matching ran on, with the known initial distribution.
    std::optional<TabularMdp> model;
    std::optional<MatchingResult> matching;
    DatasetSplit split;
};

struct ImitationResult {
    /// The learned policy is the uniform mixture of these (a single entry for Markov outputs).
    std::vector<Policy> policies;
    /// V^{pi^E} - V^{pi}, exact, under the true MDP and rewards.
    double imitation_gap = 0.0;
    /// Learner episodes sampled from the environment.
    std::size_t interactions = 0;
    ImitationDiagnostics diagnostics;

    const Policy& policy() const { return policies.front(); }
};

struct MbTailConfig {
    RfeConfig rfe;
    OptimizerConfig optimizer;
};

struct OalConfig {
    std::size_t iterations = 500;
    double delta = 0.05;
    /// Policy mirror-descent step; default sqrt(2 log|A| / T).
    std::optional<double> policy_step;
    /// Reward step diameter for the adaptive rule; default sqrt(2 H |S| |A|).
    std::optional<double> reward_diameter;
};

namespace detail {

inline double mixture_gap(const GapOracle& oracle, const Policy& expert, const std::vector<Policy>& mixture) {
    double mean = 0.0;
    for (const auto& p : mixture) mean += oracle.value(p);
    mean /= static_cast<double>(mixture.size());
    return oracle.value(expert) - mean;
}

inline Dimensions dims_of(const SamplingEnv& env) {
    return {env.num_states(), env.num_actions(), env.horizon()};
}

} // namespace detail

/// Behavioral cloning on all m expert trajectories; no environment interaction.
inline ImitationResult run_bc(SamplingEnv& env, const GapOracle& oracle, const Policy& expert,
                              const ImitationBudget& budget, std::uint64_t seed) {
    if (budget.expert_trajectories_m < 1) throw ConfigError("run_bc: need at least one expert trajectory");
    const std::size_t start = env.episodes();
    Rng demo_rng = phase_rng(seed, Phase::demonstrations);
    const TrajectoryDataset demos = env.demonstrations(expert, budget.expert_trajectories_m, demo_rng);
    ImitationResult result;
    result.policies.push_back(bc_policy(demos, detail::dims_of(env)));
    result.imitation_gap = oracle.gap(expert, result.policy());
    result.interactions = env.episodes() - start;
    return result;
}

/**
 * MB-TAIL:
 *   1. RF-Express with at most rfe_fraction * interactions episodes -> P-hat
 *   2. random equal split of the expert data into D1 / D1c
 *   3. BC on D1, rolled out for the remaining interactions -> D'_env
 *   4. transition-aware estimate of the expert occupancy
 *   5. occupancy matching under P-hat
 */
inline ImitationResult run_mbtail(SamplingEnv& env, const GapOracle& oracle, const Policy& expert,
                                  const ImitationBudget& budget, const MbTailConfig& cfg, std::uint64_t seed) {
    budget.validate();
    const std::size_t start = env.episodes();
    const Dimensions dims = detail::dims_of(env);
    ImitationResult result;
    auto& diag = result.diagnostics;

    RfeConfig rfe_cfg = cfg.rfe;
    rfe_cfg.max_episodes = budget.exploration_cap();
    Rng explore_rng = phase_rng(seed, Phase::exploration);
    const RfeResult explored = rf_express(env, rfe_cfg, explore_rng);
    diag.rfe_episodes = explored.episodes_used;
    diag.rfe_stopped_early = explored.stopped_early;

    Rng demo_rng = phase_rng(seed, Phase::demonstrations);
    const TrajectoryDataset demos = env.demonstrations(expert, budget.expert_trajectories_m, demo_rng);
    Rng split_rng = phase_rng(seed, Phase::split);
    diag.split = split_dataset(demos, split_rng);

    const Policy cloned = bc_policy(diag.split.d1, dims);
    Rng rollout_rng = phase_rng(seed, Phase::rollouts);
    const TrajectoryDataset rollouts = env.rollouts(cloned, budget.estimator_rollouts(), rollout_rng);
    diag.rollout_episodes = rollouts.size();

    diag.target = combine_terms(
        transition_aware_terms(diag.split, rollouts, dims, [](std::size_t, std::size_t s) { return s; }));
    diag.model = explored.model.to_mdp(env.initial_distribution());
    diag.matching = solve_matching(*diag.model, *diag.target, cfg.optimizer);

    result.policies.push_back(diag.matching->policy);
    result.imitation_gap = oracle.gap(expert, result.policy());
    result.interactions = env.episodes() - start;
    return result;
}

/**
 * MB-TAIL over a state abstraction: split, abstract BC rolled out through the
 * lifted policy, abstract estimator, abstract RF-Express, matching over
 * Phi x A, and the lifted output policy.
 *
 * The abstraction must be a bisimulation of the true MDP that respects the
 * expert; this precondition is verified against the oracle's MDP.
 */
inline ImitationResult run_mbtail_abstract(SamplingEnv& env, const GapOracle& oracle, const Policy& expert,
                                           const StateAbstraction& abs, const ImitationBudget& budget,
                                           const MbTailConfig& cfg, std::uint64_t seed) {
    budget.validate();
    require_abstraction_matches(abs, env.horizon(), env.num_states());
    if (auto report = check_bisimulation(oracle.mdp(), expert, abs); !report) {
        throw ConfigError("run_mbtail_abstract: abstraction is not a bisimulation: " + report.violation);
    }
    const std::size_t start = env.episodes();
    const std::size_t A = env.num_actions();
    ImitationResult result;
    auto& diag = result.diagnostics;

    Rng demo_rng = phase_rng(seed, Phase::demonstrations);
    const TrajectoryDataset demos = env.demonstrations(expert, budget.expert_trajectories_m, demo_rng);
    Rng split_rng = phase_rng(seed, Phase::split);
    diag.split = split_dataset(demos, split_rng);

    const Policy cloned = lift_policy(abstract_bc_policy(diag.split.d1, abs, A), abs);
    Rng rollout_rng = phase_rng(seed, Phase::rollouts);
    const TrajectoryDataset rollouts = env.rollouts(cloned, budget.estimator_rollouts(), rollout_rng);
    diag.rollout_episodes = rollouts.size();
    diag.target = combine_terms(transition_aware_terms(
        diag.split, rollouts, Dimensions{abs.num_abstract(), A, abs.horizon()},
        [&abs](std::size_t h, std::size_t s) { return abs(h, s); }));

    RfeConfig rfe_cfg = cfg.rfe;
    rfe_cfg.max_episodes = budget.exploration_cap();
    Rng explore_rng = phase_rng(seed, Phase::exploration);
    const RfeResult explored = rf_express_abstract(env, abs, rfe_cfg, explore_rng);
    diag.rfe_episodes = explored.episodes_used;
    diag.rfe_stopped_early = explored.stopped_early;

    diag.model = explored.model.to_mdp(abstract_initial_distribution(env.initial_distribution(), abs));
    diag.matching = solve_matching(*diag.model, *diag.target, cfg.optimizer);

    result.policies.push_back(lift_policy(diag.matching->policy, abs));
    result.imitation_gap = oracle.gap(expert, result.policy());
    result.interactions = env.episodes() - start;
    return result;
}

/// sqrt(log(H|S||A| n / delta) / max(n_h(s,a), 1)) with n the total interaction count.
inline double oal_bonus(std::uint64_t visits, std::size_t total_interactions, double delta, std::size_t states,
                        std::size_t actions, std::size_t horizon) {
    const double n = static_cast<double>(std::max<std::size_t>(total_interactions, 1));
    const double numerator =
        std::log(static_cast<double>(horizon * states * actions) * n / delta);
    return std::sqrt(std::max(numerator, 0.0) / static_cast<double>(std::max<std::uint64_t>(visits, 1)));
}

/**
 * Online apprenticeship learning baseline. Interactions are spread evenly over
 * the iterations; each iteration refreshes the count model, evaluates the
 * current policy optimistically (reward w plus count bonus, clipped to the
 * remaining horizon), takes a multiplicative-weights policy step and a
 * projected ascent step on w towards the expert's MLE occupancy. The output
 * is the uniform mixture of the per-iteration policies.
 */
inline ImitationResult run_oal(SamplingEnv& env, const GapOracle& oracle, const Policy& expert,
                               const ImitationBudget& budget, const OalConfig& cfg, std::uint64_t seed) {
    budget.validate();
    if (cfg.iterations == 0) throw ConfigError("run_oal: iterations must be >= 1");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError("run_oal: delta must lie in (0,1)");
    const std::size_t start = env.episodes();
    const std::size_t S = env.num_states(), A = env.num_actions(), H = env.horizon();
    const Dimensions dims{S, A, H};
    const std::size_t I = budget.interactions_total;
    const std::size_t T = cfg.iterations;

    Rng demo_rng = phase_rng(seed, Phase::demonstrations);
    const OccupancyMeasure target =
        mle_estimator(env.demonstrations(expert, budget.expert_trajectories_m, demo_rng), dims);

    ImitationResult result;
    Policy policy = Policy::uniform(H, S, A);
    if (I == 0) {
        result.policies.push_back(policy);
        result.imitation_gap = oracle.gap(expert, policy);
        return result;
    }

    const double policy_step = cfg.policy_step.value_or(std::sqrt(2.0 * std::log(static_cast<double>(A)) /
                                                                  static_cast<double>(T)));
    const double diameter = cfg.reward_diameter.value_or(default_diameter(H, S, A));
    StateActionTable w(H, S, A, 0.0);
    EmpiricalModel model(S, A, H);
    Rng rng = phase_rng(seed, Phase::baseline);
    double grad_sq_total = 0.0;
    StateActionTable q(H, S, A, 0.0);
    std::vector<double> next_v(S, 0.0), v(S, 0.0);
    result.policies.reserve(T);

    for (std::size_t k = 0; k < T; ++k) {
        const std::size_t episodes = I / T + (k < I % T ? 1 : 0);
        for (std::size_t e = 0; e < episodes; ++e) model.record(env.rollout(policy, rng));
        result.policies.push_back(policy);

        // optimistic evaluation of the current policy
        std::fill(next_v.begin(), next_v.end(), 0.0);
        for (std::size_t h = H; h-- > 0;) {
            const double cap = static_cast<double>(H - h);
            for (std::size_t s = 0; s < S; ++s) {
                double value = 0.0;
                for (std::size_t a = 0; a < A; ++a) {
                    double future = 0.0;
                    if (h + 1 < H) {
                        for (std::size_t s2 = 0; s2 < S; ++s2) future += model.p_hat(h, s, a, s2) * next_v[s2];
                    }
                    const double bonus = oal_bonus(model.visit_count(h, s, a), I, cfg.delta, S, A, H);
                    q(h, s, a) = std::min(cap, w(h, s, a) + bonus + future);
                    value += policy(h, s, a) * q(h, s, a);
                }
                v[s] = value;
            }
            std::swap(v, next_v);
        }

        // reward ascent on sum w (d^E - d^pi) with d^pi under the learned model
        const OccupancyMeasure d = compute_occupancy(model.to_mdp(env.initial_distribution()), policy);
        double grad_sq = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double g = target.table().data()[i] - d.table().data()[i];
            grad_sq += g * g;
        }
        grad_sq_total += grad_sq;
        const double eta = grad_sq_total > 0.0 ? diameter / std::sqrt(grad_sq_total) : 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double g = target.table().data()[i] - d.table().data()[i];
            w.data()[i] = std::clamp(w.data()[i] + eta * g, -1.0, 1.0);
        }

        // multiplicative-weights policy step
        StateActionTable next = policy.table();
        for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t s = 0; s < S; ++s) {
                auto row = next.row(h, s);
                auto qrow = q.row(h, s);
                const double top = *std::max_element(qrow.begin(), qrow.end());
                double total = 0.0;
                for (std::size_t a = 0; a < A; ++a) {
                    row[a] *= std::exp(policy_step * (qrow[a] - top));
                    total += row[a];
                }
                for (double& p : row) p /= total;
            }
        }
        policy = Policy(std::move(next), /*renormalize=*/true);
    }

    result.imitation_gap = detail::mixture_gap(oracle, expert, result.policies);
    result.interactions = env.episodes() - start;
    return result;
}

/// Settings for every registered algorithm.
struct AlgorithmConfig {
    MbTailConfig mbtail;
    OalConfig oal;
    std::optional<StateAbstraction> abstraction;
};

using ImitationAlgorithm = std::function<ImitationResult(SamplingEnv&, const GapOracle&, const Policy&,
                                                         const ImitationBudget&, const AlgorithmConfig&,
                                                         std::uint64_t)>;

/// Name -> algorithm: "bc", "oal", "mbtail", "mbtail-abs".
inline const std::map<std::string, ImitationAlgorithm>& algorithm_registry() {
    static const std::map<std::string, ImitationAlgorithm> registry = {
        {"bc",
         [](SamplingEnv& env, const GapOracle& oracle, const Policy& expert, const ImitationBudget& budget,
            const AlgorithmConfig&, std::uint64_t seed) { return run_bc(env, oracle, expert, budget, seed); }},
        {"oal",
         [](SamplingEnv& env, const GapOracle& oracle, const Policy& expert, const ImitationBudget& budget,
            const AlgorithmConfig& cfg,
            std::uint64_t seed) { return run_oal(env, oracle, expert, budget, cfg.oal, seed); }},
        {"mbtail",
         [](SamplingEnv& env, const GapOracle& oracle, const Policy& expert, const ImitationBudget& budget,
            const AlgorithmConfig& cfg,
            std::uint64_t seed) { return run_mbtail(env, oracle, expert, budget, cfg.mbtail, seed); }},
        {"mbtail-abs",
         [](SamplingEnv& env, const GapOracle& oracle, const Policy& expert, const ImitationBudget& budget,
            const AlgorithmConfig& cfg, std::uint64_t seed) {
             if (!cfg.abstraction) throw ConfigError("mbtail-abs requires a state abstraction");
             return run_mbtail_abstract(env, oracle, expert, *cfg.abstraction, budget, cfg.mbtail, seed);
         }},
    };
    return registry;
}

inline const ImitationAlgorithm& find_algorithm(const std::string& name) {
    const auto& reg = algorithm_registry();
    auto it = reg.find(name);
    if (it == reg.end()) throw ConfigError("unknown algorithm '" + name + "'");
    return it->second;
}

} // namespace tabular_ail
