#pragma once

#include "tabular_ail/mdp.hpp"


namespace tabular_ail {

/**
 * What a learner may see of the true environment: dimensions, the initial
 * distribution, and episodes obtained by running a policy. The transition
 * kernel and rewards stay private.
 *
 * Learner rollouts are counted as interactions. Expert demonstrations are
 * drawn through a separate call and do not count.
 */
class SamplingEnv {
public:
    explicit SamplingEnv(TabularMdp mdp) : mdp_(std::move(mdp)) {}

    std::size_t num_states() const { return mdp_.num_states(); }
    std::size_t num_actions() const { return mdp_.num_actions(); }
    std::size_t horizon() const { return mdp_.horizon(); }
    const std::vector<double>& initial_distribution() const { return mdp_.initial_distribution(); }

    Trajectory rollout(const Policy& policy, Rng& rng) {
        require_policy_matches(mdp_, policy);
        ++episodes_;
        return tabular_ail::rollout(mdp_, policy, rng);
    }

    TrajectoryDataset rollouts(const Policy& policy, std::size_t count, Rng& rng) {
        TrajectoryDataset out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i) out.push_back(rollout(policy, rng));
        return out;
    }

    /// Expert dataset D; not charged to the interaction budget.
    TrajectoryDataset demonstrations(const Policy& expert, std::size_t count, Rng& rng) const {
        return sample_trajectories(mdp_, expert, count, rng);
    }

    /// Learner episodes sampled so far.
    std::size_t episodes() const { return episodes_; }

private:
    TabularMdp mdp_;
    std::size_t episodes_ = 0;
};

/// Exact evaluation against the true MDP, used only to report results.
class GapOracle {
public:
    explicit GapOracle(TabularMdp mdp) : mdp_(std::move(mdp)) {
        if (!mdp_.has_rewards()) throw ConfigError("GapOracle: MDP has no rewards");
    }
    double value(const Policy& policy) const { return evaluate_policy_direct(mdp_, policy); }
    double gap(const Policy& expert, const Policy& learned) const {
        return value(expert) - value(learned);
    }
    const TabularMdp& mdp() const { return mdp_; }

private:
    TabularMdp mdp_;
};

/// V^{pi^E} - V^{pi} under the true dynamics and rewards.
inline double imitation_gap(const TabularMdp& true_mdp, const Policy& expert, const Policy& learned) {
    return evaluate_policy_direct(true_mdp, expert) - evaluate_policy_direct(true_mdp, learned);
}

} // namespace tabular_ail
