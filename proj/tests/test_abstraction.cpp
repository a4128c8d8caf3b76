#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace tabular_ail;

namespace {

/// Regular Reset Cliff states share block 0, the absorbing state gets block 1.
StateAbstraction reset_cliff_blocks(const ResetCliffSpec& spec) {
    std::vector<std::size_t> phi(spec.num_states, 0);
    phi[spec.absorbing_state()] = 1;
    return StateAbstraction(std::vector<std::vector<std::size_t>>(spec.horizon, phi), 2);
}

StateAbstraction single_block(std::size_t H, std::size_t S) {
    return StateAbstraction(std::vector<std::vector<std::size_t>>(H, std::vector<std::size_t>(S, 0)), 1);
}

/// Lifts an abstract deterministic expert by reading each state's block.
Policy lifted_optimal(const DuplicatedMdp& dup, const TabularMdp& base) {
    return lift_policy(value_iteration(base).policy, dup.abstraction);
}

MbTailConfig quick_mbtail(std::size_t iterations = 100) {
    MbTailConfig cfg;
    cfg.optimizer.iterations = iterations;
    return cfg;
}

} // namespace

TEST(Abstraction, ValidatesMaps) {
    EXPECT_THROW(StateAbstraction({}, 1), ConfigError);
    EXPECT_THROW(StateAbstraction({{0, 1}, {0}}, 2), ConfigError);
    EXPECT_THROW(StateAbstraction({{0, 2}}, 2), ConfigError);
    const StateAbstraction gap({{0, 0}}, 2);
    EXPECT_THROW(gap.representatives(0), ConfigError);
    EXPECT_THROW(build_abstract_mdp(build_random_mdp(2, 2, 1, 1), gap), ConfigError);
}

TEST(Bisimulation, IdentityAlwaysPasses) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto mdp = build_random_mdp(4, 3, 4, seed);
        EXPECT_TRUE(check_bisimulation(mdp, value_iteration(mdp).policy, StateAbstraction::identity(4, 4)));
    }
}

TEST(Bisimulation, ResetCliffRegularStatesMerge) {
    const ResetCliffSpec spec{8, 3, 6, 20};
    const auto report = check_bisimulation(build_reset_cliff(spec), reset_cliff_expert(spec), reset_cliff_blocks(spec));
    EXPECT_TRUE(report.ok) << report.violation;
}

TEST(Bisimulation, MergingTheAbsorbingStateFails) {
    const ResetCliffSpec spec{8, 3, 6, 20};
    const auto report =
        check_bisimulation(build_reset_cliff(spec), reset_cliff_expert(spec), single_block(spec.horizon, spec.num_states));
    EXPECT_FALSE(report.ok);
    EXPECT_NE(report.violation.find("reward"), std::string::npos) << report.violation;
}

TEST(Bisimulation, ExpertDisagreementAndTransitionsAreReported) {
    const auto dup = duplicate_states(build_random_mdp(3, 2, 3, 7), 2);
    auto choice = std::vector<std::vector<std::size_t>>(3, std::vector<std::size_t>(6, 0));
    choice[1][1] = 1;
    auto report = check_bisimulation(dup.mdp, Policy::deterministic(choice, 2), dup.abstraction);
    EXPECT_FALSE(report.ok);
    EXPECT_NE(report.violation.find("expert"), std::string::npos);

    // same rewards everywhere, different successors
    MdpBuilder b(2, 1, 2);
    b.initial_dist = {0.5, 0.5};
    b.transition(0, 0, 0)[0] = 1.0;
    b.transition(0, 1, 0)[1] = 1.0;
    const auto mdp = b.build(true);
    const StateAbstraction merge_first({{0, 0}, {0, 1}}, 2);
    report = check_bisimulation(mdp, Policy::constant(2, 2, 1, 0), merge_first);
    EXPECT_FALSE(report.ok);
    EXPECT_NE(report.violation.find("transition"), std::string::npos);

    EXPECT_THROW(check_bisimulation(dup.mdp, Policy::uniform(3, 6, 2), dup.abstraction), ConfigError);
}

TEST(AbstractMdp, IdentityReproducesTheMdp) {
    const auto mdp = build_random_mdp(4, 2, 4, 3);
    const auto copy = build_abstract_mdp(mdp, StateAbstraction::identity(4, 4));
    EXPECT_EQ(copy.initial_distribution(), mdp.initial_distribution());
    EXPECT_EQ(copy.rewards(), mdp.rewards());
    for (std::size_t h = 0; h + 1 < 4; ++h) {
        for (std::size_t s = 0; s < 4; ++s) {
            for (std::size_t a = 0; a < 2; ++a) {
                for (std::size_t n = 0; n < 4; ++n) {
                    EXPECT_NEAR(copy.transition(h, s, a)[n], mdp.transition(h, s, a)[n], 1e-15);
                }
            }
        }
    }
}

TEST(AbstractMdp, SingleBlockAtHorizonOne) {
    const auto mdp = build_random_mdp(4, 3, 1, 11);
    const auto abstract = build_abstract_mdp(mdp, single_block(1, 4));
    ASSERT_EQ(abstract.num_states(), 1u);
    EXPECT_DOUBLE_EQ(abstract.initial_distribution()[0], 1.0);
    for (std::size_t a = 0; a < 3; ++a) EXPECT_EQ(abstract.rewards()(0, 0, a), mdp.rewards()(0, 0, a));
}

TEST(AbstractMdp, LiftingPreservesValuesOccupanciesAndRewards) {
    Rng rng(5);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto base = build_random_mdp(3, 2, 4, seed);
        const auto dup = duplicate_states(base, 2 + seed % 3);
        const auto& abs = dup.abstraction;
        const auto abstract = build_abstract_mdp(dup.mdp, abs);
        EXPECT_TRUE(check_bisimulation(dup.mdp, lifted_optimal(dup, base), abs));

        const Policy pi_phi = random_policy(4, 3, 2, rng);
        const Policy lifted = lift_policy(pi_phi, abs);

        // per-state values agree with the value of the block
        const auto v = state_values(dup.mdp, lifted, dup.mdp.rewards());
        const auto v_phi = state_values(abstract, pi_phi, abstract.rewards());
        for (std::size_t h = 0; h < 4; ++h) {
            for (std::size_t s = 0; s < dup.mdp.num_states(); ++s) EXPECT_NEAR(v[h][s], v_phi[h][abs(h, s)], 1e-8);
        }
        EXPECT_NEAR(evaluate_policy_direct(dup.mdp, lifted), evaluate_policy_direct(abstract, pi_phi), 1e-8);

        // block-summed occupancy equals the abstract occupancy
        EXPECT_LE(oracles::max_abs_diff(abstract_occupancy(dup.mdp, lifted, abs).table(),
                                        compute_occupancy(abstract, pi_phi).table()),
                  1e-8);

        // reward lifting: an abstract reward read through phi gives the same value
        const auto r_phi = random_rewards(4, 3, 2, -1.0, 1.0, rng);
        StateActionTable r(4, dup.mdp.num_states(), 2);
        for (std::size_t h = 0; h < 4; ++h) {
            for (std::size_t s = 0; s < dup.mdp.num_states(); ++s) {
                for (std::size_t a = 0; a < 2; ++a) r(h, s, a) = r_phi(h, abs(h, s), a);
            }
        }
        EXPECT_NEAR(evaluate_policy_direct(dup.mdp, lifted, r), evaluate_policy_direct(abstract, pi_phi, r_phi), 1e-8);

        // the projected expert is optimal in the abstract MDP
        const Policy expert_phi = project_policy(lifted_optimal(dup, base), abs);
        EXPECT_NEAR(evaluate_policy_direct(abstract, expert_phi), value_iteration(abstract).value, 1e-8);
    }
}

TEST(AbstractPolicy, LiftProjectRoundTrip) {
    Rng rng(2);
    const auto dup = duplicate_states(build_random_mdp(3, 2, 3, 1), 3);
    const Policy pi_phi = random_policy(3, 3, 2, rng);
    EXPECT_EQ(project_policy(lift_policy(pi_phi, dup.abstraction), dup.abstraction), pi_phi);
    const auto id = StateAbstraction::identity(3, 9);
    const Policy pi = random_policy(3, 9, 2, rng);
    EXPECT_EQ(lift_policy(pi, id), pi);
    EXPECT_THROW(lift_policy(pi, dup.abstraction), ConfigError);
}

TEST(AbstractOccupancy, IdentityAndSingleBlock) {
    Rng rng(4);
    const auto mdp = build_random_mdp(4, 3, 3, 8);
    const Policy pi = random_policy(3, 4, 3, rng);
    const auto d = compute_occupancy(mdp, pi);
    EXPECT_EQ(abstract_occupancy(mdp, pi, StateAbstraction::identity(3, 4)).table(), d.table());
    const auto marginal = abstract_occupancy(mdp, pi, single_block(3, 4));
    for (std::size_t h = 0; h < 3; ++h) {
        for (std::size_t a = 0; a < 3; ++a) {
            double sum = 0.0;
            for (std::size_t s = 0; s < 4; ++s) sum += d(h, s, a);
            EXPECT_NEAR(marginal(h, 0, a), sum, 1e-12);
        }
    }
}

TEST(AbstractRfe, IdentityMatchesConcrete) {
    const auto mdp = build_random_mdp(3, 2, 3, 6);
    RfeConfig cfg;
    cfg.max_episodes = 300;
    SamplingEnv env_a(mdp), env_b(mdp);
    Rng rng_a(17), rng_b(17);
    const auto concrete = rf_express(env_a, cfg, rng_a);
    const auto abstract = rf_express_abstract(env_b, StateAbstraction::identity(3, 3), cfg, rng_b);
    EXPECT_EQ(concrete.model, abstract.model);
    EXPECT_EQ(concrete.episodes_used, abstract.episodes_used);
    EXPECT_EQ(concrete.final_statistic, abstract.final_statistic);
}

TEST(AbstractRfe, SingleBlockStoppingIgnoresConcreteSize) {
    MdpBuilder one(1, 2, 3);
    one.initial_dist = {1.0};
    for (std::size_t h = 0; h < 2; ++h) {
        for (std::size_t a = 0; a < 2; ++a) one.transition(h, 0, a)[0] = 1.0;
    }
    const auto base = one.build(true);
    RfeConfig cfg;
    cfg.constants.scale = 0.05;
    std::vector<std::size_t> used;
    for (std::size_t k : {5, 10, 20}) {
        const auto dup = duplicate_states(base, k);
        SamplingEnv env(dup.mdp);
        Rng rng(3);
        const auto result = rf_express_abstract(env, dup.abstraction, cfg, rng);
        EXPECT_FALSE(result.stopped_early);
        used.push_back(result.episodes_used);
    }
    EXPECT_EQ(used[0], used[1]);
    EXPECT_EQ(used[1], used[2]);
}

TEST(AbstractRfe, ReachesAccuracyOnTheAbstractMdp) {
    const auto base = build_random_mdp(3, 2, 3, 12);
    const auto dup = duplicate_states(base, 3);
    const auto abstract = build_abstract_mdp(dup.mdp, dup.abstraction);
    RfeConfig cfg;
    cfg.constants.scale = 0.5;
    std::size_t ok = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SamplingEnv env(dup.mdp);
        Rng rng(seed);
        const auto result = rf_express_abstract(env, dup.abstraction, cfg, rng);
        ASSERT_FALSE(result.stopped_early);
        if (uniform_evaluation_error(abstract, result.model, 200, seed) <= cfg.epsilon / 2.0) ++ok;
    }
    EXPECT_GE(ok, 9u);
}

TEST(AbstractEstimator, IdentityMatchesConcrete) {
    const ResetCliffSpec spec{6, 3, 6, 20};
    const auto mdp = build_reset_cliff(spec);
    const auto expert = reset_cliff_expert(spec);
    const Dimensions dims{6, 3, 6};
    const auto id = StateAbstraction::identity(6, 6);
    Rng rng(9);
    const auto split = split_dataset(sample_trajectories(mdp, expert, 20, rng), rng);
    EXPECT_EQ(abstract_bc_policy(split.d1, id, 3), bc_policy(split.d1, dims));
    const auto rollouts = sample_trajectories(mdp, bc_policy(split.d1, dims), 100, rng);
    EXPECT_EQ(transition_aware_estimator_abstract(split, rollouts, id, 3).table(),
              transition_aware_estimator(split, rollouts, dims).table());
}

TEST(AbstractEstimator, EmptyFirstHalfFallsBackToMle) {
    const ResetCliffSpec spec{6, 3, 6, 20};
    const auto mdp = build_reset_cliff(spec);
    const auto abs = reset_cliff_blocks(spec);
    Rng rng(2);
    DatasetSplit split;
    split.d1c = sample_trajectories(mdp, reset_cliff_expert(spec), 10, rng);
    const auto rollouts = sample_trajectories(mdp, Policy::uniform(6, 6, 3), 50, rng);
    const auto estimate = transition_aware_estimator_abstract(split, rollouts, abs, 3);
    const auto expected = block_sum(mle_estimator(split.d1c, Dimensions{6, 3, 6}), abs);
    EXPECT_LE(oracles::max_abs_diff(estimate.table(), expected.table()), 1e-12);
}

TEST(AbstractMbTail, IdentityMatchesConcreteBitwise) {
    const auto mdp = build_random_mdp(4, 2, 4, 3);
    const auto expert = value_iteration(mdp).policy;
    const GapOracle oracle(mdp);
    SamplingEnv a(mdp), b(mdp);
    const auto concrete = run_mbtail(a, oracle, expert, {10, 400}, quick_mbtail(60), 21);
    const auto abstract =
        run_mbtail_abstract(b, oracle, expert, StateAbstraction::identity(4, 4), {10, 400}, quick_mbtail(60), 21);
    EXPECT_EQ(concrete.policy(), abstract.policy());
    EXPECT_EQ(concrete.imitation_gap, abstract.imitation_gap);
    EXPECT_EQ(concrete.interactions, abstract.interactions);
    EXPECT_EQ(a.episodes(), b.episodes());
}

TEST(AbstractMbTail, RejectsNonBisimulation) {
    const ResetCliffSpec spec{6, 3, 6, 20};
    const auto mdp = build_reset_cliff(spec);
    SamplingEnv env(mdp);
    EXPECT_THROW(run_mbtail_abstract(env, GapOracle(mdp), reset_cliff_expert(spec), single_block(6, 6), {10, 100},
                                     quick_mbtail(), 1),
                 ConfigError);
    EXPECT_EQ(env.episodes(), 0u);
}

TEST(AbstractMbTail, SingleBlockWithConstantRewardHasNoGap) {
    const auto mdp = build_random_mdp(4, 2, 3, 1).with_rewards(StateActionTable(3, 4, 2, 0.5));
    SamplingEnv env(mdp);
    const auto result = run_mbtail_abstract(env, GapOracle(mdp), Policy::constant(3, 4, 2, 0), single_block(3, 4),
                                            {10, 200}, quick_mbtail(), 4);
    EXPECT_NEAR(result.imitation_gap, 0.0, 1e-12);
}

TEST(AbstractMbTail, ResetCliffBlocksRunEndToEnd) {
    const ResetCliffSpec spec{8, 3, 8, 20};
    const auto mdp = build_reset_cliff(spec);
    SamplingEnv env(mdp);
    const auto result =
        run_mbtail_abstract(env, GapOracle(mdp), reset_cliff_expert(spec), reset_cliff_blocks(spec), {20, 2000},
                            quick_mbtail(200), 5);
    EXPECT_EQ(result.interactions, env.episodes());
    EXPECT_LE(result.interactions, 2000u);
    EXPECT_LT(result.imitation_gap, 0.5);
}

TEST(AbstractionJson, RoundTrip) {
    const auto dup = duplicate_states(build_random_mdp(2, 2, 3, 1), 2);
    EXPECT_EQ(abstraction_from_json(abstraction_to_json(dup.abstraction)), dup.abstraction);
    EXPECT_THROW(abstraction_from_json(json::parse(R"({"maps": 1})")), ConfigError);
    EXPECT_THROW(abstraction_from_json(json::parse(R"([[0, 1], [0]])")), ConfigError);
}
