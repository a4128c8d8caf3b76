#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace tabular_ail;

namespace {

TabularMdp chain_mdp() {
    // rho = (1,0), P_0(.|0,0) = (0,1)
    MdpBuilder b(2, 1, 2);
    b.initial_dist = {1.0, 0.0};
    b.transition(0, 0, 0)[1] = 1.0;
    b.transition(0, 1, 0)[1] = 1.0;
    b.reward_table()(1, 1, 0) = 1.0;
    return b.build();
}

} // namespace

TEST(Occupancy, DegenerateSingleCell) {
    MdpBuilder b(1, 1, 1);
    b.initial_dist = {1.0};
    const auto mdp = b.build();
    const auto d = compute_occupancy(mdp, Policy::uniform(1, 1, 1));
    EXPECT_EQ(d(0, 0, 0), 1.0);
}

TEST(Occupancy, DeterministicChain) {
    const auto mdp = chain_mdp();
    const auto d = compute_occupancy(mdp, Policy::uniform(2, 2, 1));
    EXPECT_EQ(d(1, 1, 0), 1.0);
    EXPECT_EQ(d(1, 0, 0), 0.0);
}

TEST(Occupancy, MatchesTrajectoryEnumeration) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto mdp = build_random_mdp(3, 2, 3, seed);
        Rng rng(seed + 100);
        const auto pi = random_policy(3, 3, 2, rng);
        const auto d = compute_occupancy(mdp, pi);
        EXPECT_LE(oracles::max_abs_diff(d.table(), oracles::enumerated_occupancy(mdp, pi)), 1e-12);
        for (std::size_t h = 0; h < 3; ++h) EXPECT_NEAR(d.table().layer_sum(h), 1.0, 1e-12);
    }
}

TEST(Occupancy, DimensionMismatchThrows) {
    const auto mdp = build_random_mdp(3, 2, 3, 1);
    EXPECT_THROW(compute_occupancy(mdp, Policy::uniform(3, 4, 2)), ConfigError);
    EXPECT_THROW(compute_occupancy(mdp, Policy::uniform(2, 3, 2)), ConfigError);
}

TEST(PolicyValue, ZeroAndUnitRewards) {
    const auto mdp = build_random_mdp(4, 3, 5, 3);
    Rng rng(9);
    const auto d = compute_occupancy(mdp, random_policy(5, 4, 3, rng));
    EXPECT_EQ(policy_value(d, StateActionTable(5, 4, 3, 0.0)), 0.0);
    EXPECT_NEAR(policy_value(d, StateActionTable(5, 4, 3, 1.0)), 5.0, 1e-12);
    EXPECT_THROW(policy_value(d, StateActionTable(5, 4, 2, 1.0)), ConfigError);
}

TEST(PolicyValue, MonteCarloAgreement) {
    const auto mdp = build_random_mdp(3, 2, 4, 21);
    Rng rng(5);
    const auto pi = random_policy(4, 3, 2, rng);
    Rng sampler(1);
    const double exact = policy_value(compute_occupancy(mdp, pi), mdp.rewards());
    const std::size_t n = 1'000'000;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto tr = rollout(mdp, pi, sampler);
        double ret = 0.0;
        for (std::size_t h = 0; h < 4; ++h) ret += mdp.rewards()(h, tr[h].state, tr[h].action);
        sum += ret;
        sum_sq += ret * ret;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / n);
    EXPECT_LE(std::abs(mean - exact), 3.0 * se);
}

TEST(EvaluateDirect, HandExamples) {
    const auto chain = chain_mdp();
    EXPECT_DOUBLE_EQ(evaluate_policy_direct(chain, Policy::uniform(2, 2, 1)), 1.0);

    MdpBuilder b(2, 1, 1);
    b.initial_dist = {0.5, 0.5};
    b.reward_table()(0, 1, 0) = 1.0;
    EXPECT_DOUBLE_EQ(evaluate_policy_direct(b.build(), Policy::uniform(1, 2, 1)), 0.5);
}

TEST(EvaluateDirect, DualEquivalenceOnRandomInstances) {
    Rng rng(77);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto mdp = build_random_mdp(2 + seed % 5, 1 + seed % 3, 1 + seed % 5, seed);
        const auto pi = random_policy(mdp.horizon(), mdp.num_states(), mdp.num_actions(), rng);
        const auto r = random_rewards(mdp.horizon(), mdp.num_states(), mdp.num_actions(), -1.0, 1.0, rng);
        EXPECT_NEAR(policy_value(compute_occupancy(mdp, pi), r), evaluate_policy_direct(mdp, pi, r), 1e-10);
        EXPECT_NEAR(evaluate_policy_direct(mdp, pi, r), oracles::enumerated_value(mdp, pi, r), 1e-10);
    }
}

TEST(ValueIteration, ZeroRewardsTieBreakLowestAction) {
    const auto mdp = build_random_mdp(3, 4, 3, 2);
    const auto best = value_iteration(mdp, StateActionTable(3, 3, 4, 0.0));
    EXPECT_EQ(best.value, 0.0);
    EXPECT_EQ(best.policy, Policy::constant(3, 3, 4, 0));
}

TEST(ValueIteration, MatchesPolicyEnumeration) {
    Rng rng(4);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto mdp = build_random_mdp(2, 2, 2, seed);
        const auto r = random_rewards(2, 2, 2, -1.0, 1.0, rng);
        const auto best = value_iteration(mdp, r);
        double brute = -1e9;
        oracles::enumerate_deterministic_policies(2, 2, 2, [&](const Policy& pi) {
            brute = std::max(brute, evaluate_policy_direct(mdp, pi, r));
        });
        EXPECT_NEAR(best.value, brute, 1e-12);
        EXPECT_TRUE(best.policy.is_deterministic());
        EXPECT_NEAR(evaluate_policy_direct(mdp, best.policy, r), best.value, 1e-12);
    }
}

TEST(ValueIteration, ResetCliffExpertIsOptimalByBruteForce) {
    const ResetCliffSpec spec{3, 2, 3, 100};
    const auto mdp = build_reset_cliff(spec);
    const auto expert = reset_cliff_expert(spec);
    double brute = -1e9;
    oracles::enumerate_deterministic_policies(3, 3, 2, [&](const Policy& pi) {
        brute = std::max(brute, evaluate_policy_direct(mdp, pi));
    });
    EXPECT_NEAR(evaluate_policy_direct(mdp, expert), brute, 1e-12);
    EXPECT_NEAR(value_iteration(mdp).value, brute, 1e-12);
}

TEST(Sampling, ZeroCountAndDeterminism) {
    const auto mdp = build_random_mdp(3, 2, 3, 8);
    const auto pi = Policy::uniform(3, 3, 2);
    EXPECT_TRUE(sample_trajectories(mdp, pi, 0, std::uint64_t{1}).empty());
    EXPECT_EQ(sample_trajectories(mdp, pi, 50, std::uint64_t{6}), sample_trajectories(mdp, pi, 50, std::uint64_t{6}));

    const auto data = sample_trajectories(chain_mdp(), Policy::uniform(2, 2, 1), 20, std::uint64_t{3});
    for (const auto& tr : data) EXPECT_EQ(tr, data.front());
}

TEST(Sampling, FrequenciesWithinFiveSigma) {
    const auto mdp = build_random_mdp(3, 2, 3, 12);
    Rng rng(13);
    const auto pi = random_policy(3, 3, 2, rng);
    const auto d = compute_occupancy(mdp, pi);
    const std::size_t n = 100'000;
    StateActionTable freq(3, 3, 2, 0.0);
    for (const auto& tr : sample_trajectories(mdp, pi, n, rng)) {
        for (std::size_t h = 0; h < 3; ++h) freq(h, tr[h].state, tr[h].action) += 1.0 / n;
    }
    for (std::size_t i = 0; i < freq.size(); ++i) {
        const double p = d.table().data()[i];
        EXPECT_LE(std::abs(freq.data()[i] - p), 5.0 * std::sqrt(p * (1 - p) / n) + 1e-12);
    }
}

TEST(L1Distance, Examples) {
    StateActionTable a(1, 2, 1, 0.0), b(1, 2, 1, 0.0);
    a(0, 0, 0) = 0.7;
    a(0, 1, 0) = 0.3;
    b(0, 0, 0) = 0.5;
    b(0, 1, 0) = 0.5;
    const OccupancyMeasure da(a), db(b);
    EXPECT_NEAR(l1_occupancy_distance(da, db), 0.4, 1e-15);
    EXPECT_EQ(l1_occupancy_distance(da, da), 0.0);
    EXPECT_EQ(l1_occupancy_distance(da, db), l1_occupancy_distance(db, da));

    const auto mdp = build_random_mdp(4, 2, 3, 1);
    Rng rng(2);
    const auto d1 = compute_occupancy(mdp, random_policy(3, 4, 2, rng));
    const auto d2 = compute_occupancy(mdp, random_policy(3, 4, 2, rng));
    const double dist = l1_occupancy_distance(d1, d2);
    EXPECT_GE(dist, 0.0);
    EXPECT_LE(dist, 6.0);
    EXPECT_THROW(l1_occupancy_distance(d1, OccupancyMeasure(StateActionTable(3, 4, 3, 0.0))), ConfigError);
}

TEST(Validation, RejectsBadDistributions) {
    MdpBuilder b(2, 1, 2);
    b.initial_dist = {0.5, 0.5};
    b.transition(0, 0, 0)[0] = 1.0;
    b.transition(0, 1, 0)[0] = 0.9;  // row sums to 0.9
    EXPECT_THROW(b.build(), ConfigError);
    EXPECT_NO_THROW(b.build(/*renormalize=*/true));
    b.transition(0, 1, 0)[1] = 0.1 + 1e-11;  // within tolerance
    EXPECT_NO_THROW(b.build());
    b.transition(0, 1, 0)[1] = -0.1;
    b.transition(0, 1, 0)[0] = 1.1;
    EXPECT_THROW(b.build(), ConfigError);

    MdpBuilder c(2, 1, 1);
    c.initial_dist = {0.6, 0.6};
    EXPECT_THROW(c.build(), ConfigError);
    c.initial_dist = {0.5, 0.5};
    c.reward_table()(0, 0, 0) = 1.5;
    EXPECT_THROW(c.build(), ConfigError);

    EXPECT_THROW(Policy(StateActionTable(1, 1, 2, 0.2)), ConfigError);
    EXPECT_THROW(RewardWeights(StateActionTable(1, 1, 1, 1.5)), ConfigError);
}

TEST(Serialization, BitExactRoundTrip) {
    MdpBuilder b(2, 2, 3);
    b.initial_dist = {0.25, 0.75};
    for (std::size_t h = 0; h < 2; ++h) {
        for (std::size_t s = 0; s < 2; ++s) {
            b.transition(h, s, 0)[0] = 0.5;
            b.transition(h, s, 0)[1] = 0.5;
            b.transition(h, s, 1)[1] = 1.0;
        }
    }
    b.reward_table()(2, 1, 1) = 0.125;
    const auto mdp = b.build();
    EXPECT_EQ(mdp_from_json(json::parse(dump_json(mdp_to_json(mdp)))), mdp);

    const auto random = build_random_mdp(4, 3, 4, 99);
    EXPECT_EQ(mdp_from_json(json::parse(dump_json(mdp_to_json(random)))), random);

    const auto no_rewards = random.with_rewards(std::nullopt);
    const auto j = mdp_to_json(no_rewards);
    EXPECT_TRUE(j.at("rewards").is_null());
    EXPECT_EQ(mdp_from_json(j), no_rewards);
}

TEST(Serialization, MalformedInputIsConfigError) {
    EXPECT_THROW(mdp_from_json(json::parse(R"({"num_states": 2})")), ConfigError);
    auto j = mdp_to_json(build_random_mdp(2, 2, 2, 1));
    j["transitions"][0][0][0] = {0.5, 0.6};
    EXPECT_THROW(mdp_from_json(j), ConfigError);
}
