#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace tabular_ail;

namespace {

double regret_bound(std::size_t H, std::size_t S, std::size_t A, std::size_t T) {
    return 2.0 * H * std::sqrt(2.0 * S * A * T);
}

} // namespace

TEST(Objective, Examples) {
    const auto mdp = build_random_mdp(3, 2, 4, 1);
    Rng rng(2);
    const auto d = compute_occupancy(mdp, random_policy(4, 3, 2, rng));
    const auto other = compute_occupancy(mdp, random_policy(4, 3, 2, rng));
    const RewardWeights ones(StateActionTable(4, 3, 2, 1.0));
    const RewardWeights w(random_rewards(4, 3, 2, -1.0, 1.0, rng));
    EXPECT_EQ(objective_f(w, d, d), 0.0);
    EXPECT_NEAR(objective_f(ones, d, other), 0.0, 1e-12);

    StateActionTable scaled = other.table();
    for (double& v : scaled.data()) v *= 0.9;
    EXPECT_NEAR(objective_f(ones, d, OccupancyMeasure(scaled, true)), 0.1 * 4, 1e-12);
    EXPECT_THROW(objective_f(RewardWeights::zeros(4, 3, 3), d, d), ConfigError);
}

TEST(Projection, ClampsAndIsIdempotent) {
    StateActionTable w(1, 2, 2, 0.0);
    w(0, 0, 0) = 3.5;
    w(0, 0, 1) = -2.0;
    w(0, 1, 0) = 0.25;
    const auto p = project_to_unit_ball(w);
    EXPECT_EQ(p(0, 0, 0), 1.0);
    EXPECT_EQ(p(0, 0, 1), -1.0);
    EXPECT_EQ(p(0, 1, 0), 0.25);
    EXPECT_EQ(project_to_unit_ball(p.table()).table(), p.table());
}

TEST(Projection, BeatsRandomFeasiblePoints) {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const auto w = random_rewards(2, 3, 2, -4.0, 4.0, rng);
        const auto p = project_to_unit_ball(w);
        auto dist = [&](const StateActionTable& z) {
            double d = 0.0;
            for (std::size_t i = 0; i < z.size(); ++i) d += (z.data()[i] - w.data()[i]) * (z.data()[i] - w.data()[i]);
            return d;
        };
        const double best = dist(p.table());
        for (int i = 0; i < 1000; ++i) EXPECT_LE(best, dist(random_rewards(2, 3, 2, -1.0, 1.0, rng)));
    }
}

TEST(AdaptiveStep, ClosedForms) {
    EXPECT_DOUBLE_EQ(adaptive_step(std::vector<double>{1.0}, 2.0), 2.0);
    const double g = 0.7;
    for (std::size_t t : {1, 4, 25}) {
        EXPECT_NEAR(adaptive_step(std::vector<double>(t, g * g), 3.0), 3.0 / (g * std::sqrt(double(t))), 1e-12);
    }
    EXPECT_EQ(adaptive_step(std::vector<double>{0.0, 0.0}, 2.0), 0.0);
    EXPECT_THROW(adaptive_step(std::vector<double>{}, 2.0), ConfigError);
    EXPECT_NEAR(default_diameter(20, 20, 5), std::sqrt(4000.0), 1e-12);
    EXPECT_NEAR(default_diameter(20, 20, 5), 63.246, 1e-3);
    EXPECT_NEAR(default_constant_step(3, 2, 50), std::sqrt(6.0 / 400.0), 1e-15);
}

TEST(SolveMatching, FeasibleTargetIsMatched) {
    const std::size_t S = 3, A = 2, H = 3, T = 500;
    const auto model = build_random_mdp(S, A, H, 42).with_rewards(std::nullopt);
    Rng rng(1);
    const auto target = compute_occupancy(model, random_policy(H, S, A, rng));
    OptimizerConfig cfg;
    cfg.iterations = T;
    const auto result = solve_matching(model, target, cfg);
    const double achieved = l1_occupancy_distance(compute_occupancy(model, result.policy), target);
    EXPECT_LE(achieved, 1.1 * regret_bound(H, S, A, T) / T);
    EXPECT_LE(result.trace.regret(), regret_bound(H, S, A, T));
    EXPECT_EQ(result.trace.records.size(), T);
}

TEST(SolveMatching, ConstantStepAlsoConverges) {
    const std::size_t S = 3, A = 2, H = 3, T = 2000;
    const auto model = build_random_mdp(S, A, H, 7).with_rewards(std::nullopt);
    Rng rng(5);
    const auto target = compute_occupancy(model, random_policy(H, S, A, rng));
    OptimizerConfig cfg{T, StepSizeKind::constant};
    const auto result = solve_matching(model, target, cfg);
    EXPECT_LE(result.matching_distance, 1.1 * regret_bound(H, S, A, T) / T);
    for (const auto& r : result.trace.records) EXPECT_DOUBLE_EQ(r.step_size, default_constant_step(S, A, T));
}

TEST(SolveMatching, AverageOccupancyIsRealized) {
    Rng rng(3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto model = build_random_mdp(4, 3, 4, seed).with_rewards(std::nullopt);
        const auto target = compute_occupancy(model, random_policy(4, 4, 3, rng));
        OptimizerConfig cfg;
        cfg.iterations = 60;
        const auto result = solve_matching(model, target, cfg);
        EXPECT_LE(oracles::max_abs_diff(compute_occupancy(model, result.policy).table(), result.average_occupancy.table()),
                  1e-10);
        EXPECT_NEAR(result.matching_distance, result.trace.records.back().matching_distance, 1e-12);
        EXPECT_LE(result.trace.dual_lower_bound, result.matching_distance + 1e-12);
    }
}

TEST(SolveMatching, IteratesFeasibleAndInnerStepExact) {
    const std::size_t S = 3, A = 2, H = 3;
    const auto model = build_random_mdp(S, A, H, 12).with_rewards(std::nullopt);
    Rng rng(4);
    StateActionTable noisy = compute_occupancy(model, random_policy(H, S, A, rng)).table();
    for (double& v : noisy.data()) v *= 0.8;
    OptimizerConfig cfg;
    cfg.iterations = 40;
    cfg.record_iterates = true;
    const auto result = solve_matching(model, OccupancyMeasure(noisy, true), cfg);
    ASSERT_EQ(result.trace.iterates.size(), 40u);
    for (std::size_t t = 0; t < 40; ++t) {
        const auto& w = result.trace.iterates[t];
        for (double v : w.table().data()) {
            EXPECT_GE(v, -1.0);
            EXPECT_LE(v, 1.0);
        }
        const double inner = result.trace.records[t].inner_value;
        for (int i = 0; i < 100; ++i) {
            EXPECT_GE(inner + 1e-12, evaluate_policy_direct(model, random_policy(H, S, A, rng), w.table()));
        }
    }
    EXPECT_EQ(result.trace.iterates.front().table(), StateActionTable(H, S, A, 0.0));
}

TEST(SolveMatching, RegretMatchesDefinition) {
    const std::size_t S = 2, A = 2, H = 3, T = 30;
    const auto model = build_random_mdp(S, A, H, 2).with_rewards(std::nullopt);
    Rng rng(8);
    const auto target = compute_occupancy(model, random_policy(H, S, A, rng));
    OptimizerConfig cfg;
    cfg.iterations = T;
    cfg.record_iterates = true;
    const auto result = solve_matching(model, target, cfg);
    // recompute sum_t f_t(w_t) and min_w sum_t f_t(w) from scratch
    double total = 0.0;
    StateActionTable grad(H, S, A, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        const auto& w = result.trace.iterates[t];
        const auto pi = value_iteration(model, w.table()).policy;
        const auto d = compute_occupancy(model, pi);
        total += objective_f(w, d, target);
        for (std::size_t i = 0; i < grad.size(); ++i) grad.data()[i] += d.table().data()[i] - target.table().data()[i];
    }
    StateActionTable minimizer = grad;
    for (double& v : minimizer.data()) v = v > 0 ? -1.0 : (v < 0 ? 1.0 : 0.0);
    double best = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) best += minimizer.data()[i] * grad.data()[i];
    EXPECT_NEAR(result.trace.regret(), total - best, 1e-9);
    EXPECT_LE(result.trace.regret(), regret_bound(H, S, A, T));
}

TEST(SolveMatching, UnreachableTargetStaysBounded) {
    // target puts all mass on state 1, which the model never reaches
    MdpBuilder b(2, 2, 3);
    b.initial_dist = {1.0, 0.0};
    for (std::size_t h = 0; h < 2; ++h) {
        for (std::size_t s = 0; s < 2; ++s) {
            for (std::size_t a = 0; a < 2; ++a) b.transition(h, s, a)[0] = 1.0;
        }
    }
    const auto model = b.build();
    StateActionTable target(3, 2, 2, 0.0);
    for (std::size_t h = 0; h < 3; ++h) target(h, 1, 0) = 1.0;
    OptimizerConfig cfg;
    cfg.iterations = 50;
    const auto result = solve_matching(model, OccupancyMeasure(target), cfg);
    EXPECT_NEAR(result.matching_distance, 6.0, 1e-12);
    EXPECT_LE(result.matching_distance, 6.0);
}

TEST(SolveMatching, SingleCellDistanceIsMassDefect) {
    MdpBuilder b(1, 1, 3);
    b.initial_dist = {1.0};
    for (std::size_t h = 0; h < 2; ++h) b.transition(h, 0, 0)[0] = 1.0;
    const auto model = b.build();
    StateActionTable target(3, 1, 1, 0.0);
    target(0, 0, 0) = 0.9;
    target(1, 0, 0) = 1.0;
    target(2, 0, 0) = 0.4;
    OptimizerConfig cfg;
    cfg.iterations = 10;
    const auto result = solve_matching(model, OccupancyMeasure(target, true), cfg);
    EXPECT_NEAR(result.matching_distance, 0.1 + 0.0 + 0.6, 1e-12);
    EXPECT_EQ(result.policy, Policy::uniform(3, 1, 1));
}

TEST(SolveMatching, ZeroMassStatesGetUniformActions) {
    MdpBuilder b(2, 3, 2);
    b.initial_dist = {1.0, 0.0};
    for (std::size_t s = 0; s < 2; ++s) {
        for (std::size_t a = 0; a < 3; ++a) b.transition(0, s, a)[0] = 1.0;
    }
    const auto model = b.build();
    StateActionTable target(2, 2, 3, 0.0);
    target(0, 0, 2) = 1.0;
    target(1, 0, 1) = 1.0;
    OptimizerConfig cfg;
    cfg.iterations = 200;
    const auto result = solve_matching(model, OccupancyMeasure(target), cfg);
    for (std::size_t h = 0; h < 2; ++h) {
        for (std::size_t a = 0; a < 3; ++a) EXPECT_DOUBLE_EQ(result.policy(h, 1, a), 1.0 / 3.0);
    }
    EXPECT_GT(result.policy(0, 0, 2), 0.9);
}

TEST(SolveMatching, Validation) {
    const auto model = build_random_mdp(2, 2, 2, 1);
    const auto target = compute_occupancy(model, Policy::uniform(2, 2, 2));
    OptimizerConfig cfg;
    cfg.iterations = 0;
    EXPECT_THROW(solve_matching(model, target, cfg), ConfigError);
    cfg.iterations = 5;
    cfg.step_param = -1.0;
    EXPECT_THROW(solve_matching(model, target, cfg), ConfigError);
    cfg.step_param.reset();
    EXPECT_THROW(solve_matching(model, OccupancyMeasure(StateActionTable(2, 3, 2, 0.0)), cfg), ConfigError);
}

TEST(SolveMatching, TraceCsv) {
    const auto model = build_random_mdp(2, 2, 2, 1);
    const auto target = compute_occupancy(model, Policy::uniform(2, 2, 2));
    OptimizerConfig cfg;
    cfg.iterations = 4;
    const auto csv = trace_to_csv(solve_matching(model, target, cfg).trace);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,f_value,grad_norm,step_size,matching_distance");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}
