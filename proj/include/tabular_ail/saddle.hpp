#pragma once

// Occupancy matching min_pi sum_h ||d^pi_h - target_h||_1 under a fixed model,
// solved as a saddle point: online projected gradient descent on reward
// weights w in [-1,1]^{H x S x A} against an exact best-response planner.

#include "tabular_ail/mdp.hpp"

#include <sstream>

namespace tabular_ail {

enum class StepSizeKind { adaptive, constant };

struct OptimizerConfig {
    std::size_t iterations = 500;
    StepSizeKind step_kind = StepSizeKind::adaptive;
    /// Diameter D (adaptive) or fixed step eta (constant). Unset picks
    /// D = sqrt(2 H |S| |A|) or eta = sqrt(|S||A| / (8T)).
    std::optional<double> step_param;
    /// Inner planning error; value iteration is exact.
    double rl_tolerance = 0.0;
    /// Keep every w^(t) in the trace (memory T x H x S x A).
    bool record_iterates = false;

    void validate() const {
        if (iterations == 0) throw ConfigError("OptimizerConfig: iterations must be >= 1");
        if (step_param && !(*step_param > 0.0)) throw ConfigError("OptimizerConfig: step parameter must be > 0");
    }
};

inline double default_diameter(std::size_t horizon, std::size_t states, std::size_t actions) {
    return std::sqrt(2.0 * static_cast<double>(horizon * states * actions));
}

inline double default_constant_step(std::size_t states, std::size_t actions, std::size_t iterations) {
    return std::sqrt(static_cast<double>(states * actions) / (8.0 * static_cast<double>(iterations)));
}

/// f(w) = sum w (pi_occ - target). Its gradient in w is pi_occ - target.
inline double objective_f(const RewardWeights& w, const OccupancyMeasure& pi_occ, const OccupancyMeasure& target) {
    require_same_shape(w.table(), pi_occ.table(), "objective_f");
    require_same_shape(w.table(), target.table(), "objective_f");
    const auto& wv = w.table().data();
    const auto& p = pi_occ.table().data();
    const auto& t = target.table().data();
    double f = 0.0;
    for (std::size_t i = 0; i < wv.size(); ++i) f += wv[i] * (p[i] - t[i]);
    return f;
}

/// Euclidean projection onto the unit infinity-norm ball: coordinatewise clamp.
inline RewardWeights project_to_unit_ball(StateActionTable w) {
    for (double& v : w.data()) v = std::clamp(v, -1.0, 1.0);
    return RewardWeights(std::move(w));
}

/// D / sqrt(sum of squared gradient norms); 0 when every gradient so far vanished.
inline double adaptive_step(std::span<const double> grad_sq_norms, double diameter) {
    if (grad_sq_norms.empty()) throw ConfigError("adaptive_step: empty gradient history");
    double total = 0.0;
    for (double g : grad_sq_norms) total += g;
    return total > 0.0 ? diameter / std::sqrt(total) : 0.0;
}

struct SaddleRecord {
    std::size_t t;
    double w_norm;          ///< ||w^(t)||_2
    double inner_value;     ///< V^{pi^(t), model, w^(t)}
    double f_value;         ///< f^(t)(w^(t))
    double grad_norm;       ///< ||grad f^(t)||_2
    double step_size;
    double matching_distance;  ///< sum_h ||d-bar_h (running) - target_h||_1
};

struct SaddleTrace {
    std::vector<SaddleRecord> records;
    /// sum_t f^(t)(w^(t)).
    double total_loss = 0.0;
    /// sum_t grad f^(t); the losses are linear so this determines min_w sum_t f^(t)(w).
    StateActionTable gradient_sum;
    /// max_t [<w^(t), target> - V*(w^(t))], a lower bound on the best achievable matching distance.
    double dual_lower_bound = 0.0;
    /// w^(t) for each round, when requested.
    std::vector<RewardWeights> iterates;

    /// sum_t f^(t)(w^(t)) - min_{w in W} sum_t f^(t)(w); the minimizer is -sign(gradient_sum).
    double regret() const {
        double best = 0.0;
        for (double g : gradient_sum.data()) best -= std::abs(g);
        return total_loss - best;
    }
};

struct MatchingResult {
    Policy policy;
    /// d-bar = (1/T) sum_t d^{pi^(t)} under the model.
    OccupancyMeasure average_occupancy;
    SaddleTrace trace;
    /// sum_h ||d-bar_h - target_h||_1.
    double matching_distance = 0.0;
    /// matching_distance - dual_lower_bound; an upper bound on the optimization error.
    double optimization_error_bound() const { return matching_distance - trace.dual_lower_bound; }
};

/// pi(a|s) = d(s,a) / sum_a d(s,a), uniform where the state has no mass.
inline Policy policy_from_occupancy(const OccupancyMeasure& d) {
    StateActionTable probs = d.table();
    const double uniform = 1.0 / static_cast<double>(probs.num_actions());
    for (std::size_t h = 0; h < probs.horizon(); ++h) {
        for (std::size_t s = 0; s < probs.num_states(); ++s) {
            auto r = probs.row(h, s);
            const double mass = std::accumulate(r.begin(), r.end(), 0.0);
            for (double& v : r) v = mass > 0.0 ? v / mass : uniform;
        }
    }
    return Policy(std::move(probs), /*renormalize=*/true);
}

/**
 * Gradient-based occupancy matching.
 *
 * Each round plans exactly against reward w^(t) on `model`, records the
 * resulting occupancy, and takes a projected step w <- clamp(w - eta * (d - target)).
 * The returned policy is derived from the average occupancy over all rounds.
 * `model` rewards, if any, are ignored.
 */
inline MatchingResult solve_matching(const TabularMdp& model, const OccupancyMeasure& target,
                                     const OptimizerConfig& cfg) {
    cfg.validate();
    const std::size_t S = model.num_states(), A = model.num_actions(), H = model.horizon();
    if (target.horizon() != H || target.num_states() != S || target.num_actions() != A) {
        throw ConfigError("solve_matching: target shape does not match the model");
    }
    const auto T = cfg.iterations;
    const double step_param = cfg.step_param.value_or(
        cfg.step_kind == StepSizeKind::adaptive ? default_diameter(H, S, A) : default_constant_step(S, A, T));

    StateActionTable w(H, S, A, 0.0);
    StateActionTable occupancy_sum(H, S, A, 0.0);
    MatchingResult result;
    result.trace.gradient_sum = StateActionTable(H, S, A, 0.0);
    result.trace.records.reserve(T);
    result.trace.dual_lower_bound = -std::numeric_limits<double>::infinity();
    double grad_sq_total = 0.0;
    const auto& tgt = target.table().data();

    for (std::size_t t = 1; t <= T; ++t) {
        if (cfg.record_iterates) result.trace.iterates.emplace_back(w);
        const PlanningResult best = value_iteration(model, w);
        const OccupancyMeasure d = compute_occupancy(model, best.policy);
        const auto& dv = d.table().data();

        double f = 0.0, grad_sq = 0.0, w_sq = 0.0, w_dot_target = 0.0;
        for (std::size_t i = 0; i < dv.size(); ++i) {
            const double g = dv[i] - tgt[i];
            f += w.data()[i] * g;
            grad_sq += g * g;
            w_sq += w.data()[i] * w.data()[i];
            w_dot_target += w.data()[i] * tgt[i];
            result.trace.gradient_sum.data()[i] += g;
            occupancy_sum.data()[i] += dv[i];
        }
        result.trace.total_loss += f;
        result.trace.dual_lower_bound = std::max(result.trace.dual_lower_bound, w_dot_target - best.value);
        grad_sq_total += grad_sq;

        double eta = step_param;
        if (cfg.step_kind == StepSizeKind::adaptive) {
            eta = grad_sq_total > 0.0 ? step_param / std::sqrt(grad_sq_total) : 0.0;
        }

        double running_distance = 0.0;
        const double inv_t = 1.0 / static_cast<double>(t);
        for (std::size_t i = 0; i < dv.size(); ++i) {
            running_distance += std::abs(occupancy_sum.data()[i] * inv_t - tgt[i]);
            w.data()[i] = std::clamp(w.data()[i] - eta * (dv[i] - tgt[i]), -1.0, 1.0);
        }
        result.trace.records.push_back(
            {t, std::sqrt(w_sq), best.value, f, std::sqrt(grad_sq), eta, running_distance});
    }

    for (double& v : occupancy_sum.data()) v /= static_cast<double>(T);
    result.average_occupancy = OccupancyMeasure(std::move(occupancy_sum));
    result.policy = policy_from_occupancy(result.average_occupancy);
    result.matching_distance = l1_occupancy_distance(result.average_occupancy, target);
    return result;
}

/// Columns: t,f_value,grad_norm,step_size,matching_distance.
inline std::string trace_to_csv(const SaddleTrace& trace) {
    std::ostringstream out;
    out.precision(17);
    out << "t,f_value,grad_norm,step_size,matching_distance\n";
    for (const auto& r : trace.records) {
        out << r.t << ',' << r.f_value << ',' << r.grad_norm << ',' << r.step_size << ','
            << r.matching_distance << '\n';
    }
    return out.str();
}

} // namespace tabular_ail
