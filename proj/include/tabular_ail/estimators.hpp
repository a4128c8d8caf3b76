#pragma once

#include "tabular_ail/mdp.hpp"

namespace tabular_ail {

struct Dimensions {
    std::size_t num_states;
    std::size_t num_actions;
    std::size_t horizon;
};

/// Equal halves of an expert dataset: d1 trains the BC policy, d1c is held out.
struct DatasetSplit {
    TrajectoryDataset d1;
    TrajectoryDataset d1c;
};

/// S_h(D): states seen at each step of a dataset.
class VisitedStateSets {
public:
    VisitedStateSets(std::size_t horizon, std::size_t num_states)
        : num_states_(num_states), seen_(horizon, std::vector<bool>(num_states, false)) {}

    /// `map(h, s)` lets callers collect sets of abstract states.
    template <class StateMap>
    static VisitedStateSets from_dataset(const TrajectoryDataset& data, std::size_t horizon,
                                         std::size_t num_states, StateMap&& map) {
        VisitedStateSets sets(horizon, num_states);
        for (const auto& tr : data) {
            for (std::size_t h = 0; h < horizon; ++h) sets.insert(h, map(h, tr[h].state));
        }
        return sets;
    }
    static VisitedStateSets from_dataset(const TrajectoryDataset& data, std::size_t horizon,
                                         std::size_t num_states) {
        return from_dataset(data, horizon, num_states, [](std::size_t, std::size_t s) { return s; });
    }

    void insert(std::size_t h, std::size_t s) {
        if (s >= num_states_) throw ConfigError("VisitedStateSets: state out of range");
        seen_.at(h)[s] = true;
    }
    bool contains(std::size_t h, std::size_t s) const { return seen_[h][s]; }
    std::size_t horizon() const { return seen_.size(); }
    std::size_t num_states() const { return num_states_; }

private:
    std::size_t num_states_;
    std::vector<std::vector<bool>> seen_;
};

inline void validate_dataset(const TrajectoryDataset& data, const Dimensions& dims) {
    for (const auto& tr : data) {
        if (tr.length() != dims.horizon) throw ConfigError("trajectory length differs from horizon");
        for (const auto& step : tr.steps) {
            if (step.state >= dims.num_states || step.action >= dims.num_actions) {
                throw ConfigError("trajectory index out of range");
            }
        }
    }
}

/// d-hat_h(s,a) = (1/|D|) sum_tr 1{tr_h = (s,a)}.
inline OccupancyMeasure mle_estimator(const TrajectoryDataset& data, const Dimensions& dims) {
    if (data.empty()) throw ConfigError("mle_estimator: empty dataset");
    validate_dataset(data, dims);
    StateActionTable d(dims.horizon, dims.num_states, dims.num_actions, 0.0);
    for (const auto& tr : data) {
        for (std::size_t h = 0; h < dims.horizon; ++h) d(h, tr[h].state, tr[h].action) += 1.0;
    }
    const double n = static_cast<double>(data.size());
    for (double& v : d.data()) v /= n;
    return OccupancyMeasure(std::move(d));
}

/// Uniformly random partition into two halves; rejects odd sizes.
inline DatasetSplit split_dataset(const TrajectoryDataset& data, Rng& rng) {
    if (data.size() % 2 != 0) throw ConfigError("split_dataset: dataset size must be even");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Fisher-Yates with our own index draw so the permutation is portable
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    DatasetSplit split;
    const std::size_t half = data.size() / 2;
    split.d1.reserve(half);
    split.d1c.reserve(half);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < half ? split.d1 : split.d1c).push_back(data[order[i]]);
    }
    return split;
}

inline DatasetSplit split_dataset(const TrajectoryDataset& data, std::uint64_t seed) {
    Rng rng(seed);
    return split_dataset(data, rng);
}

/// Count-ratio behavioral cloning over a (possibly abstract) state space:
/// pi(a|x) = n_h(x,a)/n_h(x), uniform where n_h(x) = 0.
template <class StateMap>
Policy bc_policy(const TrajectoryDataset& data, const Dimensions& dims, StateMap&& map) {
    StateActionTable counts(dims.horizon, dims.num_states, dims.num_actions, 0.0);
    for (const auto& tr : data) {
        if (tr.length() != dims.horizon) throw ConfigError("bc_policy: trajectory length differs from horizon");
        for (std::size_t h = 0; h < dims.horizon; ++h) {
            const std::size_t x = map(h, tr[h].state);
            if (x >= dims.num_states || tr[h].action >= dims.num_actions) {
                throw ConfigError("bc_policy: index out of range");
            }
            counts(h, x, tr[h].action) += 1.0;
        }
    }
    const double uniform = 1.0 / static_cast<double>(dims.num_actions);
    for (std::size_t h = 0; h < dims.horizon; ++h) {
        for (std::size_t s = 0; s < dims.num_states; ++s) {
            auto r = counts.row(h, s);
            const double n = std::accumulate(r.begin(), r.end(), 0.0);
            for (double& v : r) v = n > 0.0 ? v / n : uniform;
        }
    }
    return Policy(std::move(counts), /*renormalize=*/true);
}

inline Policy bc_policy(const TrajectoryDataset& data, const Dimensions& dims) {
    return bc_policy(data, dims, [](std::size_t, std::size_t s) { return s; });
}

/// True iff the state at every step 0..h lies in the visited set of that step.
template <class StateMap>
bool trajectory_in_tr_set(const Trajectory& tr, std::size_t h, const VisitedStateSets& visited,
                          StateMap&& map) {
    if (h >= tr.length() || h >= visited.horizon()) throw ConfigError("trajectory_in_tr_set: step out of range");
    for (std::size_t l = 0; l <= h; ++l) {
        if (!visited.contains(l, map(l, tr[l].state))) return false;
    }
    return true;
}

inline bool trajectory_in_tr_set(const Trajectory& tr, std::size_t h, const VisitedStateSets& visited) {
    return trajectory_in_tr_set(tr, h, visited, [](std::size_t, std::size_t s) { return s; });
}

/// The two halves of the transition-aware estimate.
struct TransitionAwareTerms {
    /// Rollout frequencies restricted to prefixes inside the visited region.
    StateActionTable observed;
    /// Held-out frequencies of prefixes that leave the visited region.
    StateActionTable unobserved;
};

namespace detail {

/// Accumulates 1{tr in region up to h} (or its complement) into `out` with
/// weight `w`. Membership is monotone in h, so one pass per trajectory suffices.
template <class StateMap>
void accumulate_region(const TrajectoryDataset& data, const VisitedStateSets& visited, bool inside,
                       double w, StateMap& map, StateActionTable& out) {
    const std::size_t H = out.horizon();
    for (const auto& tr : data) {
        bool in_region = true;
        for (std::size_t h = 0; h < H; ++h) {
            const std::size_t x = map(h, tr[h].state);
            in_region = in_region && visited.contains(h, x);
            if (in_region == inside) out(h, x, tr[h].action) += w;
        }
    }
}

} // namespace detail

/**
 * Both terms of the transition-aware estimator over a (possibly abstract)
 * state space given by `map`. The region is built from states visited in
 * split.d1. An empty `rollouts` set yields a zero first term.
 */
template <class StateMap>
TransitionAwareTerms transition_aware_terms(const DatasetSplit& split, const TrajectoryDataset& rollouts,
                                            const Dimensions& dims, StateMap map) {
    if (split.d1c.empty()) throw ConfigError("transition_aware_estimator: empty held-out half");
    const VisitedStateSets visited =
        VisitedStateSets::from_dataset(split.d1, dims.horizon, dims.num_states, map);
    TransitionAwareTerms terms{StateActionTable(dims.horizon, dims.num_states, dims.num_actions, 0.0),
                               StateActionTable(dims.horizon, dims.num_states, dims.num_actions, 0.0)};
    if (!rollouts.empty()) {
        detail::accumulate_region(rollouts, visited, true, 1.0 / static_cast<double>(rollouts.size()), map,
                                  terms.observed);
    }
    detail::accumulate_region(split.d1c, visited, false, 1.0 / static_cast<double>(split.d1c.size()), map,
                              terms.unobserved);
    return terms;
}

inline OccupancyMeasure combine_terms(const TransitionAwareTerms& terms) {
    StateActionTable d = terms.observed;
    for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] += terms.unobserved.data()[i];
    return OccupancyMeasure(std::move(d), /*is_estimate=*/true);
}

/**
 * d-tilde_h(s,a) = (1/|D'_env|) sum_{tr in D'_env} 1{tr_h = (s,a), tr_h in Tr_h}
 *                + (1/|D_1^c|) sum_{tr in D_1^c} 1{tr_h = (s,a), tr_h not in Tr_h}.
 *
 * `rollouts` must come from bc_policy(split.d1). Layers are not renormalized.
 */
inline OccupancyMeasure transition_aware_estimator(const DatasetSplit& split, const TrajectoryDataset& rollouts,
                                                   const Dimensions& dims) {
    if (rollouts.empty()) throw ConfigError("transition_aware_estimator: empty rollout set");
    validate_dataset(split.d1, dims);
    validate_dataset(split.d1c, dims);
    validate_dataset(rollouts, dims);
    return combine_terms(
        transition_aware_terms(split, rollouts, dims, [](std::size_t, std::size_t s) { return s; }));
}

} // namespace tabular_ail
