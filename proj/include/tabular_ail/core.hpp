#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tabular_ail {

/// Raised for malformed inputs: shape mismatches, invalid distributions,
/// out-of-range parameters.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Tolerance for probability-vector validation on construction.
inline constexpr double kProbTolerance = 1e-9;

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) with 53 random bits. Unlike
/// std::uniform_real_distribution the result does not depend on the standard
/// library implementation.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Inverse-CDF draw from an (assumed normalized) probability vector.
inline std::size_t sample_index(std::span<const double> probs, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        acc += probs[i];
        last_positive = i;
        if (u < acc) return i;
    }
    // rounding: total mass may be a hair below 1
    return last_positive;
}

/// 64-bit FNV-1a; stable across platforms, used to derive RNG streams from names.
inline std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

/// Seeds an independent stream from a list of integers.
inline Rng make_rng(std::initializer_list<std::uint64_t> keys) {
    std::vector<std::uint32_t> words;
    words.reserve(keys.size() * 2);
    for (std::uint64_t k : keys) {
        words.push_back(static_cast<std::uint32_t>(k & 0xffffffffULL));
        words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

/// Phase tags for per-phase RNG streams inside a single algorithm run. Keeping
/// phases on separate streams makes results independent of phase order.
enum class Phase : std::uint64_t {
    demonstrations = 1,
    exploration = 2,
    split = 3,
    rollouts = 4,
    probes = 5,
    baseline = 6,
};

inline Rng phase_rng(std::uint64_t seed, Phase phase) {
    return make_rng({seed, static_cast<std::uint64_t>(phase)});
}

/// Dense H x |S| x |A| array of reals. Step index h is 0-based throughout the
/// library.
class StateActionTable {
public:
    StateActionTable() = default;
    StateActionTable(std::size_t horizon, std::size_t states, std::size_t actions,
                     double fill = 0.0)
        : horizon_(horizon), states_(states), actions_(actions),
          values_(horizon * states * actions, fill) {}

    std::size_t horizon() const { return horizon_; }
    std::size_t num_states() const { return states_; }
    std::size_t num_actions() const { return actions_; }
    std::size_t size() const { return values_.size(); }

    double& operator()(std::size_t h, std::size_t s, std::size_t a) {
        return values_[index(h, s, a)];
    }
    double operator()(std::size_t h, std::size_t s, std::size_t a) const {
        return values_[index(h, s, a)];
    }

    std::span<double> row(std::size_t h, std::size_t s) {
        return {values_.data() + index(h, s, 0), actions_};
    }
    std::span<const double> row(std::size_t h, std::size_t s) const {
        return {values_.data() + index(h, s, 0), actions_};
    }
    std::span<double> layer(std::size_t h) {
        return {values_.data() + h * states_ * actions_, states_ * actions_};
    }
    std::span<const double> layer(std::size_t h) const {
        return {values_.data() + h * states_ * actions_, states_ * actions_};
    }

    std::vector<double>& data() { return values_; }
    const std::vector<double>& data() const { return values_; }

    bool same_shape(const StateActionTable& other) const {
        return horizon_ == other.horizon_ && states_ == other.states_ &&
               actions_ == other.actions_;
    }

    double layer_sum(std::size_t h) const {
        auto l = layer(h);
        return std::accumulate(l.begin(), l.end(), 0.0);
    }

    friend bool operator==(const StateActionTable&, const StateActionTable&) = default;

private:
    std::size_t index(std::size_t h, std::size_t s, std::size_t a) const {
        return (h * states_ + s) * actions_ + a;
    }

    std::size_t horizon_ = 0;
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<double> values_;
};

inline void require_same_shape(const StateActionTable& a, const StateActionTable& b,
                               std::string_view what) {
    if (!a.same_shape(b)) {
        throw ConfigError(std::string(what) + ": shape mismatch (" +
                          std::to_string(a.horizon()) + "x" + std::to_string(a.num_states()) +
                          "x" + std::to_string(a.num_actions()) + " vs " +
                          std::to_string(b.horizon()) + "x" + std::to_string(b.num_states()) +
                          "x" + std::to_string(b.num_actions()) + ")");
    }
}

/// Checks that `p` is a probability vector within kProbTolerance. When
/// `renormalize` is set, a nonnegative vector with positive mass is rescaled
/// in place instead.
inline void check_distribution(std::span<double> p, bool renormalize, std::string_view what) {
    double total = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ConfigError(std::string(what) + ": negative or non-finite probability");
        }
        total += v;
    }
    if (renormalize) {
        if (total <= 0.0) throw ConfigError(std::string(what) + ": zero total mass");
        for (double& v : p) v /= total;
        return;
    }
    if (std::abs(total - 1.0) > kProbTolerance) {
        throw ConfigError(std::string(what) + ": probabilities sum to " + std::to_string(total));
    }
}

} // namespace tabular_ail
