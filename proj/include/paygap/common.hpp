#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace paygap {

// Thrown for all user-facing validation problems (bad schema, bad config,
// invariant violations in input data). Estimation failures use std::runtime_error.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline double weighted_sum(std::span<const double> w) {
    return std::accumulate(w.begin(), w.end(), 0.0);
}

inline double weighted_mean(std::span<const double> x, std::span<const double> w) {
    if (x.size() != w.size()) throw std::invalid_argument("weighted_mean: size mismatch");
    double sw = 0.0, sxw = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sxw += x[i] * w[i];
    }
    if (sw <= 0.0) throw std::invalid_argument("weighted_mean: nonpositive weight total");
    return sxw / sw;
}

// Population-style weighted variance (no Bessel correction); weights are
// treated as sampling weights, so the result is invariant to rescaling them.
inline double weighted_var(std::span<const double> x, std::span<const double> w) {
    double m = weighted_mean(x, w);
    double sw = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - m;
        sw += w[i];
        s2 += w[i] * d * d;
    }
    return s2 / sw;
}

// Weighted inverse-CDF quantile: smallest value whose cumulative weight share
// reaches q. Reduces to the order statistic at ceil(q*n) for unit weights.
double weighted_quantile(std::vector<double> values, std::vector<double> weights, double q);

// splitmix64-style mixing for deriving independent RNG streams from a base
// seed plus structural indices (grid cell, bootstrap replicate, fold, ...).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(mix(seed) ^ a) ^ b) ^ c);
}

// Seeded RNG with hand-rolled draws so streams are reproducible independent
// of standard-library distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    // Uniform on [0,1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    // Uniform on (0,1].
    double uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }
    double normal() {
        double u1 = uniform_pos(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }
    int pick_level(std::span<const double> probs) {
        double u = uniform(), cum = 0.0;
        for (std::size_t k = 0; k < probs.size(); ++k) {
            cum += probs[k];
            if (u < cum) return static_cast<int>(k);
        }
        return static_cast<int>(probs.size()) - 1;
    }
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::uint64_t state_;
};

// Deterministic numeric formatting for CSV/report output.
inline std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
}

inline std::string fmt_fixed(double v, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return std::string(buf);
}

std::vector<std::string> split_string(const std::string& s, char sep);
std::string trim_string(const std::string& s);

}  // namespace paygap
