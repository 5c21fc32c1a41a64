#ifndef UASR_CORE_RNG_HPP
#define UASR_CORE_RNG_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "uasr/core/errors.hpp"

namespace uasr {

// Seeded random source. The engine (mt19937_64) has a standardized output
// sequence; every distribution on top of it is implemented here rather than
// taken from <random>, whose distributions differ between standard libraries.
class Rng {
public:
    static constexpr std::string_view algorithm = "mt19937_64+splitmix";

    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(mix(seed)) {}

    std::uint64_t seed() const { return seed_; }

    // Independent child stream keyed by a fixed label, so stages can be re-run
    // on their own and still draw the same numbers.
    Rng split(std::string_view label) const {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : label) {
            h ^= c;
            h *= 1099511628211ull;
        }
        return Rng(mix(seed_ ^ h));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        if (n == 0) throw Error("Rng::index: empty range");
        const std::uint64_t bound = n;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % bound);
    }

    // Inclusive integer range.
    std::size_t range(std::size_t lo, std::size_t hi) { return lo + index(hi - lo + 1); }

    // Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[index(i)]);
        }
    }
    template <class T>
    void shuffle(std::vector<T>& items) {
        shuffle(std::span<T>(items));
    }

private:
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Draws indices with probability proportional to fixed non-negative weights.
class DiscreteSampler {
public:
    DiscreteSampler() = default;
    explicit DiscreteSampler(std::span<const double> weights) {
        cumulative_.reserve(weights.size());
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw Error("DiscreteSampler: invalid weight");
            total += w;
            cumulative_.push_back(total);
        }
        if (total <= 0.0) throw Error("DiscreteSampler: weights sum to zero");
    }

    std::size_t size() const { return cumulative_.size(); }
    bool empty() const { return cumulative_.empty(); }

    std::size_t operator()(Rng& rng) const {
        const double u = rng.uniform() * cumulative_.back();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        auto i = static_cast<std::size_t>(it - cumulative_.begin());
        // skip zero-weight entries that a boundary draw could land on
        while (i + 1 < cumulative_.size() && (i == 0 ? cumulative_[0] : cumulative_[i] - cumulative_[i - 1]) == 0.0) ++i;
        return std::min(i, cumulative_.size() - 1);
    }

    double probability(std::size_t i) const {
        const double prev = i == 0 ? 0.0 : cumulative_[i - 1];
        return (cumulative_[i] - prev) / cumulative_.back();
    }

private:
    std::vector<double> cumulative_;
};

} // namespace uasr

#endif
