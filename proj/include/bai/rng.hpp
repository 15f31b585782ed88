#pragma once
#include <cstdint>
#include <limits>

#include <boost/random/beta_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

namespace bai {

namespace detail {

// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based 64-bit generator keyed by (seed, stream id).
//
// The i-th output is a pure function of (seed, stream id, i), so a stream can
// be re-created anywhere and replays the same sequence. Replication r of an
// experiment uses stream id r; independent sub-streams (rewards, rule
// randomness) are derived with substream().
//
// Satisfies UniformRandomBitGenerator so it can drive Boost.Random
// distributions, which are implementation-defined in Boost rather than in the
// platform's standard library.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
        : seed_(seed), stream_(stream_id) {
        key_ = detail::mix64(seed ^ detail::mix64(stream_id + 0x632be59bd9b4e019ULL));
        key2_ = detail::mix64(key_ ^ 0x9e3779b97f4a7c15ULL);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t x = key_ + (++counter_) * 0x9e3779b97f4a7c15ULL;
        return detail::mix64(detail::mix64(x) ^ key2_);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_; }
    std::uint64_t draws() const noexcept { return counter_; }

    // Independent child stream; deterministic in (parent key, id).
    RngStream substream(std::uint64_t id) const noexcept {
        return RngStream(key_ ^ detail::mix64(id + 0x2545f4914f6cdd1dULL), stream_ + 1);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    // Uniform index in [0, n), unbiased (Lemire's multiply-shift with rejection).
    std::size_t index(std::size_t n) noexcept {
        const std::uint64_t range = static_cast<std::uint64_t>(n);
        __uint128_t m = static_cast<__uint128_t>((*this)()) * range;
        std::uint64_t low = static_cast<std::uint64_t>(m);
        if (low < range) {
            const std::uint64_t threshold = (0 - range) % range;
            while (low < threshold) {
                m = static_cast<__uint128_t>((*this)()) * range;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::size_t>(m >> 64);
    }

    double normal(double mean, double sd) {
        boost::random::normal_distribution<double> dist(mean, sd);
        return dist(*this);
    }

    double beta(double a, double b) {
        boost::random::beta_distribution<double> dist(a, b);
        return dist(*this);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t key2_;
    std::uint64_t counter_ = 0;
};

}  // namespace bai
