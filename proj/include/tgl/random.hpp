#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <utility>

namespace tgl {

/**
 * xoshiro256** (Blackman & Vigna), seeded through splitmix64.
 *
 * Every derived quantity (uniforms, Gaussians, bounded integers, shuffles) is
 * computed here from the raw 64-bit stream rather than through <random>
 * distributions, whose algorithms are implementation-defined. This keeps
 * simulated cohorts and fold assignments identical across platforms.
 */
class Xoshiro256
{
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed = 42) noexcept
    {
        std::uint64_t x = seed;
        for (auto& s : state_) {
            s = splitmix64(x);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Standard normal via the Box-Muller transform; the second variate is cached.
    double normal() noexcept
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Unbiased integer in [0, bound) by rejection sampling.
    std::uint64_t below(std::uint64_t bound) noexcept
    {
        if (bound <= 1) {
            return 0;
        }
        const std::uint64_t limit = max() - max() % bound;
        std::uint64_t draw = (*this)();
        while (draw >= limit) {
            draw = (*this)();
        }
        return draw % bound;
    }

    /// Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::span<T> values) noexcept
    {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept
    {
        return (x << k) | (x >> (64 - k));
    }

    static constexpr std::uint64_t splitmix64(std::uint64_t& x) noexcept
    {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace tgl
