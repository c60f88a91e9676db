#pragma once

#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <iterator>
#include <utility>

namespace oppnet
{
    // Counter-based generator: output i of a stream is mix(key + i * gamma),
    // where mix is the SplitMix64 finalizer. Streams are split by hashing a
    // label into a fresh key, so every named consumer (mobility, workload
    // sizes, interest draws) gets an independent sequence from one run seed.
    // Distributions are implemented here rather than via <random> so that
    // the same seed gives the same trace on every standard library.
    class SplitRng
    {
    public:
        explicit SplitRng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

        static constexpr std::uint64_t mix(std::uint64_t z) noexcept
        {
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            return z ^ (z >> 31);
        }

        std::uint64_t next() noexcept
        {
            ++counter_;
            return mix(key_ + counter_ * kGamma);
        }

        SplitRng split(std::string_view label) const noexcept
        {
            std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
            for (char c : label)
            {
                h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
            }
            return SplitRng(key_, mix(h));
        }

        SplitRng split(std::uint64_t index) const noexcept { return SplitRng(key_, mix(index + kGamma)); }

        // Uniform in [0, 1) with 53 random bits.
        double uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

        double uniform(double lo, double hi) noexcept
        {
            if (lo == hi)
            {
                return lo;
            }
            return lo + (hi - lo) * uniform01();
        }

        // Uniform integer in [0, n) by rejection; n > 0.
        std::uint64_t below(std::uint64_t n)
        {
            if (n == 0)
            {
                throw std::invalid_argument("SplitRng::below(0)");
            }
            const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
            std::uint64_t x = next();
            while (x >= limit)
            {
                x = next();
            }
            return x % n;
        }

        // Uniform integer in [lo, hi].
        std::int64_t between(std::int64_t lo, std::int64_t hi)
        {
            return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
        }

    private:
        static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

        SplitRng(std::uint64_t parent, std::uint64_t salt) noexcept : key_(mix(parent ^ salt)) {}

        std::uint64_t key_;
        std::uint64_t counter_ = 0;
    };

    // Fisher-Yates over any random-access range.
    template <typename Range>
    void shuffle(Range &r, SplitRng &rng)
    {
        const auto n = static_cast<std::uint64_t>(std::size(r));
        for (std::uint64_t i = n; i > 1; --i)
        {
            const auto j = rng.below(i);
            using std::swap;
            swap(r[i - 1], r[j]);
        }
    }

} // namespace oppnet
