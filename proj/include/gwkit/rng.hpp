#pragma once

#include <cstdint>
#include <random>
#include <span>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace gwkit {

// Seedable generator with reproducible output on every platform.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard, and the distributions come from Boost.Random, whose algorithms
// are fixed by the library rather than by the standard library vendor.
// Independent streams are derived from (seed, stream) through std::seed_seq,
// whose mixing is also specified by the standard.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::seed_seq seq{
            static_cast<std::uint32_t>(seed),
            static_cast<std::uint32_t>(seed >> 32),
            static_cast<std::uint32_t>(stream),
            static_cast<std::uint32_t>(stream >> 32),
        };
        engine_.seed(seq);
    }

    double normal(double mean = 0.0, double sd = 1.0) {
        return boost::random::normal_distribution<double>(mean, sd)(engine_);
    }

    double uniform(double lo = 0.0, double hi = 1.0) {
        return lo + (hi - lo) * boost::random::uniform_01<double>()(engine_);
    }

    // Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) {
        return boost::random::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
    }

    // Fisher-Yates shuffle driven by this generator.
    template <typename T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace gwkit
