#ifndef OCETS_RNG_HPP
#define OCETS_RNG_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "ocets/errors.hpp"

namespace ocets {

/// Seeded deterministic generator (xoshiro256** seeded through splitmix64).
/// The same seed yields the same stream on every platform; sub-streams for
/// independent purposes (init / shuffle / noise) come from split() so that
/// enabling one consumer does not shift the others.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01();
    double uniform(double lo, double hi);

    /// Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    /// Box-Muller; pairs are cached, stream consumption is deterministic.
    double normal(double mean, double stddev);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

    /// Independent sub-stream; distinct salts give distinct streams.
    Rng split(std::uint64_t salt) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> s_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Stream salts for the fixed sub-stream purposes.
namespace rng_stream {
inline constexpr std::uint64_t init = 0x01;
inline constexpr std::uint64_t shuffle = 0x02;
inline constexpr std::uint64_t noise = 0x03;
inline constexpr std::uint64_t instance_base = 0x1000;
}  // namespace rng_stream

}  // namespace ocets

#endif
