#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace gap {

namespace detail {

// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

/**
 * Seedable pseudo-random generator handed explicitly to every sampler.
 *
 * Independent streams are obtained with substream(), which hashes a master
 * seed together with a tuple of stream coordinates (e.g. EM iteration and
 * document index). Streams derived this way depend only on their
 * coordinates, so work partitioned across threads reproduces the serial
 * result exactly.
 */
class Rng {
  public:
    using engine_type = std::mt19937_64;
    using result_type = engine_type::result_type;

    explicit Rng(std::uint64_t seed = 0) : engine_(detail::mix64(seed)) {}

    static Rng substream(std::uint64_t seed,
                         std::initializer_list<std::uint64_t> coords) {
        std::uint64_t h = detail::mix64(seed);
        for (auto c : coords) {
            h = detail::mix64(h ^ detail::mix64(c + 0x632be59bd9b4e019ULL));
        }
        return Rng(h);
    }

    static constexpr result_type min() { return engine_type::min(); }
    static constexpr result_type max() { return engine_type::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Fresh 64-bit value, typically used as the master seed of a substream family.
    std::uint64_t next_seed() { return engine_(); }

    friend bool operator==(const Rng&, const Rng&) = default;

  private:
    engine_type engine_;
};

} // namespace gap
