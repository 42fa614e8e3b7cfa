#ifndef CONEWALK_RNG_HPP
#define CONEWALK_RNG_HPP

#include "conewalk/types.hpp"

#include <array>
#include <cstdint>

namespace conewalk {

/// Philox4x64-10 counter-based block generator. Pure function of (counter, key):
/// any (seed, stream, step) address maps to the same block regardless of how many
/// threads are drawing, which is what makes parallel Monte Carlo runs replayable.
std::array<std::uint64_t, 4> philox4x64(const std::array<std::uint64_t, 4>& counter,
                                        const std::array<std::uint64_t, 2>& key);

/// Uniform in the open interval (0,1) from one 64-bit word.
double uniform_from_bits(std::uint64_t w);

/// Derives an independent seed from (base, salt); used to decorrelate the RNG
/// streams of distinct estimators that share one user-facing base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

/// Addressable source of standard normal variates, keyed by (seed, stream).
/// fill(step, ...) is deterministic per (key, step) and never touches shared
/// state, so concurrent callers need no coordination.
class NormalSource {
public:
    NormalSource(std::uint64_t seed, std::uint64_t stream) : key_{seed, stream} {}

    /// Writes `count` independent N(0,1) samples for the given step index.
    void fill(std::uint64_t step, double* out, int count) const;

    Vec normal_vec(std::uint64_t step, int k) const;

private:
    std::array<std::uint64_t, 2> key_;
};

/// Sequential convenience stream over the same generator. Streams with distinct
/// (seed, stream) pairs are independent; reusing a pair replays the sequence.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0) : key_{seed, stream} {}

    double uniform();  // in (0,1)
    double uniform_in(double lo, double hi);
    double normal();
    Vec normal_vec(int k);

private:
    std::array<std::uint64_t, 2> key_;
    std::uint64_t block_ = 0;
    std::array<double, 4> buf_{};
    int pos_ = 4;
    double cached_normal_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace conewalk

#endif
