#include "conewalk/rng.hpp"

#include <cmath>
#include <numbers>

namespace conewalk {

namespace {

constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMult1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

}  // namespace

std::array<std::uint64_t, 4> philox4x64(const std::array<std::uint64_t, 4>& counter,
                                        const std::array<std::uint64_t, 2>& key) {
    std::array<std::uint64_t, 4> c = counter;
    std::uint64_t k0 = key[0];
    std::uint64_t k1 = key[1];
    for (int round = 0; round < 10; ++round) {
        std::uint64_t hi0, lo0, hi1, lo1;
        mulhilo(kMult0, c[0], hi0, lo0);
        mulhilo(kMult1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return c;
}

double uniform_from_bits(std::uint64_t w) {
    // 52 significant bits, centered in the cell: (w + 0.5) 2^-52 stays strictly
    // inside (0,1) even after rounding, which Box-Muller needs for log(u).
    return (static_cast<double>(w >> 12) + 0.5) * 0x1.0p-52;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    return philox4x64({salt, 0, 0, 0}, {base, 0x7a3c9d5b2e8f1647ULL})[0];
}

namespace {

// Four N(0,1) samples from one block via two Box-Muller pairs.
inline void normals_from_block(const std::array<std::uint64_t, 4>& w, double out[4]) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double u0 = uniform_from_bits(w[0]);
    const double u1 = uniform_from_bits(w[1]);
    const double u2 = uniform_from_bits(w[2]);
    const double u3 = uniform_from_bits(w[3]);
    const double r0 = std::sqrt(-2.0 * std::log(u0));
    const double r1 = std::sqrt(-2.0 * std::log(u2));
    out[0] = r0 * std::cos(two_pi * u1);
    out[1] = r0 * std::sin(two_pi * u1);
    out[2] = r1 * std::cos(two_pi * u3);
    out[3] = r1 * std::sin(two_pi * u3);
}

}  // namespace

void NormalSource::fill(std::uint64_t step, double* out, int count) const {
    int produced = 0;
    std::uint64_t block = 0;
    while (produced < count) {
        double z[4];
        normals_from_block(philox4x64({step, block, 0, 0}, key_), z);
        for (int j = 0; j < 4 && produced < count; ++j) {
            out[produced++] = z[j];
        }
        ++block;
    }
}

Vec NormalSource::normal_vec(std::uint64_t step, int k) const {
    Vec v(k);
    fill(step, v.data(), k);
    return v;
}

double RandomStream::uniform() {
    if (pos_ == 4) {
        const auto w = philox4x64({block_++, 0, 0, 1}, key_);
        for (int j = 0; j < 4; ++j) buf_[static_cast<std::size_t>(j)] = uniform_from_bits(w[static_cast<std::size_t>(j)]);
        pos_ = 0;
    }
    return buf_[static_cast<std::size_t>(pos_++)];
}

double RandomStream::uniform_in(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double RandomStream::normal() {
    if (have_cached_) {
        have_cached_ = false;
        return cached_normal_;
    }
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double u0 = uniform();
    const double u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u0));
    cached_normal_ = r * std::sin(two_pi * u1);
    have_cached_ = true;
    return r * std::cos(two_pi * u1);
}

Vec RandomStream::normal_vec(int k) {
    Vec v(k);
    for (int i = 0; i < k; ++i) v[i] = normal();
    return v;
}

}  // namespace conewalk
