#pragma once

#include <cmath>
#include <cstdint>

namespace runtumble {

// Counter-based randomness shared by a coupled particle pair.
//
// Every variate is a pure function of (master_seed, particle_id, stream kind,
// index), so draws can be made in any order, from any thread, and a particle's
// trajectory does not depend on which ensemble it is embedded in.  Both the
// fine-scale process and its control companion read the same jump variates:
// theta(n) is the unit-exponential threshold for the n-th jump and
// direction(n) the post-jump velocity sign, with direction(0) serving as the
// initial sign when the caller does not prescribe one.

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ULL;
    z ^= z >> 33;
    return z;
}

}  // namespace detail

class CoupledStream {
  public:
    CoupledStream(std::uint64_t master_seed, std::uint64_t particle_id)
        : seed_(master_seed), id_(particle_id) {}

    std::uint64_t master_seed() const { return seed_; }
    std::uint64_t particle_id() const { return id_; }

    // Unit-exponential jump threshold, n >= 1.
    double theta(std::uint64_t n) const {
        return -std::log(to_unit(word(kTheta, n)));
    }

    // Post-jump velocity sign, n >= 0.
    int direction(std::uint64_t n) const {
        return (word(kDirection, n) >> 63) ? 1 : -1;
    }

    // Uniform draw on [lo, hi) for initial-position sampling.
    double uniform_init(double lo, double hi, std::uint64_t n = 0) const {
        return lo + (hi - lo) * to_unit(word(kInit, n));
    }

    // Standard normal, indexed; used by the diffusion-limit sampler.
    double normal(std::uint64_t n) const {
        const double u1 = to_unit(word(kNormal, 2 * n));
        const double u2 = to_unit(word(kNormal, 2 * n + 1));
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

  private:
    enum Kind : std::uint64_t { kTheta = 1, kDirection = 2, kInit = 3, kNormal = 4 };

    static constexpr double kPi = 3.14159265358979323846;

    std::uint64_t word(std::uint64_t kind, std::uint64_t n) const {
        std::uint64_t h = seed_ + 0x9e3779b97f4a7c15ULL;
        h = detail::mix64(h ^ (id_ * 0xbf58476d1ce4e5b9ULL));
        h = detail::mix64(h ^ (kind * 0x94d049bb133111ebULL));
        h = detail::mix64(h ^ n);
        return h;
    }

    // Midpoints (k + 1/2) / 2^52 lie strictly inside (0, 1), so -log stays
    // finite and positive.
    static double to_unit(std::uint64_t w) {
        return (static_cast<double>(w >> 12) + 0.5) * 0x1.0p-52;
    }

    std::uint64_t seed_;
    std::uint64_t id_;
};

}  // namespace runtumble
