#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

namespace runtumble {

enum class RateKind { Arctan, Linear };

// Parameters of the velocity-jump model.
//
//   epsilon  scale separation: particle speed is epsilon, diffusive time is
//            t_bar = epsilon^2 * t
//   tau      relaxation time of the internal adaptation variable
//   lambda0  baseline turning rate
//   b        sensitivity of the turning rate to the deviation variable
//   dt       substep length of the exact-in-tau discretization
//   rate_floor  optional clamp keeping rates positive; clips are counted
struct ModelParams {
    double epsilon = 0.2;
    double tau = 1.0;
    double lambda0 = 1.0;
    double b = 1.0;
    RateKind rate_kind = RateKind::Arctan;
    double dt = 0.1;
    std::optional<double> rate_floor;

    void validate() const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("params: epsilon must be > 0");
        if (!(tau > 0.0)) throw std::invalid_argument("params: tau must be > 0");
        if (!(lambda0 > 0.0)) throw std::invalid_argument("params: lambda0 must be > 0");
        if (!(dt > 0.0)) throw std::invalid_argument("params: dt must be > 0");
        if (rate_floor && !(*rate_floor >= 0.0))
            throw std::invalid_argument("params: rate_floor must be >= 0");
    }
};

// Turning rate as a function of the deviation z = S(x) - y.
// Arctan kind: 2*lambda0*(1/2 - atan(pi*z/(2*lambda0))/pi), bounded in
// (0, 2*lambda0) with slope -1 at z = 0.  Linear kind: lambda0 - b*z,
// clamped at rate_floor when configured.
inline double turning_rate(const ModelParams& p, double z,
                           std::uint64_t* clip_count = nullptr) {
    double lam;
    if (p.rate_kind == RateKind::Arctan) {
        constexpr double pi = 3.14159265358979323846;
        lam = 2.0 * p.lambda0 * (0.5 - std::atan(pi * z / (2.0 * p.lambda0)) / pi);
    } else {
        lam = p.lambda0 - p.b * z;
    }
    if (p.rate_floor && lam < *p.rate_floor) {
        if (clip_count) ++*clip_count;
        return *p.rate_floor;
    }
    return lam;
}

// d(turning_rate)/dz at z; zero where the floor is active.
inline double turning_rate_slope(const ModelParams& p, double z) {
    double lam, slope;
    if (p.rate_kind == RateKind::Arctan) {
        constexpr double pi = 3.14159265358979323846;
        const double s = pi * z / (2.0 * p.lambda0);
        lam = 2.0 * p.lambda0 * (0.5 - std::atan(s) / pi);
        slope = -1.0 / (1.0 + s * s);
    } else {
        lam = p.lambda0 - p.b * z;
        slope = -p.b;
    }
    if (p.rate_floor && lam < *p.rate_floor) return 0.0;
    return slope;
}

// integral_0^h exp(-s/tau) ds = tau*(1 - exp(-h/tau)).
inline double decay_integral(double tau, double h) {
    return tau * (1.0 - std::exp(-h / tau));
}

// integral_0^h tau*(1 - exp(-s/tau)) ds = h*tau - tau^2*(1 - exp(-h/tau)).
// This weights the frozen-gradient contribution in the per-substep rate
// integral; averaged over a unit-exponential jump threshold it produces the
// drift coefficient tau/(lambda0*(1+lambda0*tau)).
inline double response_integral(double tau, double h) {
    return tau * (h - decay_integral(tau, h));
}

}  // namespace runtumble
