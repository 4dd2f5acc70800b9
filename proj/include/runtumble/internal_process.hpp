#pragma once

#include <cmath>
#include <cstdint>

#include "chemo_field.hpp"
#include "model_params.hpp"
#include "random_streams.hpp"
#include "velocity_jump.hpp"

namespace runtumble {

// Run-and-tumble particle with one adaptive internal variable.  The state
// tracked between jumps is the deviation z = S(x) - y, which relaxes toward
// the moving target epsilon*tau*grad S(x)*v; the internal variable itself is
// recovered as y = S(x) - z.
//
// Between jumps the pair (x, z) is advanced on substeps of length dt.  With
// the gradient frozen at the substep start the z-equation is linear, so each
// substep is closed-form:
//
//   x(h) = x0 + epsilon*v*h
//   z(h) = exp(-h/tau)*z0 + epsilon*decay_integral(tau,h)*gradS(x0)*v
//
// and the turning-rate integral over the substep is the integral of the rate
// linearized at z0 along that closed form,
//
//   I(h) = lam(z0)*h + lam'(z0)*((decay_integral(tau,h) - h)*z0
//          + epsilon*response_integral(tau,h)*gradS(x0)*v),
//
// which for the linear rate kind is exact.  Jumps fire when the accumulated
// integral reaches the stream's exponential threshold; the jump time inside a
// substep is solved to 1e-12 relative accuracy.
struct InternalParticle {
    double x = 0.0;
    int v = 1;
    double z = 0.0;
    double t = 0.0;
    std::uint64_t n = 0;          // completed jumps; v was drawn at index n
    double acc = 0.0;             // rate integral accumulated since the last jump
    double theta_target = 0.0;    // threshold theta(n+1)
};

// Starts a particle in local equilibrium (y = S(x), i.e. z = 0).
inline InternalParticle make_internal_particle(double x0, int v0, const CoupledStream& stream) {
    InternalParticle p;
    p.x = x0;
    p.v = v0;
    p.theta_target = stream.theta(1);
    return p;
}

inline double internal_y(const InternalParticle& p, const ChemoField& field) {
    return field.value(p.x) - p.z;
}

struct InternalStepper {
    InternalParticle& p;
    const ModelParams& prm;
    const ChemoField& field;
    const Domain& dom;
    const CoupledStream& stream;
    StepDiag* diag;

    // full-substep coefficients, reused on every untruncated substep
    double decay_full, dint_full, rint_full;
    // frozen at substep start
    double g = 0.0, lam = 0.0, slope = 0.0, z0 = 0.0, dv = 1.0;

    InternalStepper(InternalParticle& particle, const ModelParams& params,
                    const ChemoField& f, const Domain& d, const CoupledStream& s,
                    StepDiag* dg)
        : p(particle), prm(params), field(f), dom(d), stream(s), diag(dg) {
        decay_full = std::exp(-prm.dt / prm.tau);
        dint_full = prm.tau * (1.0 - decay_full);
        rint_full = prm.tau * (prm.dt - dint_full);
    }

    double dt() const { return prm.dt; }

    void begin_substep() {
        g = field.gradient(p.x);
        z0 = p.z;
        dv = p.v;
        lam = turning_rate(prm, z0, diag ? &diag->clips : nullptr);
        slope = turning_rate_slope(prm, z0);
    }

    struct Cf {
        double dec, di, ri;
    };

    Cf cf(double h) const {
        if (h == prm.dt) return {decay_full, dint_full, rint_full};
        const double dec = std::exp(-h / prm.tau);
        const double di = prm.tau * (1.0 - dec);
        return {dec, di, prm.tau * (h - di)};
    }

    double integral(double h) const {
        const Cf c = cf(h);
        return lam * h + slope * ((c.di - h) * z0 + prm.epsilon * c.ri * g * dv);
    }

    // dI/dh: the linearized rate evaluated on the closed-form z at h.
    double integrand_at(double h) const {
        const Cf c = cf(h);
        const double zh = c.dec * z0 + prm.epsilon * c.di * g * dv;
        return lam + slope * (zh - z0);
    }

    double solve_jump(double residual, double h_max, double integral_hmax) const {
        return invert_monotone_integral(
            [this](double h) { return integral(h); },
            [this](double h) { return integrand_at(h); }, residual, h_max,
            integral_hmax, residual / lam);
    }

    void move(double h) {
        const Cf c = cf(h);
        p.z = c.dec * z0 + prm.epsilon * c.di * g * dv;
        p.x = p.x + prm.epsilon * dv * h;
        resolve_boundary(dom, p.x, p.v);
    }
};

// One closed-form substep without jump logic; exposed for direct testing.
inline void substep_advance(InternalParticle& p, const ModelParams& prm,
                            const ChemoField& field, const Domain& dom, double h) {
    const CoupledStream unused(0, 0);
    InternalStepper st{p, prm, field, dom, unused, nullptr};
    st.begin_substep();
    st.move(h);
    p.t += h;
}

// Rate integral over a substep of length h starting from the particle's
// current state (gradient frozen at p.x).
inline double substep_rate_integral(const InternalParticle& p, const ModelParams& prm,
                                    const ChemoField& field, double h) {
    InternalParticle q = p;
    Domain dom;
    const CoupledStream unused(0, 0);
    InternalStepper st{q, prm, field, dom, unused, nullptr};
    st.begin_substep();
    return st.integral(h);
}

// Jump time within a substep: smallest h with I(h) = residual.
inline double solve_jump_time(const InternalParticle& p, const ModelParams& prm,
                              const ChemoField& field, double residual, double h_max) {
    InternalParticle q = p;
    Domain dom;
    const CoupledStream unused(0, 0);
    InternalStepper st{q, prm, field, dom, unused, nullptr};
    st.begin_substep();
    return st.solve_jump(residual, h_max, st.integral(h_max));
}

inline void advance_until(InternalParticle& p, const ModelParams& prm,
                          const ChemoField& field, const Domain& dom,
                          const CoupledStream& stream, double t_end,
                          StepDiag* diag = nullptr) {
    InternalStepper st{p, prm, field, dom, stream, diag};
    advance_jump_process(st, t_end);
}

}  // namespace runtumble
