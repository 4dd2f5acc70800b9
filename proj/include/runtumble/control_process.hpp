#pragma once

#include <cmath>
#include <cstdint>

#include "chemo_field.hpp"
#include "internal_process.hpp"
#include "model_params.hpp"
#include "random_streams.hpp"
#include "velocity_jump.hpp"

namespace runtumble {

// Gradient-sensing companion process.  It carries no internal variable; its
// turning rate reads the chemoattractant gradient directly,
//
//   lam_c(x, v) = lambda0 - epsilon * A(x) * v,
//   A(x) = b * tau / (1 + lambda0*tau) * gradS(x),
//
// chosen so both processes share the same advection-diffusion limit.  The
// rate is frozen over a substep, making the jump solve an exact division.
struct ControlParticle {
    double x = 0.0;
    int v = 1;
    double t = 0.0;
    std::uint64_t n = 0;
    double acc = 0.0;
    double theta_target = 0.0;
};

inline ControlParticle make_control_particle(double x0, int v0, const CoupledStream& stream) {
    ControlParticle p;
    p.x = x0;
    p.v = v0;
    p.theta_target = stream.theta(1);
    return p;
}

// Drift sensitivity A(x); also the drift coefficient of the diffusion limit.
inline double drift_field(const ModelParams& prm, const ChemoField& field, double x) {
    return prm.b * prm.tau / (1.0 + prm.lambda0 * prm.tau) * field.gradient(x);
}

inline double control_rate(const ModelParams& prm, const ChemoField& field, double x,
                           int v, std::uint64_t* clip_count = nullptr) {
    const double dv = v;
    const double a = drift_field(prm, field, x);
    const double lam = prm.lambda0 - prm.epsilon * a * dv;
    if (prm.rate_floor && lam < *prm.rate_floor) {
        if (clip_count) ++*clip_count;
        return *prm.rate_floor;
    }
    if (!(lam > 0.0))
        throw std::runtime_error("control rate: nonpositive rate and no floor configured");
    return lam;
}

struct ControlStepper {
    ControlParticle& p;
    const ModelParams& prm;
    const ChemoField& field;
    const Domain& dom;
    const CoupledStream& stream;
    StepDiag* diag;

    double lam = 0.0, dv = 1.0;

    ControlStepper(ControlParticle& particle, const ModelParams& params,
                   const ChemoField& f, const Domain& d, const CoupledStream& s,
                   StepDiag* dg)
        : p(particle), prm(params), field(f), dom(d), stream(s), diag(dg) {}

    double dt() const { return prm.dt; }

    void begin_substep() {
        dv = p.v;
        lam = control_rate(prm, field, p.x, p.v, diag ? &diag->clips : nullptr);
    }

    double integral(double h) const { return lam * h; }

    double solve_jump(double residual, double /*h_max*/, double /*integral_hmax*/) const {
        return residual / lam;
    }

    void move(double h) {
        p.x = p.x + prm.epsilon * dv * h;
        resolve_boundary(dom, p.x, p.v);
    }
};

inline void advance_until(ControlParticle& p, const ModelParams& prm,
                          const ChemoField& field, const Domain& dom,
                          const CoupledStream& stream, double t_end,
                          StepDiag* diag = nullptr) {
    ControlStepper st{p, prm, field, dom, stream, diag};
    advance_jump_process(st, t_end);
}

}  // namespace runtumble
