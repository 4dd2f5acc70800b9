#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "model_params.hpp"
#include "random_streams.hpp"

namespace runtumble {

enum class Boundary { Reflecting, Periodic };

struct Domain {
    double length = 20.0;
    Boundary bc = Boundary::Reflecting;

    void validate() const {
        if (!(length > 0.0)) throw std::invalid_argument("domain: length must be > 0");
    }
};

// Applies the boundary condition to a post-move position.  Reflection reverses
// the velocity sign; it does not consume a jump variate.
inline void resolve_boundary(const Domain& d, double& x, int& v) {
    if (d.bc == Boundary::Periodic) {
        if (x < 0.0 || x >= d.length) {
            x -= d.length * std::floor(x / d.length);
            if (x >= d.length) x = 0.0;
        }
    } else {
        while (true) {
            if (x < 0.0) {
                x = -x;
                v = -v;
            } else if (x > d.length) {
                x = 2.0 * d.length - x;
                v = -v;
            } else {
                break;
            }
        }
    }
}

struct StepDiag {
    std::uint64_t jumps = 0;
    std::uint64_t clips = 0;
    double max_jump_integral_error = 0.0;
};

// Finds h in (0, h_max] with I(h) = target, where I is a strictly increasing
// rate integral with I(0) = 0 and I(h_max) = integral_hmax >= target.  Newton
// from the caller's guess, kept inside a shrinking bracket; falls back to
// bisection when a Newton step leaves the bracket or stalls.
template <class F, class DF>
double invert_monotone_integral(F&& integral, DF&& derivative, double target,
                                double h_max, double integral_hmax, double guess) {
    const double tol = 1e-12 * std::max(1.0, target);
    if (integral_hmax < target) {
        if (target - integral_hmax <= tol) return h_max;
        throw std::runtime_error("jump solve: threshold not reachable within substep");
    }
    double lo = 0.0, hi = h_max;
    double h = guess;
    if (!(h > 0.0) || h > h_max) h = 0.5 * h_max;
    for (int it = 0; it < 50; ++it) {
        const double f = integral(h) - target;
        if (std::abs(f) < tol) return h;
        if (f > 0.0) hi = h;
        else lo = h;
        const double d = derivative(h);
        double next = (d > 0.0) ? h - f / d : -1.0;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        h = next;
    }
    for (int it = 0; it < 200; ++it) {
        h = 0.5 * (lo + hi);
        const double f = integral(h) - target;
        if (std::abs(f) < tol || hi - lo <= 1e-16 * h_max) return h;
        if (f > 0.0) hi = h;
        else lo = h;
    }
    return h;
}

// Substep loop shared by the fine-scale and control processes.  A Stepper
// freezes its substep coefficients in begin_substep(), reports the rate
// integral over a candidate substep, solves for jump times, and moves its
// particle; the loop owns the jump bookkeeping so both processes consume
// stream variates identically.  With a constant chemoattractant both steppers
// reduce to the same arithmetic, keeping the coupled pair bitwise equal.
template <class Stepper>
void advance_jump_process(Stepper& st, double t_end) {
    auto& p = st.p;
    StepDiag* diag = st.diag;
    while (p.t < t_end) {
        const double rem = t_end - p.t;
        const bool trunc = rem <= st.dt();
        const double h = trunc ? rem : st.dt();
        st.begin_substep();
        const double inc = st.integral(h);
        if (!(inc > 0.0))
            throw std::runtime_error("velocity jump: rate integral not positive over substep");
        if (p.acc + inc >= p.theta_target) {
            const double residual = p.theta_target - p.acc;
            const double hj = st.solve_jump(residual, h, inc);
            if (diag) {
                const double err = std::abs(st.integral(hj) - residual);
                if (err > diag->max_jump_integral_error) diag->max_jump_integral_error = err;
                ++diag->jumps;
            }
            st.move(hj);
            p.t += hj;
            if (p.t > t_end) p.t = t_end;
            p.v = st.stream.direction(p.n + 1);
            p.n += 1;
            p.theta_target = st.stream.theta(p.n + 1);
            p.acc = 0.0;
        } else {
            st.move(h);
            p.t = trunc ? t_end : p.t + h;
            p.acc += inc;
        }
    }
}

}  // namespace runtumble
