#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "chemo_field.hpp"
#include "control_process.hpp"
#include "internal_process.hpp"
#include "parallel.hpp"
#include "random_streams.hpp"
#include "velocity_jump.hpp"

namespace runtumble {

struct PositionInit {
    enum Kind { Point, Uniform } kind = Point;
    double a = 8.0;  // point position, or lower bound
    double b = 0.0;  // upper bound for Uniform
};

struct VelocityInit {
    enum Kind { Fixed, UniformSign } kind = Fixed;
    int v0 = 1;
};

struct InitSpec {
    PositionInit position;
    VelocityInit velocity;
};

// N coupled pairs sharing per-particle jump streams.  Particle i of either
// process reads stream (master_seed, i) only, so a trajectory is independent
// of the ensemble size and of how the advance loop is partitioned over
// threads.
struct Ensemble {
    ModelParams params;
    Domain domain;
    ChemoField field;
    std::uint64_t master_seed = 0;
    std::vector<InternalParticle> internal;
    std::vector<ControlParticle> control;
    double t = 0.0;

    std::size_t size() const { return internal.size(); }
    CoupledStream stream(std::size_t i) const { return CoupledStream(master_seed, i); }
};

inline Ensemble init_ensemble(const ModelParams& params, const Domain& domain,
                              const ChemoField& field, std::size_t n,
                              std::uint64_t master_seed, const InitSpec& spec) {
    params.validate();
    domain.validate();
    if (n == 0) throw std::invalid_argument("ensemble: need at least one particle");
    if (spec.position.kind == PositionInit::Point) {
        if (spec.position.a < 0.0 || spec.position.a > domain.length)
            throw std::invalid_argument("ensemble: initial position outside the domain");
    } else {
        if (!(spec.position.a < spec.position.b) || spec.position.a < 0.0 ||
            spec.position.b > domain.length)
            throw std::invalid_argument("ensemble: initial position interval invalid");
    }
    if (spec.velocity.kind == VelocityInit::Fixed && spec.velocity.v0 != 1 &&
        spec.velocity.v0 != -1)
        throw std::invalid_argument("ensemble: velocity must be +1 or -1");

    Ensemble e;
    e.params = params;
    e.domain = domain;
    e.field = field;
    e.master_seed = master_seed;
    e.internal.reserve(n);
    e.control.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const CoupledStream s = CoupledStream(master_seed, i);
        const double x0 = spec.position.kind == PositionInit::Point
                              ? spec.position.a
                              : s.uniform_init(spec.position.a, spec.position.b);
        const int v0 = spec.velocity.kind == VelocityInit::Fixed ? spec.velocity.v0
                                                                 : s.direction(0);
        e.internal.push_back(make_internal_particle(x0, v0, s));
        e.control.push_back(make_control_particle(x0, v0, s));
    }
    return e;
}

inline void advance(Ensemble& e, double t_end, unsigned workers = 1,
                    StepDiag* diag = nullptr) {
    if (!(t_end >= e.t))
        throw std::invalid_argument("ensemble advance: t_end before current time");
    const std::size_t n = e.size();
    if (diag) {
        std::vector<StepDiag> per(n);
        parallel_for(n, workers, [&](std::size_t i) {
            const CoupledStream s = e.stream(i);
            advance_until(e.internal[i], e.params, e.field, e.domain, s, t_end, &per[i]);
            advance_until(e.control[i], e.params, e.field, e.domain, s, t_end, &per[i]);
        });
        for (const auto& d : per) {
            diag->jumps += d.jumps;
            diag->clips += d.clips;
            if (d.max_jump_integral_error > diag->max_jump_integral_error)
                diag->max_jump_integral_error = d.max_jump_integral_error;
        }
    } else {
        parallel_for(n, workers, [&](std::size_t i) {
            const CoupledStream s = e.stream(i);
            advance_until(e.internal[i], e.params, e.field, e.domain, s, t_end);
            advance_until(e.control[i], e.params, e.field, e.domain, s, t_end);
        });
    }
    e.t = t_end;
}

// Copies fine-scale (x, v) onto the control companions and re-arms the pair
// exactly like at construction: the control adopts the fine particle's jump
// count, clock accumulator, and pending threshold, so both sides consume the
// same indexed draws again.  The residual threshold is memoryless, hence
// exponential and independent of the copied state; without the re-sync the
// control's pending threshold is a draw the fine particle already consumed,
// which correlates it with the copied (x, v) and biases the control law.
inline void reinitialize(Ensemble& e) {
    for (std::size_t i = 0; i < e.size(); ++i) {
        e.control[i].x = e.internal[i].x;
        e.control[i].v = e.internal[i].v;
        e.control[i].n = e.internal[i].n;
        e.control[i].acc = e.internal[i].acc;
        e.control[i].theta_target = e.internal[i].theta_target;
    }
}

struct CouplingStats {
    std::size_t count = 0;
    double mean_abs_dx = 0.0;
    double mean_sq_dx = 0.0;
};

inline CouplingStats coupling_stats(const Ensemble& e) {
    CouplingStats s;
    s.count = e.size();
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double d = e.internal[i].x - e.control[i].x;
        s.mean_abs_dx += std::abs(d);
        s.mean_sq_dx += d * d;
    }
    s.mean_abs_dx /= static_cast<double>(s.count);
    s.mean_sq_dx /= static_cast<double>(s.count);
    return s;
}

inline std::vector<double> coupling_deltas(const Ensemble& e) {
    std::vector<double> d(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) d[i] = e.internal[i].x - e.control[i].x;
    return d;
}

}  // namespace runtumble
