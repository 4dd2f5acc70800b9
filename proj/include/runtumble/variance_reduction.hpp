#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "coupled_ensemble.hpp"
#include "density_estimation.hpp"
#include "kinetic_grid.hpp"
#include "mesh.hpp"
#include "parallel.hpp"

namespace runtumble {

// Variance-reduced density estimation.  The estimator mu_bar follows the
// deterministic control semigroup between correction times and absorbs the
// signed difference between the fine-scale and control histograms at each
// correction:
//
//   mu_bar <- evolve(mu_bar) + (hist(fine) - hist(control))
//
// after which the control particles are reinitialized to the fine-scale
// (x, v) and the pair's jump clocks are re-synced (see reinitialize).  In
// expectation mu_bar matches the plain fine-scale histogram; its
// fluctuations scale with the coupling distance instead of the raw ensemble
// noise.  Cell values are signed by construction and are not clipped;
// negativity is reported, never hidden.

// Exact law of an InitSpec projected on the mesh (position mass per cell,
// split by the velocity law).  Used as the default initial mu_bar and to
// validate a user-supplied one.
inline DensityPair init_spec_law(const Mesh& mesh, const InitSpec& spec) {
    DensityPair law(mesh);
    std::vector<double> pos(mesh.cells, 0.0);
    if (spec.position.kind == PositionInit::Point) {
        pos[mesh.bin(spec.position.a)] = 1.0 / mesh.dx;
    } else {
        const double lo = spec.position.a, hi = spec.position.b;
        for (int i = 0; i < mesh.cells; ++i) {
            const double cl = i * mesh.dx, cr = (i + 1) * mesh.dx;
            const double overlap = std::max(0.0, std::min(hi, cr) - std::max(lo, cl));
            pos[i] = overlap / ((hi - lo) * mesh.dx);
        }
    }
    for (int i = 0; i < mesh.cells; ++i) {
        if (spec.velocity.kind == VelocityInit::UniformSign) {
            law.p_plus[i] = 0.5 * pos[i];
            law.p_minus[i] = 0.5 * pos[i];
        } else if (spec.velocity.v0 > 0) {
            law.p_plus[i] = pos[i];
        } else {
            law.p_minus[i] = pos[i];
        }
    }
    return law;
}

inline double total_variation(const DensityPair& a, const DensityPair& b) {
    if (!(a.mesh == b.mesh)) throw std::invalid_argument("total_variation: mesh mismatch");
    double s = 0.0;
    for (int i = 0; i < a.mesh.cells; ++i)
        s += std::abs(a.p_plus[i] - b.p_plus[i]) + std::abs(a.p_minus[i] - b.p_minus[i]);
    return 0.5 * s * a.mesh.dx;
}

struct VRSetup {
    ModelParams params;
    Domain domain;
    ChemoField field;
    Mesh mesh;
    InitSpec init;
    GridDensity mu0;              // empty -> use init_spec_law
    std::size_t n_particles = 0;
    std::uint64_t seed = 0;
    double dt_pde = 0.1;
    double dt_ri_diffusive = 0.0;  // correction/reinit interval; 0 -> eps^2*dt_pde
    double tv_tolerance = 1e-9;
};

struct VRState {
    GridDensity mu_bar;
    Ensemble ens;
    double dt_pde = 0.1;
    double dt_ri_diffusive = 0.0;
    double t_bar = 0.0;
    std::uint64_t steps = 0;
    double min_cell_seen = 0.0;
    StepDiag diag;
};

inline VRState vr_init(const VRSetup& setup) {
    if (setup.mesh.length != setup.domain.length || setup.mesh.bc != setup.domain.bc)
        throw std::invalid_argument("vr_init: mesh and domain disagree");
    if (setup.params.epsilon * setup.dt_pde / setup.mesh.dx > 1.0 + 1e-12)
        throw std::invalid_argument("vr_init: CFL bound eps*dt_pde/dx <= 1 violated");
    VRState s;
    s.ens = init_ensemble(setup.params, setup.domain, setup.field, setup.n_particles,
                          setup.seed, setup.init);
    const DensityPair law = init_spec_law(setup.mesh, setup.init);
    if (setup.mu0.mesh.cells == 0) {
        s.mu_bar = law;
    } else {
        if (total_variation(setup.mu0, law) > setup.tv_tolerance)
            throw std::invalid_argument(
                "vr_init: initial density inconsistent with the particle sampler");
        s.mu_bar = setup.mu0;
    }
    s.dt_pde = setup.dt_pde;
    s.dt_ri_diffusive = setup.dt_ri_diffusive > 0.0
                            ? setup.dt_ri_diffusive
                            : setup.params.epsilon * setup.params.epsilon * setup.dt_pde;
    s.min_cell_seen = s.mu_bar.min_cell_value();
    return s;
}

// One correction cycle: advance pairs, evolve the grid by the same physical
// duration, absorb the signed histogram difference, reinitialize.
inline void vr_step(VRState& s, unsigned workers = 1) {
    const double eps2 = s.ens.params.epsilon * s.ens.params.epsilon;
    const double t_bar_next = s.t_bar + s.dt_ri_diffusive;
    advance(s.ens, t_bar_next / eps2, workers, &s.diag);
    evolve(s.mu_bar, s.ens.params, s.ens.field, s.dt_ri_diffusive / eps2, s.dt_pde);
    const EmpiricalDensity hf = histogram(s.ens.internal, s.mu_bar.mesh);
    const EmpiricalDensity hc = histogram(s.ens.control, s.mu_bar.mesh);
    for (int i = 0; i < s.mu_bar.mesh.cells; ++i) {
        s.mu_bar.p_plus[i] += hf.p_plus[i] - hc.p_plus[i];
        s.mu_bar.p_minus[i] += hf.p_minus[i] - hc.p_minus[i];
    }
    reinitialize(s.ens);
    s.t_bar = t_bar_next;
    ++s.steps;
    const double mc = s.mu_bar.min_cell_value();
    if (mc < s.min_cell_seen) s.min_cell_seen = mc;
}

struct VRSnapshot {
    double t_bar = 0.0;
    GridDensity mu;
};

// Runs correction cycles to t_bar_end, snapshotting mu_bar at the requested
// times.  All times must sit on the correction grid.
inline std::vector<VRSnapshot> vr_run(VRState& s, double t_bar_end,
                                      const std::vector<double>& snapshot_times,
                                      unsigned workers = 1) {
    const double dt = s.dt_ri_diffusive;
    const double span = t_bar_end - s.t_bar;
    if (span < -1e-12) throw std::invalid_argument("vr_run: t_bar_end in the past");
    const auto n_steps = static_cast<long long>(std::llround(span / dt));
    if (std::abs(span - static_cast<double>(n_steps) * dt) > 1e-9)
        throw std::invalid_argument("vr_run: t_bar_end not on the correction grid");
    for (double ts : snapshot_times) {
        const double off = ts - s.t_bar;
        if (off < -1e-12 || ts > t_bar_end + 1e-12 ||
            std::abs(off - std::llround(off / dt) * dt) > 1e-9)
            throw std::invalid_argument("vr_run: snapshot time not on the correction grid");
    }
    std::vector<VRSnapshot> out;
    std::size_t next_time = 0;
    auto maybe_snapshot = [&] {
        while (next_time < snapshot_times.size() &&
               snapshot_times[next_time] <= s.t_bar + 1e-9) {
            out.push_back({snapshot_times[next_time], s.mu_bar});
            ++next_time;
        }
    };
    maybe_snapshot();
    for (long long k = 0; k < n_steps; ++k) {
        vr_step(s, workers);
        maybe_snapshot();
    }
    return out;
}

struct EstimatorMoments {
    std::vector<double> mean, variance, ci_half;
};

struct VarianceStudyInput {
    ModelParams params;
    Domain domain;
    ChemoField field;
    Mesh mesh;
    InitSpec init;
    std::size_t n_particles = 1000;
    std::uint64_t master_seed = 1;
    double t_bar_end = 20.0;
    double dt_pde = 0.1;
    double reinit_dt_bar = 0.0;  // 0 -> eps^2 * dt_pde
    int realizations = 50;
    unsigned workers = 1;
};

struct VarianceStudyResult {
    Mesh mesh;
    int realizations = 0;
    EstimatorMoments plain, vr_reinit, vr_noreinit;
    double min_cell_reinit = 0.0;
    double min_cell_noreinit = 0.0;
    std::uint64_t particle_clip_events = 0;
    std::uint64_t grid_clipped_entries = 0;
};

namespace detail {

struct Welford {
    double mean = 0.0, m2 = 0.0;
    std::uint64_t n = 0;
    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

inline EstimatorMoments reduce_moments(const std::vector<std::vector<double>>& rows,
                                       int cells) {
    std::vector<Welford> acc(cells);
    for (const auto& row : rows)
        for (int i = 0; i < cells; ++i) acc[i].add(row[i]);
    EstimatorMoments m;
    m.mean.resize(cells);
    m.variance.resize(cells);
    m.ci_half.resize(cells);
    const double r = rows.empty() ? 1.0 : static_cast<double>(rows.size());
    for (int i = 0; i < cells; ++i) {
        m.mean[i] = acc[i].mean;
        m.variance[i] = acc[i].variance();
        m.ci_half[i] = 1.96 * std::sqrt(acc[i].variance() / r);
    }
    return m;
}

}  // namespace detail

// R independent realizations of three estimators of the position density at
// t_bar_end: the plain fine-scale histogram, the variance-reduced estimator
// with periodic reinitialization, and the variance-reduced estimator whose
// single correction is applied at the output time.  Realizations run in
// parallel; the moment reduction is sequential in realization order, so the
// result is independent of the worker count.
inline VarianceStudyResult vr_variance_study(const VarianceStudyInput& in) {
    if (in.realizations < 2)
        throw std::invalid_argument("variance study: need at least two realizations");
    const int M = in.mesh.cells;
    const int R = in.realizations;
    std::vector<std::vector<double>> plain(R), reinit(R), noreinit(R);
    std::vector<double> min_cell_ri(R, 0.0), min_cell_nr(R, 0.0);
    std::vector<std::uint64_t> clips(R, 0);

    parallel_for(static_cast<std::size_t>(R), in.workers, [&](std::size_t r) {
        const std::uint64_t seed_r =
            in.master_seed + (static_cast<std::uint64_t>(r) + 1) * 0x9e3779b97f4a7c15ULL;
        VRSetup setup;
        setup.params = in.params;
        setup.domain = in.domain;
        setup.field = in.field;
        setup.mesh = in.mesh;
        setup.init = in.init;
        setup.n_particles = in.n_particles;
        setup.seed = seed_r;
        setup.dt_pde = in.dt_pde;
        setup.dt_ri_diffusive = in.reinit_dt_bar;

        VRState s1 = vr_init(setup);
        vr_run(s1, in.t_bar_end, {});
        plain[r] = histogram(s1.ens.internal, in.mesh).position_density();
        reinit[r] = s1.mu_bar.position_density();
        min_cell_ri[r] = s1.min_cell_seen;
        clips[r] = s1.diag.clips;

        setup.dt_ri_diffusive = in.t_bar_end;
        VRState s2 = vr_init(setup);
        vr_run(s2, in.t_bar_end, {});
        noreinit[r] = s2.mu_bar.position_density();
        min_cell_nr[r] = s2.min_cell_seen;
        clips[r] += s2.diag.clips;
    });

    VarianceStudyResult out;
    out.mesh = in.mesh;
    out.realizations = R;
    out.plain = detail::reduce_moments(plain, M);
    out.vr_reinit = detail::reduce_moments(reinit, M);
    out.vr_noreinit = detail::reduce_moments(noreinit, M);
    for (int r = 0; r < R; ++r) {
        out.min_cell_reinit = std::min(out.min_cell_reinit, min_cell_ri[r]);
        out.min_cell_noreinit = std::min(out.min_cell_noreinit, min_cell_nr[r]);
        out.particle_clip_events += clips[r];
    }
    out.grid_clipped_entries =
        control_rate_table(in.mesh, in.params, in.field).clipped_entries;
    return out;
}

}  // namespace runtumble
