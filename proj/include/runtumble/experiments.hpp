#pragma once
// Drivers behind the CLI subcommands.  Each writes one or two CSV files into
// cfg.out_dir.  All data rows come from per-slot storage emitted in a fixed
// order, so the data section is byte-identical for any --workers value.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "runtumble/config.hpp"
#include "runtumble/coupled_ensemble.hpp"
#include "runtumble/csv.hpp"
#include "runtumble/density_estimation.hpp"
#include "runtumble/kinetic_grid.hpp"
#include "runtumble/parallel.hpp"
#include "runtumble/slope_fit.hpp"
#include "runtumble/variance_reduction.hpp"

namespace runtumble {

namespace detail {

inline std::string out_path(const RunConfig& cfg, const char* name) {
    namespace fs = std::filesystem;
    if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);
    return (fs::path(cfg.out_dir) / name).string();
}

// Correction interval in diffusive time: reinit_steps grid steps per cycle,
// or a single correction at the output time when reinit_steps == 0.
inline double correction_interval(const RunConfig& cfg) {
    const double eps2 = cfg.params.epsilon * cfg.params.epsilon;
    if (cfg.vr.reinit_steps == 0) return cfg.vr.tbar_end;
    return static_cast<double>(cfg.vr.reinit_steps) * eps2 * cfg.grid_dt_pde;
}

}  // namespace detail

// One coupled pair (particle 0), sampled at every time step up to
// traj_tbar_end / eps^2.
inline void write_trajectory_csv(const RunConfig& cfg, const std::string& path) {
    const ChemoField field = cfg.field();
    Ensemble e = init_ensemble(cfg.params, cfg.domain, field, 1, cfg.seed, cfg.init);
    InternalParticle& pi = e.internal[0];
    ControlParticle& pc = e.control[0];
    const CoupledStream st = e.stream(0);
    const double eps2 = cfg.params.epsilon * cfg.params.epsilon;
    const double t_end = cfg.traj_tbar_end / eps2;
    const auto steps = static_cast<long long>(std::ceil(t_end / cfg.params.dt - 1e-9));

    CsvWriter csv(path, cfg);
    csv.note("t_end", csv_cell(t_end));
    csv.columns({"t", "x_internal", "v_internal", "y_internal", "x_control", "v_control"});
    auto emit = [&] {
        csv.row({pi.t, pi.x, static_cast<double>(pi.v), internal_y(pi, field), pc.x,
                 static_cast<double>(pc.v)});
    };
    emit();
    for (long long k = 1; k <= steps; ++k) {
        const double tk = std::min(static_cast<double>(k) * cfg.params.dt, t_end);
        advance_until(pi, cfg.params, field, cfg.domain, st, tk);
        advance_until(pc, cfg.params, field, cfg.domain, st, tk);
        emit();
    }
}

inline void run_trajectory(const RunConfig& cfg) {
    write_trajectory_csv(cfg, detail::out_path(cfg, "trajectory.csv"));
}

// Coupling distance versus epsilon over a (epsilon, tau) grid.  Every cell
// reuses the same master seed, so the epsilon comparison runs on common
// random numbers.  sweep_fits.csv carries the log-log slope of E|dX| in
// epsilon per (tau, tbar); a fit row is skipped if a distance is exactly
// zero (log undefined).
inline void run_coupling_sweep(const RunConfig& cfg) {
    const ChemoField field = cfg.field();
    const auto& sw = cfg.sweep;
    const std::size_t ne = sw.epsilon.size(), nt = sw.tau.size(), nb = sw.tbar.size();

    // mean_abs[ti][bi][ei]
    std::vector<std::vector<std::vector<double>>> mean_abs(
        nt, std::vector<std::vector<double>>(nb, std::vector<double>(ne, 0.0)));
    std::vector<std::vector<std::vector<double>>> mean_sq = mean_abs;

    CsvWriter csv(detail::out_path(cfg, "sweep.csv"), cfg);
    csv.columns({"epsilon", "tau", "tbar", "mean_abs_dx", "mean_sq_dx", "n"});
    for (std::size_t ti = 0; ti < nt; ++ti) {
        for (std::size_t ei = 0; ei < ne; ++ei) {
            ModelParams prm = cfg.params;
            prm.tau = sw.tau[ti];
            prm.epsilon = sw.epsilon[ei];
            const double eps2 = prm.epsilon * prm.epsilon;
            Ensemble e = init_ensemble(prm, cfg.domain, field, sw.n, cfg.seed, cfg.init);
            for (std::size_t bi = 0; bi < nb; ++bi) {
                advance(e, sw.tbar[bi] / eps2, cfg.workers);
                const CouplingStats s = coupling_stats(e);
                mean_abs[ti][bi][ei] = s.mean_abs_dx;
                mean_sq[ti][bi][ei] = s.mean_sq_dx;
                csv.row({prm.epsilon, prm.tau, sw.tbar[bi], s.mean_abs_dx, s.mean_sq_dx,
                         static_cast<double>(s.count)});
            }
        }
    }

    if (ne < 2) return;
    CsvWriter fits(detail::out_path(cfg, "sweep_fits.csv"), cfg);
    fits.columns({"tau", "tbar", "slope", "intercept", "r2", "points"});
    for (std::size_t ti = 0; ti < nt; ++ti) {
        for (std::size_t bi = 0; bi < nb; ++bi) {
            const auto& ys = mean_abs[ti][bi];
            if (std::any_of(ys.begin(), ys.end(), [](double y) { return !(y > 0.0); }))
                continue;
            const SlopeFit f = fit_slope(sw.epsilon, ys, true);
            fits.row({sw.tau[ti], sw.tbar[bi], f.slope, f.intercept, f.r2,
                      static_cast<double>(ne)});
        }
    }
}

// One variance-reduced realization, reported against the plain particle
// histogram and the uncorrected grid solve of the same initial law.
inline void run_vr_density(const RunConfig& cfg) {
    const ChemoField field = cfg.field();
    const Mesh mesh = cfg.mesh();
    const double eps2 = cfg.params.epsilon * cfg.params.epsilon;

    VRSetup setup;
    setup.params = cfg.params;
    setup.domain = cfg.domain;
    setup.field = field;
    setup.mesh = mesh;
    setup.init = cfg.init;
    setup.n_particles = cfg.vr.n;
    setup.seed = cfg.seed;
    setup.dt_pde = cfg.grid_dt_pde;
    setup.dt_ri_diffusive = detail::correction_interval(cfg);
    VRState s = vr_init(setup);

    const double dt_ri = s.dt_ri_diffusive;
    const auto n_steps = static_cast<long long>(std::llround(cfg.vr.tbar_end / dt_ri));
    if (std::abs(cfg.vr.tbar_end - static_cast<double>(n_steps) * dt_ri) > 1e-9)
        throw std::invalid_argument("vr: tbar_end is not a multiple of the correction interval");
    for (double ts : cfg.vr.snapshots) {
        if (std::abs(ts - std::llround(ts / dt_ri) * dt_ri) > 1e-9)
            throw std::invalid_argument("vr: snapshot time not on the correction grid");
    }

    GridDensity ref = init_spec_law(mesh, cfg.init);
    struct Snap {
        double t_bar;
        std::vector<double> vr, plain, grid;
    };
    std::vector<Snap> snaps;
    std::size_t next = 0;
    auto maybe_snapshot = [&] {
        while (next < cfg.vr.snapshots.size() && cfg.vr.snapshots[next] <= s.t_bar + 1e-9) {
            snaps.push_back({cfg.vr.snapshots[next], s.mu_bar.position_density(),
                             histogram(s.ens.internal, mesh).position_density(),
                             ref.position_density()});
            ++next;
        }
    };
    maybe_snapshot();
    for (long long k = 0; k < n_steps; ++k) {
        vr_step(s, cfg.workers);
        evolve(ref, cfg.params, field, dt_ri / eps2, cfg.grid_dt_pde);
        maybe_snapshot();
    }

    CsvWriter csv(detail::out_path(cfg, "vr_density.csv"), cfg);
    csv.note("correction_interval", csv_cell(dt_ri));
    csv.note("corrections", std::to_string(s.steps));
    csv.note("min_cell_seen", csv_cell(s.min_cell_seen));
    csv.note("particle_jumps", std::to_string(s.diag.jumps));
    csv.note("particle_rate_clips", std::to_string(s.diag.clips));
    csv.note("grid_rate_clips",
             std::to_string(control_rate_table(mesh, cfg.params, field).clipped_entries));
    csv.columns({"t_bar", "x", "n_vr", "n_plain", "n_grid"});
    for (const Snap& sn : snaps)
        for (int i = 0; i < mesh.cells; ++i)
            csv.row({sn.t_bar, mesh.center(i), sn.vr[i], sn.plain[i], sn.grid[i]});
}

// Variance of the plain and variance-reduced estimators over independent
// realizations, per cell, with cross-cell variance sums in the metadata.
inline void run_variance_study(const RunConfig& cfg) {
    const ChemoField field = cfg.field();
    const Mesh mesh = cfg.mesh();
    const double eps2 = cfg.params.epsilon * cfg.params.epsilon;

    VarianceStudyInput in;
    in.params = cfg.params;
    in.domain = cfg.domain;
    in.field = field;
    in.mesh = mesh;
    in.init = cfg.init;
    in.n_particles = cfg.vr.n;
    in.master_seed = cfg.seed;
    in.t_bar_end = cfg.vr.tbar_end;
    in.dt_pde = cfg.grid_dt_pde;
    in.reinit_dt_bar =
        static_cast<double>(std::max<long long>(cfg.vr.reinit_steps, 1)) * eps2 * cfg.grid_dt_pde;
    in.realizations = cfg.vr.realizations;
    in.workers = cfg.workers;
    const VarianceStudyResult res = vr_variance_study(in);

    auto var_sum = [](const EstimatorMoments& m) {
        return std::accumulate(m.variance.begin(), m.variance.end(), 0.0);
    };
    const double vp = var_sum(res.plain), vr = var_sum(res.vr_reinit),
                 vn = var_sum(res.vr_noreinit);

    CsvWriter csv(detail::out_path(cfg, "variance_study.csv"), cfg);
    csv.note("realizations", std::to_string(res.realizations));
    csv.note("var_sum_plain", csv_cell(vp));
    csv.note("var_sum_vr", csv_cell(vr));
    csv.note("var_sum_vr_noreinit", csv_cell(vn));
    csv.note("var_ratio_vr", csv_cell(vp > 0.0 ? vr / vp : 0.0));
    csv.note("var_ratio_vr_noreinit", csv_cell(vp > 0.0 ? vn / vp : 0.0));
    csv.note("min_cell_vr", csv_cell(res.min_cell_reinit));
    csv.note("min_cell_vr_noreinit", csv_cell(res.min_cell_noreinit));
    csv.note("particle_rate_clips", std::to_string(res.particle_clip_events));
    csv.note("grid_rate_clips", std::to_string(res.grid_clipped_entries));
    csv.columns({"estimator", "x", "mean", "variance", "ci_lo", "ci_hi"});
    auto emit = [&](const char* name, const EstimatorMoments& m) {
        for (int i = 0; i < mesh.cells; ++i)
            csv.row({std::string(name), csv_cell(mesh.center(i)), csv_cell(m.mean[i]),
                     csv_cell(m.variance[i]), csv_cell(m.mean[i] - m.ci_half[i]),
                     csv_cell(m.mean[i] + m.ci_half[i])});
    };
    emit("plain", res.plain);
    emit("vr", res.vr_reinit);
    emit("vr_noreinit", res.vr_noreinit);
}

// Particle densities at a fixed diffusive time against the advection-diffusion
// limit solve, for a list of epsilon values; an Euler-Maruyama cloud of the
// limit dynamics gives the epsilon-independent sampling floor.
inline void run_limit_check(const RunConfig& cfg) {
    const ChemoField field = cfg.field();
    const Mesh mesh = cfg.mesh();
    const std::vector<double> n0 = init_spec_law(mesh, cfg.init).position_density();
    const std::vector<double> n_pde =
        limit_pde_evolve(mesh, n0, cfg.params, field, cfg.limit.tbar);

    std::vector<double> xs(cfg.limit.n);
    parallel_for(cfg.limit.n, cfg.workers, [&](std::size_t i) {
        const CoupledStream st(cfg.seed, i);
        const double x0 = cfg.init.position.kind == PositionInit::Point
                              ? cfg.init.position.a
                              : st.uniform_init(cfg.init.position.a, cfg.init.position.b);
        xs[i] = limit_sde_sample(x0, cfg.params, field, cfg.domain, cfg.limit.tbar, st,
                                 cfg.limit.sde_dt);
    });
    std::vector<double> n_sde(mesh.cells, 0.0);
    const double w = 1.0 / (static_cast<double>(cfg.limit.n) * mesh.dx);
    for (double x : xs) n_sde[mesh.bin(x)] += w;
    const double l1_sde = l1_distance(n_sde, n_pde, mesh.dx);

    CsvWriter csv(detail::out_path(cfg, "limit_check.csv"), cfg);
    csv.note("l1_sde", csv_cell(l1_sde));
    csv.columns({"epsilon", "l1_internal", "l1_control"});
    for (double eps : cfg.limit.epsilon) {
        ModelParams prm = cfg.params;
        prm.epsilon = eps;
        Ensemble e = init_ensemble(prm, cfg.domain, field, cfg.limit.n, cfg.seed, cfg.init);
        advance(e, cfg.limit.tbar / (eps * eps), cfg.workers);
        const double l1_i =
            l1_distance(histogram(e.internal, mesh).position_density(), n_pde, mesh.dx);
        const double l1_c =
            l1_distance(histogram(e.control, mesh).position_density(), n_pde, mesh.dx);
        csv.row({eps, l1_i, l1_c});
    }
}

inline void run_experiment(const RunConfig& cfg) {
    validate_run_config(cfg);
    if (cfg.experiment == "trajectory") {
        run_trajectory(cfg);
    } else if (cfg.experiment == "sweep") {
        run_coupling_sweep(cfg);
    } else if (cfg.experiment == "vr") {
        run_vr_density(cfg);
    } else if (cfg.experiment == "variance-study") {
        run_variance_study(cfg);
    } else if (cfg.experiment == "limit-check") {
        run_limit_check(cfg);
    } else {
        throw std::invalid_argument("unknown experiment: " + cfg.experiment);
    }
    if (cfg.record_trajectory && cfg.experiment != "trajectory")
        write_trajectory_csv(cfg, detail::out_path(cfg, "trajectory.csv"));
}

}  // namespace runtumble
