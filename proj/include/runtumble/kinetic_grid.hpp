#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "chemo_field.hpp"
#include "control_process.hpp"
#include "mesh.hpp"
#include "model_params.hpp"
#include "random_streams.hpp"

namespace runtumble {

using GridDensity = DensityPair;

// Diffusion coefficient of the two-speed model: D = v^2 for v in {-1, +1}.
inline constexpr double kDiffusion = 1.0;

// Deterministic solver for the control-process transport system
//
//   d_t p+ + eps d_x p+ = -(lam_c(x,+1)/2) p+ + (lam_c(x,-1)/2) p-
//   d_t p- - eps d_x p- = +(lam_c(x,+1)/2) p+ - (lam_c(x,-1)/2) p-
//
// on the shared cell-centered mesh.  Space: third-order upwind-biased
// differences (stencil {i-2..i+1} for the right-moving class, mirrored for
// the left-moving one).  Time: classical RK4 under the guard eps*dt/dx <= 1.
// Reflecting walls use specular ghost cells with the direction classes
// swapped, which degrades the stencil to second order at the walls.

struct ControlRateTable {
    std::vector<double> plus, minus;
    std::uint64_t clipped_entries = 0;
};

inline ControlRateTable control_rate_table(const Mesh& mesh, const ModelParams& prm,
                                           const ChemoField& field) {
    ControlRateTable t;
    t.plus.resize(mesh.cells);
    t.minus.resize(mesh.cells);
    std::uint64_t clips = 0;
    for (int i = 0; i < mesh.cells; ++i) {
        t.plus[i] = control_rate(prm, field, mesh.center(i), +1, &clips);
        t.minus[i] = control_rate(prm, field, mesh.center(i), -1, &clips);
    }
    t.clipped_entries = clips;
    return t;
}

inline void kinetic_rhs_into(const GridDensity& g, const ModelParams& prm,
                             const ControlRateTable& rates, std::vector<double>& out_p,
                             std::vector<double>& out_m) {
    const Mesh& mesh = g.mesh;
    const int M = mesh.cells;
    const double inv6dx = 1.0 / (6.0 * mesh.dx);
    const double eps = prm.epsilon;
    out_p.resize(M);
    out_m.resize(M);
    auto gp = [&](int j) -> double {
        if (j >= 0 && j < M) return g.p_plus[j];
        if (mesh.bc == Boundary::Periodic) return g.p_plus[(j % M + M) % M];
        return j < 0 ? g.p_minus[-1 - j] : g.p_minus[2 * M - 1 - j];
    };
    auto gm = [&](int j) -> double {
        if (j >= 0 && j < M) return g.p_minus[j];
        if (mesh.bc == Boundary::Periodic) return g.p_minus[(j % M + M) % M];
        return j < 0 ? g.p_plus[-1 - j] : g.p_plus[2 * M - 1 - j];
    };
    for (int i = 0; i < M; ++i) {
        const double dp =
            (gp(i - 2) - 6.0 * gp(i - 1) + 3.0 * gp(i) + 2.0 * gp(i + 1)) * inv6dx;
        const double dm =
            (-gm(i + 2) + 6.0 * gm(i + 1) - 3.0 * gm(i) - 2.0 * gm(i - 1)) * inv6dx;
        const double exch =
            0.5 * rates.plus[i] * g.p_plus[i] - 0.5 * rates.minus[i] * g.p_minus[i];
        out_p[i] = -eps * dp - exch;
        out_m[i] = eps * dm + exch;
    }
}

inline GridDensity rhs(const GridDensity& g, const ModelParams& prm,
                       const ChemoField& field) {
    const ControlRateTable rates = control_rate_table(g.mesh, prm, field);
    GridDensity out(g.mesh);
    kinetic_rhs_into(g, prm, rates, out.p_plus, out.p_minus);
    return out;
}

namespace detail {

struct Rk4Scratch {
    GridDensity stage;
    std::vector<double> k1p, k1m, k2p, k2m, k3p, k3m, k4p, k4m;
};

inline void rk4_step_with_rates(GridDensity& g, const ModelParams& prm,
                                const ControlRateTable& rates, double dt,
                                Rk4Scratch& s) {
    if (prm.epsilon * dt / g.mesh.dx > 1.0 + 1e-12)
        throw std::invalid_argument("kinetic step: CFL bound eps*dt/dx <= 1 violated");
    const int M = g.mesh.cells;
    if (s.stage.mesh.cells != M) s.stage = GridDensity(g.mesh);
    kinetic_rhs_into(g, prm, rates, s.k1p, s.k1m);
    for (int i = 0; i < M; ++i) {
        s.stage.p_plus[i] = g.p_plus[i] + 0.5 * dt * s.k1p[i];
        s.stage.p_minus[i] = g.p_minus[i] + 0.5 * dt * s.k1m[i];
    }
    kinetic_rhs_into(s.stage, prm, rates, s.k2p, s.k2m);
    for (int i = 0; i < M; ++i) {
        s.stage.p_plus[i] = g.p_plus[i] + 0.5 * dt * s.k2p[i];
        s.stage.p_minus[i] = g.p_minus[i] + 0.5 * dt * s.k2m[i];
    }
    kinetic_rhs_into(s.stage, prm, rates, s.k3p, s.k3m);
    for (int i = 0; i < M; ++i) {
        s.stage.p_plus[i] = g.p_plus[i] + dt * s.k3p[i];
        s.stage.p_minus[i] = g.p_minus[i] + dt * s.k3m[i];
    }
    kinetic_rhs_into(s.stage, prm, rates, s.k4p, s.k4m);
    const double w = dt / 6.0;
    for (int i = 0; i < M; ++i) {
        g.p_plus[i] += w * (s.k1p[i] + 2.0 * s.k2p[i] + 2.0 * s.k3p[i] + s.k4p[i]);
        g.p_minus[i] += w * (s.k1m[i] + 2.0 * s.k2m[i] + 2.0 * s.k3m[i] + s.k4m[i]);
    }
}

}  // namespace detail

inline void rk4_step(GridDensity& g, const ModelParams& prm, const ChemoField& field,
                     double dt) {
    const ControlRateTable rates = control_rate_table(g.mesh, prm, field);
    detail::Rk4Scratch scratch;
    detail::rk4_step_with_rates(g, prm, rates, dt, scratch);
}

// Advances the grid by `duration` in steps of dt_pde (plus one shorter step
// for any remainder).  The rate table is frozen per call; the field is static.
inline void evolve(GridDensity& g, const ModelParams& prm, const ChemoField& field,
                   double duration, double dt_pde) {
    if (duration < 0.0) throw std::invalid_argument("evolve: negative duration");
    if (!(dt_pde > 0.0)) throw std::invalid_argument("evolve: dt_pde must be > 0");
    if (duration == 0.0) return;
    const ControlRateTable rates = control_rate_table(g.mesh, prm, field);
    detail::Rk4Scratch scratch;
    const auto n_full = static_cast<long long>(std::floor(duration / dt_pde + 1e-9));
    for (long long k = 0; k < n_full; ++k)
        detail::rk4_step_with_rates(g, prm, rates, dt_pde, scratch);
    const double rem = duration - static_cast<double>(n_full) * dt_pde;
    if (rem > 1e-10) detail::rk4_step_with_rates(g, prm, rates, rem, scratch);
}

// Advection-diffusion limit of both particle models on the diffusive clock:
//
//   d_tbar n = (1/lambda0) d_x (D d_x n - D A(x) n)
//
// conservative second-order central fluxes + RK4; explicit stability guard
// dt_bar <= 0.4*lambda0*dx^2/(2D).
inline std::vector<double> limit_pde_evolve(const Mesh& mesh, std::vector<double> n,
                                            const ModelParams& prm,
                                            const ChemoField& field, double t_bar,
                                            double dt_bar = 0.0) {
    if (static_cast<int>(n.size()) != mesh.cells)
        throw std::invalid_argument("limit pde: density size does not match mesh");
    const double stable = 0.4 * prm.lambda0 * mesh.dx * mesh.dx / (2.0 * kDiffusion);
    if (dt_bar <= 0.0) dt_bar = stable;
    if (dt_bar > stable * (1.0 + 1e-12))
        throw std::invalid_argument("limit pde: dt_bar exceeds the stability bound");

    const int M = mesh.cells;
    std::vector<double> a_face(M + 1);
    for (int i = 0; i <= M; ++i)
        a_face[i] = drift_field(prm, field, static_cast<double>(i) * mesh.dx);

    const double c = kDiffusion / prm.lambda0;
    auto rhs_limit = [&](const std::vector<double>& u, std::vector<double>& out) {
        std::vector<double> flux(M + 1, 0.0);
        if (mesh.bc == Boundary::Periodic) {
            for (int i = 0; i <= M; ++i) {
                const int il = (i - 1 + M) % M;
                const int ir = i % M;
                flux[i] = c * ((u[ir] - u[il]) / mesh.dx -
                               a_face[i] * 0.5 * (u[il] + u[ir]));
            }
        } else {
            for (int i = 1; i < M; ++i)
                flux[i] = c * ((u[i] - u[i - 1]) / mesh.dx -
                               a_face[i] * 0.5 * (u[i - 1] + u[i]));
        }
        out.resize(M);
        for (int i = 0; i < M; ++i) out[i] = (flux[i + 1] - flux[i]) / mesh.dx;
    };

    std::vector<double> k1, k2, k3, k4, stage(M);
    double remaining = t_bar;
    while (remaining > 1e-14) {
        const double h = std::min(dt_bar, remaining);
        rhs_limit(n, k1);
        for (int i = 0; i < M; ++i) stage[i] = n[i] + 0.5 * h * k1[i];
        rhs_limit(stage, k2);
        for (int i = 0; i < M; ++i) stage[i] = n[i] + 0.5 * h * k2[i];
        rhs_limit(stage, k3);
        for (int i = 0; i < M; ++i) stage[i] = n[i] + h * k3[i];
        rhs_limit(stage, k4);
        for (int i = 0; i < M; ++i)
            n[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        remaining -= h;
    }
    return n;
}

// Euler-Maruyama sample of the limit SDE
//   dX = (D A(X)/lambda0) dtbar + sqrt(2D/lambda0) dW
// driven by the stream's normal draws.
inline double limit_sde_sample(double x0, const ModelParams& prm, const ChemoField& field,
                               const Domain& dom, double t_bar, const CoupledStream& stream,
                               double dt_bar = 1e-3) {
    if (!(dt_bar > 0.0)) throw std::invalid_argument("limit sde: dt_bar must be > 0");
    double x = x0;
    int v_dummy = 1;
    std::uint64_t k = 0;
    double remaining = t_bar;
    while (remaining > 1e-14) {
        const double h = std::min(dt_bar, remaining);
        const double a = drift_field(prm, field, x);
        x += kDiffusion * a / prm.lambda0 * h +
             std::sqrt(2.0 * kDiffusion * h / prm.lambda0) * stream.normal(k++);
        resolve_boundary(dom, x, v_dummy);
        remaining -= h;
    }
    return x;
}

}  // namespace runtumble
