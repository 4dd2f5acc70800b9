#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "velocity_jump.hpp"

namespace runtumble {

// Uniform cell-centered mesh on [0, length): cell i covers
// [i*dx, (i+1)*dx) with center (i+1/2)*dx.  Grid solves and particle
// histograms share this layout, so grid points coincide with bin centers.
struct Mesh {
    double length = 0.0;
    double dx = 0.0;
    int cells = 0;
    Boundary bc = Boundary::Periodic;

    static Mesh regular(double length, double dx, Boundary bc) {
        if (!(length > 0.0) || !(dx > 0.0))
            throw std::invalid_argument("mesh: length and dx must be > 0");
        const double ratio = length / dx;
        const double rounded = std::round(ratio);
        if (std::abs(ratio - rounded) > 1e-12 * rounded || rounded < 1.0)
            throw std::invalid_argument("mesh: dx must divide the domain length");
        Mesh m;
        m.length = length;
        m.dx = dx;
        m.cells = static_cast<int>(rounded);
        m.bc = bc;
        return m;
    }

    double center(int i) const { return (i + 0.5) * dx; }

    // Cell of the nearest center; a position exactly on a cell edge ties to
    // the lower-index cell.
    int bin(double x) const {
        int i = static_cast<int>(std::floor(x / dx));
        if (i > 0 && static_cast<double>(i) * dx == x) --i;
        if (i < 0) i = 0;
        if (i >= cells) i = cells - 1;
        return i;
    }

    bool operator==(const Mesh& o) const {
        return length == o.length && dx == o.dx && cells == o.cells && bc == o.bc;
    }
};

// Direction-resolved density values on a mesh; signed values are allowed (the
// variance-reduced estimator accumulates signed corrections).
struct DensityPair {
    Mesh mesh;
    std::vector<double> p_plus, p_minus;

    DensityPair() = default;
    explicit DensityPair(const Mesh& m)
        : mesh(m), p_plus(m.cells, 0.0), p_minus(m.cells, 0.0) {}

    double mass() const {
        double s = 0.0;
        for (int i = 0; i < mesh.cells; ++i) s += p_plus[i] + p_minus[i];
        return s * mesh.dx;
    }

    std::vector<double> position_density() const {
        std::vector<double> n(mesh.cells);
        for (int i = 0; i < mesh.cells; ++i) n[i] = p_plus[i] + p_minus[i];
        return n;
    }

    double min_cell_value() const {
        double m = 0.0;
        for (int i = 0; i < mesh.cells; ++i) {
            if (p_plus[i] < m) m = p_plus[i];
            if (p_minus[i] < m) m = p_minus[i];
        }
        return m;
    }
};

inline double l1_distance(const std::vector<double>& a, const std::vector<double>& b,
                          double dx) {
    if (a.size() != b.size())
        throw std::invalid_argument("l1_distance: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s * dx;
}

}  // namespace runtumble
