#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mesh.hpp"

namespace runtumble {

enum class DensityMethod { HistogramBins, GaussianKde };

struct EmpiricalDensity : DensityPair {
    std::uint64_t count = 0;
    DensityMethod method = DensityMethod::HistogramBins;
};

// Direction-resolved histogram: each particle deposits mass 1/(N*dx) in the
// cell of its nearest center, routed by the sign of its velocity.  Total mass
// is exactly 1.
template <class P>
EmpiricalDensity histogram(const std::vector<P>& parts, const Mesh& mesh) {
    if (parts.empty()) throw std::invalid_argument("histogram: empty particle set");
    EmpiricalDensity d;
    static_cast<DensityPair&>(d) = DensityPair(mesh);
    d.count = parts.size();
    d.method = DensityMethod::HistogramBins;
    const double w = 1.0 / (static_cast<double>(parts.size()) * mesh.dx);
    for (const auto& p : parts) {
        const int i = mesh.bin(p.x);
        if (p.v > 0) d.p_plus[i] += w;
        else d.p_minus[i] += w;
    }
    return d;
}

inline double silverman_bandwidth(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    if (n < 2) throw std::invalid_argument("bandwidth: need at least two samples");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double sigma = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sigma > 0.0))
        throw std::invalid_argument("bandwidth: degenerate sample (zero variance)");
    return 1.06 * sigma * std::pow(static_cast<double>(n), -0.2);
}

// Gaussian kernel estimate on the mesh, split exactly by velocity sign.  Each
// particle's kernel is renormalized over the evaluation cells so it carries
// exactly 1/N of the mass; this keeps the total at 1 even when the kernel
// would leak past the walls, and makes bandwidth -> 0 reduce to the histogram
// rule.
template <class P>
EmpiricalDensity kde(const std::vector<P>& parts, const Mesh& mesh,
                     std::optional<double> bandwidth = std::nullopt) {
    if (parts.empty()) throw std::invalid_argument("kde: empty particle set");
    double bw;
    if (bandwidth) {
        bw = *bandwidth;
        if (!(bw > 0.0)) throw std::invalid_argument("kde: bandwidth must be > 0");
    } else {
        std::vector<double> xs(parts.size());
        for (std::size_t i = 0; i < parts.size(); ++i) xs[i] = parts[i].x;
        bw = silverman_bandwidth(xs);
    }

    EmpiricalDensity d;
    static_cast<DensityPair&>(d) = DensityPair(mesh);
    d.count = parts.size();
    d.method = DensityMethod::GaussianKde;

    const double particle_mass = 1.0 / (static_cast<double>(parts.size()) * mesh.dx);
    const double window = 8.0 * bw;
    std::vector<double> w(mesh.cells);
    for (const auto& p : parts) {
        int lo = mesh.bin(std::max(0.0, p.x - window));
        int hi = mesh.bin(std::min(mesh.length, p.x + window));
        double sum = 0.0;
        for (int i = lo; i <= hi; ++i) {
            const double u = (mesh.center(i) - p.x) / bw;
            w[i] = std::exp(-0.5 * u * u);
            sum += w[i];
        }
        auto& target = p.v > 0 ? d.p_plus : d.p_minus;
        if (sum > 0.0) {
            for (int i = lo; i <= hi; ++i) target[i] += particle_mass * (w[i] / sum);
        } else {
            // kernel underflowed everywhere: delta limit, same cell rule as
            // the histogram
            target[mesh.bin(p.x)] += particle_mass;
        }
    }
    return d;
}

// Cellwise a - b per direction class; both inputs must live on the same mesh.
inline DensityPair signed_difference(const DensityPair& a, const DensityPair& b) {
    if (!(a.mesh == b.mesh))
        throw std::invalid_argument("signed_difference: mesh mismatch");
    DensityPair out(a.mesh);
    for (int i = 0; i < a.mesh.cells; ++i) {
        out.p_plus[i] = a.p_plus[i] - b.p_plus[i];
        out.p_minus[i] = a.p_minus[i] - b.p_minus[i];
    }
    return out;
}

}  // namespace runtumble
