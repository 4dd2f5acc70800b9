#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace runtumble {

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
    std::vector<double> residuals;
};

// Ordinary least squares y ~ slope*x + intercept; with log_log both
// coordinates are log-transformed first (all values must be positive).
inline SlopeFit fit_slope(std::vector<double> x, std::vector<double> y,
                          bool log_log = false) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_slope: need at least two matching points");
    if (log_log) {
        for (auto& v : x) {
            if (!(v > 0.0)) throw std::invalid_argument("fit_slope: log of nonpositive x");
            v = std::log(v);
        }
        for (auto& v : y) {
            if (!(v > 0.0)) throw std::invalid_argument("fit_slope: log of nonpositive y");
            v = std::log(v);
        }
    }
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0))
        throw std::invalid_argument("fit_slope: degenerate abscissae");
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.residuals.resize(n);
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        f.residuals[i] = y[i] - (f.slope * x[i] + f.intercept);
        ss_res += f.residuals[i] * f.residuals[i];
    }
    f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return f;
}

}  // namespace runtumble
