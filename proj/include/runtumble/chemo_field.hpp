#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace runtumble {

// Chemoattractant concentration as a sum of Gaussian bumps.
// Each term is alpha * exp(-beta * (x - center)^2) with alpha >= 0, beta > 0.
struct FieldTerm {
    double alpha = 0.0;
    double beta = 1.0;
    double center = 0.0;
};

struct ChemoField {
    std::vector<FieldTerm> terms;

    ChemoField() = default;
    explicit ChemoField(std::vector<FieldTerm> t) : terms(std::move(t)) {
        for (const auto& term : terms) {
            if (!(term.alpha >= 0.0))
                throw std::invalid_argument("ChemoField: amplitude must be >= 0");
            if (!(term.beta > 0.0))
                throw std::invalid_argument("ChemoField: width parameter must be > 0");
        }
    }

    double value(double x) const {
        double s = 0.0;
        for (const auto& t : terms) {
            const double d = x - t.center;
            s += t.alpha * std::exp(-t.beta * d * d);
        }
        return s;
    }

    double gradient(double x) const {
        double g = 0.0;
        for (const auto& t : terms) {
            const double d = x - t.center;
            g += -2.0 * t.alpha * t.beta * d * std::exp(-t.beta * d * d);
        }
        return g;
    }

    bool constant() const {
        for (const auto& t : terms)
            if (t.alpha != 0.0) return false;
        return true;
    }
};

// The two-bump profile used throughout the experiment presets.
inline ChemoField two_bump_field(double alpha, double beta, double c1, double c2) {
    return ChemoField({{alpha, beta, c1}, {alpha, beta, c2}});
}

}  // namespace runtumble
