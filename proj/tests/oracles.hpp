#pragma once

// Test-only reference computations. Nothing here calls into the library's
// solver or rate propagation.

#include <algorithm>
#include <array>
#include <cmath>

namespace oracle {

// Undamped Picard iteration of the closed-form k=5 one-flow system, where
// every arrival rate has been substituted by gamma times a product of link
// probabilities. Runs until the max-norm step is below `tol`.
struct ChainFiveOneFlow {
    std::array<double, 4> p{1.0, 1.0, 1.0, 1.0};  // p12, p23, p34, p45
    int iterations = 0;
};

inline ChainFiveOneFlow picard_chain5(double gamma, double delta, double tol = 1e-12, int max_iter = 1000000) {
    ChainFiveOneFlow s;
    double p12 = 1.0, p23 = 1.0, p34 = 1.0;
    for (int it = 1; it <= max_iter; ++it) {
        const double w = 2.0 * delta * gamma;
        const double n12 = (1 - w * p12) * (1 - w * p12 * p23);
        const double n23 = (1 - w * p12 * p23) * (1 - w * p12 * p23 * p34);
        const double n34 = 1 - w * p12 * p23 * p34;
        const double step = std::max({std::abs(n12 - p12), std::abs(n23 - p23), std::abs(n34 - p34)});
        p12 = n12;
        p23 = n23;
        p34 = n34;
        s.iterations = it;
        if (step < tol) break;
    }
    s.p = {p12, p23, p34, 1.0};
    return s;
}

// Residuals of the same closed-form system at a candidate point.
inline std::array<double, 3> chain5_residuals(double gamma, double delta, double p12, double p23, double p34) {
    const double w = 2.0 * delta * gamma;
    return {p12 - (1 - w * p12) * (1 - w * p12 * p23),
            p23 - (1 - w * p12 * p23) * (1 - w * p12 * p23 * p34),
            p34 - (1 - w * p12 * p23 * p34)};
}

}  // namespace oracle
