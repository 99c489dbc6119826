#pragma once

#include <cmath>
#include <vector>

#include "bosefeed/errors.hpp"

namespace bosefeed {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }

    // Affine map from [-1,1] to [center-half, center+half].
    QuadratureRule scaled(double center, double half) const {
        QuadratureRule r;
        r.nodes.reserve(size());
        r.weights.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) {
            r.nodes.push_back(center + half * nodes[i]);
            r.weights.push_back(half * weights[i]);
        }
        return r;
    }
};

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
inline QuadratureRule gauss_legendre(int n) {
    if (n < 1) throw ConfigError("gauss_legendre: order must be >= 1");
    QuadratureRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.weights[i] = w;
        r.nodes[n - 1 - i] = x;
        r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    return r;
}

}  // namespace bosefeed
