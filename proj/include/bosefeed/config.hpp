#pragma once

#include <cmath>

#include "bosefeed/errors.hpp"

namespace bosefeed {

// Argument of the correlation field, z = (alpha, beta, gamma), conjugate to
// (A_total, B_intensive, N/N_e).
struct ZVector {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;

    bool finite() const {
        return std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(gamma);
    }
};

// Linear feedback response f(A) = s * (A + A0).
struct LinearResponse {
    double s = -1.0;
    double a0 = 0.0;

    double operator()(double a) const { return s * (a + a0); }
};

struct QuadSpec {
    int n_a = 96;             // A (measured outcome)
    int n_aprime = 96;        // A'
    int n_adoubleprime = 128; // A''
    int n_k = 96;             // k
    int n_alpha = 257;        // alpha' Fourier transform (numeric fields)
    double range_mult = 8.0;
    double alpha_range = 0.0; // 0 = probe the field for its decay range
};

struct FeedbackConfig {
    double sigma = 1.0;
    LinearResponse response;  // f(A) = s (A + A0)
    int n_e = 1;
    QuadSpec quad;
    bool check_convergence = false;  // re-evaluate with doubled nodes, error on drift

    void validate() const {
        if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
        if (n_e <= 0) throw ConfigError("N_e must be a positive integer");
        if (quad.n_a < 32 || quad.n_aprime < 32 || quad.n_adoubleprime < 32 ||
            quad.n_k < 32 || quad.n_alpha < 32)
            throw ConfigError("quadrature node counts must be >= 32");
        if (!(quad.range_mult > 0.0)) throw ConfigError("range_mult must be > 0");
    }
};

}  // namespace bosefeed
