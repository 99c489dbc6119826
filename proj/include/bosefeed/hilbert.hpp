#pragma once

#include <cmath>
#include <functional>

#include "bosefeed/config.hpp"
#include "bosefeed/errors.hpp"
#include "bosefeed/linalg.hpp"

namespace bosefeed {

// Truncated harmonic-trap energy basis, natural units hbar = m = 1.
struct TrapBasis {
    int dim = 0;
    double omega = 1.0;
    double dq0 = 0.0;  // ground-state position width, sqrt(1/(2 omega))
    double dp0 = 0.0;  // ground-state momentum width, sqrt(omega/2)
    Eigen::VectorXd energies;  // omega * (lambda + 1/2)
};

inline TrapBasis make_trap_basis(int dim, double omega) {
    if (dim < 1) throw ConfigError("trap basis: dim must be >= 1");
    if (!(omega > 0.0)) throw ConfigError("trap basis: omega must be > 0");
    TrapBasis b;
    b.dim = dim;
    b.omega = omega;
    b.dq0 = std::sqrt(1.0 / (2.0 * omega));
    b.dp0 = std::sqrt(omega / 2.0);
    b.energies.resize(dim);
    for (int l = 0; l < dim; ++l) b.energies(l) = omega * (l + 0.5);
    return b;
}

// Dense single-atom operator in the energy basis.
struct SingleAtomOp {
    Matrix matrix;
    int dim = 0;
    double omega = 1.0;
};

namespace detail {
inline Matrix ladder(int dim) {
    Matrix a = Matrix::Zero(dim, dim);
    for (int l = 1; l < dim; ++l) a(l - 1, l) = std::sqrt(double(l));
    return a;
}
}  // namespace detail

// q = dq0 (a + a^dag)
inline SingleAtomOp position_op(const TrapBasis& b) {
    const Matrix a = detail::ladder(b.dim);
    return {b.dq0 * (a + a.adjoint()), b.dim, b.omega};
}

// p = i dp0 (a^dag - a)
inline SingleAtomOp momentum_op(const TrapBasis& b) {
    const Matrix a = detail::ladder(b.dim);
    return {Complex(0, 1) * b.dp0 * (a.adjoint() - a), b.dim, b.omega};
}

// g(op) by eigendecomposition; op must be Hermitian.
inline SingleAtomOp hermitian_function(const SingleAtomOp& op,
                                       const std::function<Complex(double)>& g) {
    if (!is_hermitian(op.matrix)) throw ConfigError("hermitian_function: not Hermitian");
    const auto eig = hermitian_eigen(op.matrix);
    return {apply_spectral(eig, g), op.dim, op.omega};
}

// Gaussian resolution amplitude M(A - meas_op), normalized so that
// |M(A)|^2 integrates to one over A and has standard deviation sigma.
inline SingleAtomOp resolution_amplitude(double a_val, double sigma,
                                         const SingleAtomOp& meas_op) {
    if (!(sigma > 0.0)) throw ConfigError("resolution_amplitude: sigma must be > 0");
    const double norm = std::pow(2.0 * M_PI * sigma * sigma, -0.25);
    return hermitian_function(meas_op, [=](double w) {
        const double x = a_val - w;
        return Complex(norm * std::exp(-x * x / (4.0 * sigma * sigma)), 0.0);
    });
}

// Conditional kick U(A) = exp(+i f(A) conj_op / N_e).  The exponent sign is
// fixed once so that U^dag A_op U = A_op + f(A)/N_e holds for the
// (A_op = p, conj_op = q) pairing with [q, p] = i.
inline SingleAtomOp kick_unitary(double a_val, const LinearResponse& response,
                                 int n_e, const SingleAtomOp& conj_op) {
    if (n_e <= 0) throw ConfigError("kick_unitary: N_e must be a positive integer");
    const double f = response(a_val);
    return hermitian_function(conj_op, [=](double w) {
        return std::exp(Complex(0.0, f * w / n_e));
    });
}

}  // namespace bosefeed
