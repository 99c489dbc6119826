#pragma once

#include <Eigen/Dense>
#include <complex>

#ifdef BOSEFEED_USE_LAPACKE
#include <lapacke.h>
#endif

#include "bosefeed/errors.hpp"

namespace bosefeed {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_defect(const Matrix& m) {
    return max_abs(m - m.adjoint());
}

inline bool is_hermitian(const Matrix& m, double tol = 1e-10) {
    return hermiticity_defect(m) <= tol * std::max(1.0, max_abs(m));
}

struct HermitianEigen {
    Eigen::VectorXd values;
    Matrix vectors;  // columns
};

// Eigendecomposition of a Hermitian matrix.  Uses LAPACKE zheevd when built
// with it (divide and conquer, much faster above dim ~ 500), Eigen otherwise.
inline HermitianEigen hermitian_eigen(const Matrix& m) {
    const auto n = m.rows();
#ifdef BOSEFEED_USE_LAPACKE
    if (n >= 128) {
        HermitianEigen out;
        out.vectors = m;
        out.values.resize(n);
        const int info = LAPACKE_zheevd(
            LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n),
            reinterpret_cast<lapack_complex_double*>(out.vectors.data()),
            static_cast<lapack_int>(n), out.values.data());
        if (info != 0)
            throw ToleranceError("zheevd failed, info=" + std::to_string(info));
        return out;
    }
#endif
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success)
        throw ToleranceError("Hermitian eigendecomposition failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

// V * diag(f(w)) * V^dagger
template <typename Fn>
Matrix apply_spectral(const HermitianEigen& eig, Fn&& f) {
    const auto n = eig.values.size();
    Vector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = f(eig.values(i));
    return eig.vectors * d.asDiagonal() * eig.vectors.adjoint();
}

}  // namespace bosefeed
