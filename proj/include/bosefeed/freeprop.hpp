#pragma once

#include <cmath>

#include "bosefeed/corrdyn.hpp"
#include "bosefeed/errors.hpp"
#include "bosefeed/hilbert.hpp"

namespace bosefeed {

// Linear map V_z(t) with Z(t) = V_z(t) . Z(0) for the Heisenberg-evolved
// vector operator Z = (A, B, N/N_e).  Third row and column stay (0,0,1):
// the atom number is conserved.
struct PropagationMatrix {
    enum class Kind { harmonic, free_particle };
    Eigen::Matrix3d v = Eigen::Matrix3d::Identity();
    double t = 0.0;
    Kind kind = Kind::harmonic;
};

// Harmonic trap, A = total momentum, B = (sum q)/N_e:
//   A(t) =  cos(wt) A - w N_e sin(wt) B
//   B(t) =  sin(wt)/(w N_e) A + cos(wt) B
inline PropagationMatrix harmonic_vz(double t, double omega, int n_e) {
    if (!(omega > 0.0)) throw ConfigError("harmonic_vz: omega must be > 0");
    if (n_e <= 0) throw ConfigError("harmonic_vz: N_e must be a positive integer");
    PropagationMatrix out;
    out.t = t;
    out.kind = PropagationMatrix::Kind::harmonic;
    const double c = std::cos(omega * t), s = std::sin(omega * t);
    out.v << c, -omega * n_e * s, 0.0,
             s / (omega * n_e), c, 0.0,
             0.0, 0.0, 1.0;
    return out;
}

// Free particle: A(t) = A, B(t) = B + (t/N_e) A.
inline PropagationMatrix free_particle_vz(double t, int n_e) {
    if (n_e <= 0) throw ConfigError("free_particle_vz: N_e must be a positive integer");
    PropagationMatrix out;
    out.t = t;
    out.kind = PropagationMatrix::Kind::free_particle;
    out.v << 1.0, 0.0, 0.0,
             t / double(n_e), 1.0, 0.0,
             0.0, 0.0, 1.0;
    return out;
}

// Free evolution of the field:
//   D_out(mu, lambda, z) = D_in(mu, lambda, V^T z) exp(-i (E_mu - E_lambda) t).
// Lazy wrapper; Gaussian-family inputs propagate in closed form.
inline CorrelationField evolve_correlation(const CorrelationField& d, double t,
                                           const PropagationMatrix& vz,
                                           const TrapBasis& basis) {
    const int dim = d.n_modes();
    Matrix phases(dim, dim);
    for (int mu = 0; mu < dim; ++mu)
        for (int lam = 0; lam < dim; ++lam)
            phases(mu, lam) =
                std::exp(Complex(0.0, -(basis.energies(mu) - basis.energies(lam)) * t));

    if (d.gaussian_form()) {
        const auto& g = *d.gaussian_form();
        GaussianForm out;
        out.coeff = g.coeff.cwiseProduct(phases);
        const Eigen::Matrix2d v2 = vz.v.topLeftCorner<2, 2>();
        out.quad = v2 * g.quad * v2.transpose();
        out.gamma_coeff = g.gamma_coeff;
        return CorrelationField::from_gaussian(std::move(out), d.n_e(), d.depth());
    }

    CorrelationField base = d;
    const Eigen::Matrix3d vt = vz.v.transpose();
    return CorrelationField::from_evaluator(
        [base, vt, phases](const ZVector& z) {
            Eigen::Vector3d zv(z.alpha, z.beta, z.gamma);
            zv = vt * zv;
            return Matrix(
                base.evaluate({zv(0), zv(1), zv(2)}).cwiseProduct(phases));
        },
        dim, d.n_atoms(), d.n_e(), d.gamma_phase(), d.z_independent(), d.depth());
}

}  // namespace bosefeed
