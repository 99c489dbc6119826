#pragma once

#include <cmath>

#include "bosefeed/errors.hpp"
#include "bosefeed/hilbert.hpp"
#include "bosefeed/oracle.hpp"

namespace bosefeed {

// Per-atom moments of a single-atom density matrix normalized to <N>.
// Scaled entries are in units of the ground-state widths; the minimum
// uncertainty product corresponds to the value 1.
struct MomentReport {
    double mean_p = 0.0;
    double mean_q = 0.0;
    double var_p = 0.0;
    double var_q = 0.0;
    double var_p_scaled = 0.0;
    double var_q_scaled = 0.0;
    double uncertainty_product_scaled = 0.0;
    double n_atoms_mean = 0.0;
};

inline MomentReport moments(const Matrix& rho, const TrapBasis& basis_like) {
    const int dim = static_cast<int>(rho.rows());
    if (rho.cols() != dim) throw ConfigError("moments: matrix not square");
    const double tr = rho.trace().real();
    if (!(tr > 0.0)) throw ConfigError("moments: trace must be > 0");
    const TrapBasis b = make_trap_basis(dim, basis_like.omega);
    const Matrix q = position_op(b).matrix;
    const Matrix p = momentum_op(b).matrix;

    MomentReport r;
    r.n_atoms_mean = tr;
    r.mean_q = (rho * q).trace().real() / tr;
    r.mean_p = (rho * p).trace().real() / tr;
    r.var_q = (rho * q * q).trace().real() / tr - r.mean_q * r.mean_q;
    r.var_p = (rho * p * p).trace().real() / tr - r.mean_p * r.mean_p;
    r.var_q_scaled = r.var_q / (b.dq0 * b.dq0);
    r.var_p_scaled = r.var_p / (b.dp0 * b.dp0);
    r.uncertainty_product_scaled = std::sqrt(r.var_p * r.var_q) / (b.dq0 * b.dp0);
    return r;
}

// <(Delta A)^2> of the total momentum, oracle path.
inline double macro_variance_a(const ManyBodyState& state, const FockBasis& fock,
                               const TrapBasis& trap) {
    const Matrix a_op = macro_a(fock, momentum_op(trap));
    const double tr = state.rho.trace().real();
    const double mean = (state.rho * a_op).trace().real() / tr;
    const double msq = (state.rho * a_op * a_op).trace().real() / tr;
    return msq - mean * mean;
}

// Product-state closed form for the condensate: N independent atoms.
inline double macro_variance_a_bec(int n_atoms, const TrapBasis& trap) {
    return n_atoms * trap.dp0 * trap.dp0;
}

// Residual of the post-feedback variance relation
//   var_p(t+) = var_p(t-) - <(Delta A)^2>/N^2 + (sigma/N)^2
// for s = -1, A0 = 0, N_e = N.
inline double avar_check(const MomentReport& pre, double pre_macro_var,
                         const MomentReport& post, int n_atoms, double sigma) {
    const double n2 = double(n_atoms) * double(n_atoms);
    return post.var_p - (pre.var_p - pre_macro_var / n2 + sigma * sigma / n2);
}

}  // namespace bosefeed
