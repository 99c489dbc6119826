#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <vector>

#include "bosefeed/config.hpp"
#include "bosefeed/errors.hpp"
#include "bosefeed/hilbert.hpp"
#include "bosefeed/linalg.hpp"
#include "bosefeed/quadrature.hpp"

namespace bosefeed {

// Fixed-N symmetric Fock sector over the M lowest trap modes.
// States are occupation vectors (n_0, ..., n_{M-1}) with sum N, enumerated
// in descending lexicographic order: (N,0,...,0) first.
struct FockBasis {
    int n_atoms = 0;
    int n_modes = 0;
    long dim = 0;
    std::vector<std::vector<int>> states;
    std::map<std::vector<int>, int> index;
};

inline long fock_dimension(int n, int m) {
    // C(n+m-1, m-1)
    long r = 1;
    for (int i = 1; i <= m - 1; ++i) r = r * (n + i) / i;
    return r;
}

inline FockBasis make_fock_basis(int n_atoms, int n_modes, long cap = 5000) {
    if (n_atoms < 0) throw ConfigError("fock basis: N must be >= 0");
    if (n_modes < 1) throw ConfigError("fock basis: M must be >= 1");
    const long dim = fock_dimension(n_atoms, n_modes);
    if (dim > cap)
        throw CapacityError("Fock sector dimension " + std::to_string(dim) +
                            " exceeds cap " + std::to_string(cap));
    FockBasis b;
    b.n_atoms = n_atoms;
    b.n_modes = n_modes;
    b.dim = dim;
    std::vector<int> occ(n_modes, 0);
    std::function<void(int, int)> gen = [&](int mode, int rem) {
        if (mode == n_modes - 1) {
            occ[mode] = rem;
            b.states.push_back(occ);
            return;
        }
        for (int k = rem; k >= 0; --k) {
            occ[mode] = k;
            gen(mode + 1, rem - k);
        }
    };
    gen(0, n_atoms);
    for (int i = 0; i < static_cast<int>(b.states.size()); ++i)
        b.index.emplace(b.states[i], i);
    return b;
}

// dGamma(h): sum_{mu,lambda} h_{mu,lambda} phi^dag_mu phi_lambda on the sector.
// Uses the leading M x M block of sop.
inline Matrix second_quantize(const Matrix& sop, const FockBasis& b) {
    const int m = b.n_modes;
    if (sop.rows() < m || sop.cols() < m)
        throw ConfigError("second_quantize: single-atom operator smaller than mode count");
    Matrix out = Matrix::Zero(b.dim, b.dim);
    std::vector<int> target;
    for (long j = 0; j < b.dim; ++j) {
        const auto& s = b.states[j];
        for (int lam = 0; lam < m; ++lam) {
            if (s[lam] == 0) continue;
            for (int mu = 0; mu < m; ++mu) {
                const Complex h = sop(mu, lam);
                if (h == Complex(0, 0)) continue;
                if (mu == lam) {
                    out(j, j) += h * double(s[lam]);
                } else {
                    target = s;
                    --target[lam];
                    ++target[mu];
                    const int i = b.index.at(target);
                    out(i, j) += h * std::sqrt(double(s[lam]) * double(s[mu] + 1));
                }
            }
        }
    }
    return out;
}

inline Matrix second_quantize(const SingleAtomOp& sop, const FockBasis& b) {
    return second_quantize(sop.matrix, b);
}

inline Matrix macro_a(const FockBasis& b, const SingleAtomOp& p_op) {
    return second_quantize(p_op, b);
}

inline Matrix macro_b(const FockBasis& b, const SingleAtomOp& q_op, int n_e) {
    if (n_e <= 0) throw ConfigError("macro_b: N_e must be a positive integer");
    return second_quantize(q_op, b) / double(n_e);
}

inline Matrix number_op(const FockBasis& b) {
    Matrix n = Matrix::Zero(b.dim, b.dim);
    for (long j = 0; j < b.dim; ++j) n(j, j) = Complex(b.n_atoms, 0);
    return n;
}

struct ManyBodyState {
    Matrix rho;
};

inline ManyBodyState bec_ground_state(const FockBasis& b) {
    std::vector<int> occ(b.n_modes, 0);
    occ[0] = b.n_atoms;
    const int i0 = b.index.at(occ);
    Matrix rho = Matrix::Zero(b.dim, b.dim);
    rho(i0, i0) = 1.0;
    return {rho};
}

// Hermiticity / positivity / unit-trace checks for density matrices.
inline void validate_state(const ManyBodyState& st, double psd_tol = 1e-10,
                           double trace_tol = 1e-10) {
    if (!is_hermitian(st.rho)) throw ConfigError("state: not Hermitian");
    if (std::abs(st.rho.trace().real() - 1.0) > trace_tol ||
        std::abs(st.rho.trace().imag()) > trace_tol)
        throw ConfigError("state: trace != 1");
    const auto eig = hermitian_eigen(st.rho);
    if (eig.values.minCoeff() < -psd_tol)
        throw ConfigError("state: not positive semidefinite");
}

struct OracleOptions {
    int a_nodes = 201;
    double range_mult = 8.0;
    double trace_tol = 1e-8;
    double leak_tol = 1e-6;
};

// Total weight on occupation states that use the top single-atom mode.
inline double top_mode_weight(const Matrix& rho, const FockBasis& b) {
    double w = 0.0;
    for (long i = 0; i < b.dim; ++i)
        if (b.states[i][b.n_modes - 1] > 0) w += rho(i, i).real();
    return w;
}

// One feedback cycle on the exact N-atom state: Gaussian measurement of the
// total momentum followed by the conditional collective kick, averaged over
// outcomes by Gauss-Legendre quadrature.  No output renormalization; the
// trace drift is checked against opts.trace_tol.
inline ManyBodyState exact_feedback_with(const ManyBodyState& state,
                                         const FeedbackConfig& cfg,
                                         const FockBasis& fock,
                                         const TrapBasis& trap,
                                         const std::function<double(double)>& f,
                                         const OracleOptions& opts = {}) {
    cfg.validate();
    const Matrix a_op = macro_a(fock, momentum_op(trap));
    const Matrix b_op = macro_b(fock, position_op(trap), cfg.n_e);

    const auto ea = hermitian_eigen(a_op);
    const auto eb = hermitian_eigen(b_op);
    const Matrix w_ab = eb.vectors.adjoint() * ea.vectors;  // A-basis -> B-basis

    const double tr0 = state.rho.trace().real();

    // rank-revealing: evolve eigenvectors of rho individually (fast path for
    // diagonal rho, e.g. the condensate ground state)
    std::vector<std::pair<double, Vector>> comps;
    double offdiag = 0.0;
    for (long i = 0; i < fock.dim && offdiag <= 1e-15 * std::max(tr0, 1.0); ++i)
        for (long j = 0; j < fock.dim; ++j)
            if (i != j) offdiag = std::max(offdiag, std::abs(state.rho(i, j)));
    if (offdiag <= 1e-15 * std::max(tr0, 1.0)) {
        for (long i = 0; i < fock.dim; ++i)
            if (state.rho(i, i).real() > 1e-14 * std::max(tr0, 1.0))
                comps.emplace_back(state.rho(i, i).real(),
                                   ea.vectors.row(i).adjoint());
    } else {
        const auto er = hermitian_eigen(state.rho);
        for (Eigen::Index r = 0; r < er.values.size(); ++r)
            if (er.values(r) > 1e-14 * std::max(tr0, 1.0))
                comps.emplace_back(er.values(r),
                                   ea.vectors.adjoint() * er.vectors.col(r));
    }

    double mean = 0.0, msq = 0.0;
    for (const auto& [lam, va] : comps)
        for (long i = 0; i < fock.dim; ++i) {
            const double w = lam * std::norm(va(i));
            mean += w * ea.values(i);
            msq += w * ea.values(i) * ea.values(i);
        }
    mean /= tr0;
    msq /= tr0;
    const double var = std::max(msq - mean * mean, 0.0);
    const double half = opts.range_mult * cfg.sigma + opts.range_mult * std::sqrt(var);
    const auto rule = gauss_legendre(opts.a_nodes).scaled(mean, half);

    const double norm = std::pow(2.0 * M_PI * cfg.sigma * cfg.sigma, -0.25);
    Matrix out_b = Matrix::Zero(fock.dim, fock.dim);
    Eigen::VectorXd mvals(fock.dim);
    for (std::size_t k = 0; k < rule.size(); ++k) {
        const double a_val = rule.nodes[k];
        for (long i = 0; i < fock.dim; ++i) {
            const double x = a_val - ea.values(i);
            mvals(i) = norm * std::exp(-x * x / (4.0 * cfg.sigma * cfg.sigma));
        }
        const double fv = f(a_val);
        Vector kick(fock.dim);
        for (long i = 0; i < fock.dim; ++i)
            kick(i) = std::exp(Complex(0.0, fv * eb.values(i)));
        for (const auto& [lam, va] : comps) {
            Vector y = w_ab * (mvals.cast<Complex>().cwiseProduct(va));
            y = kick.cwiseProduct(y);
            out_b.noalias() += (rule.weights[k] * lam) * (y * y.adjoint());
        }
    }
    ManyBodyState post{eb.vectors * out_b * eb.vectors.adjoint()};

    const double drift = std::abs(post.rho.trace().real() - tr0) +
                         std::abs(post.rho.trace().imag());
    if (drift > opts.trace_tol)
        throw ToleranceError("quadrature under-resolved: feedback trace drift " +
                             std::to_string(drift));
    const double leak = top_mode_weight(post.rho, fock);
    if (leak > opts.leak_tol)
        throw ToleranceError("mode truncation leakage " + std::to_string(leak) +
                             " exceeds tolerance; increase n_modes");
    return post;
}

inline ManyBodyState exact_feedback(const ManyBodyState& state,
                                    const FeedbackConfig& cfg,
                                    const FockBasis& fock, const TrapBasis& trap,
                                    const OracleOptions& opts = {}) {
    return exact_feedback_with(state, cfg, fock, trap,
                               [&](double a) { return cfg.response(a); }, opts);
}

// rho_{mu,lambda} = <phi^dag_lambda phi_mu>, trace = N.
inline Matrix single_atom_dm(const ManyBodyState& state, const FockBasis& b) {
    const int m = b.n_modes;
    Matrix rho = Matrix::Zero(m, m);
    std::vector<int> target;
    for (long j = 0; j < b.dim; ++j) {
        const auto& s = b.states[j];
        for (int mu = 0; mu < m; ++mu) {
            if (s[mu] == 0) continue;
            for (int lam = 0; lam < m; ++lam) {
                // phi^dag_lambda phi_mu |j> = c |i>
                target = s;
                --target[mu];
                ++target[lam];
                const double c =
                    std::sqrt(double(s[mu])) *
                    std::sqrt(double(s[lam] - (lam == mu ? 1 : 0) + 1));
                rho(mu, lam) += c * state.rho(j, b.index.at(target));
            }
        }
    }
    return rho;
}

namespace detail {
// phi_mu as a map from the N sector to the (N-1) sector; triplets
// (row in N-1, col in N, sqrt(n_mu)).
struct LoweringMap {
    std::vector<std::array<long, 2>> idx;
    std::vector<double> val;
};

inline LoweringMap lowering_map(const FockBasis& from, const FockBasis& to, int mu) {
    LoweringMap lm;
    std::vector<int> target;
    for (long j = 0; j < from.dim; ++j) {
        const auto& s = from.states[j];
        if (s[mu] == 0) continue;
        target = s;
        --target[mu];
        lm.idx.push_back({static_cast<long>(to.index.at(target)), j});
        lm.val.push_back(std::sqrt(double(s[mu])));
    }
    return lm;
}

inline Matrix z_generator(const FockBasis& b, const TrapBasis& trap,
                          const ZVector& z, int n_e) {
    Matrix h = Matrix::Zero(b.dim, b.dim);
    if (z.alpha != 0.0) h += z.alpha * macro_a(b, momentum_op(trap));
    if (z.beta != 0.0) h += z.beta * macro_b(b, position_op(trap), n_e);
    if (z.gamma != 0.0) h += (z.gamma / double(n_e)) * number_op(b);
    return h;
}
}  // namespace detail

// D_{mu,lambda}(z) = <phi^dag_lambda exp(i z.Z) phi_mu> for every mode pair.
// The Z components act on the (N-1)-atom sector; N_e is kept from the
// N-sector configuration.
inline Matrix correlation_matrix(const ManyBodyState& state, const FockBasis& b,
                                 const ZVector& z, int n_e, const TrapBasis& trap) {
    if (!z.finite()) throw ConfigError("correlation: z has non-finite components");
    if (b.n_atoms < 1) throw ConfigError("correlation: empty sector (N=0)");
    if (n_e <= 0) throw ConfigError("correlation: N_e must be a positive integer");
    const int m = b.n_modes;
    const FockBasis bm = make_fock_basis(b.n_atoms - 1, m, b.dim);
    Matrix t;
    if (b.n_atoms == 1) {
        t = Matrix::Identity(1, 1);
    } else {
        const auto eig = hermitian_eigen(detail::z_generator(bm, trap, z, n_e));
        t = apply_spectral(eig, [](double w) { return std::exp(Complex(0.0, w)); });
    }
    std::vector<detail::LoweringMap> phi;
    phi.reserve(m);
    for (int mu = 0; mu < m; ++mu) phi.push_back(detail::lowering_map(b, bm, mu));

    // p_mu = phi_mu * rho  (dim' x dim)
    std::vector<Matrix> p(m);
    for (int mu = 0; mu < m; ++mu) {
        p[mu] = Matrix::Zero(bm.dim, b.dim);
        const auto& lm = phi[mu];
        for (std::size_t e = 0; e < lm.val.size(); ++e)
            p[mu].row(lm.idx[e][0]) += lm.val[e] * state.rho.row(lm.idx[e][1]);
    }
    Matrix d(m, m);
    for (int mu = 0; mu < m; ++mu) {
        for (int lam = 0; lam < m; ++lam) {
            // sigma = phi_mu rho phi_lambda^dag; D = Tr[t sigma]
            const auto& lml = phi[lam];
            Complex acc(0, 0);
            for (std::size_t e = 0; e < lml.val.size(); ++e) {
                // column lml.idx[e][0] of sigma is val * p[mu].col(lml.idx[e][1])
                acc += lml.val[e] *
                       (t.row(lml.idx[e][0]) * p[mu].col(lml.idx[e][1]))(0, 0);
            }
            d(mu, lam) = acc;
        }
    }
    return d;
}

inline Complex correlation_at(const ManyBodyState& state, const FockBasis& b,
                              const ZVector& z, int mu, int lambda, int n_e,
                              const TrapBasis& trap) {
    return correlation_matrix(state, b, z, n_e, trap)(mu, lambda);
}

// Exact free evolution: diagonal phases on occupation states.
inline ManyBodyState free_evolve(const ManyBodyState& state, const FockBasis& b,
                                 double t, const Eigen::VectorXd& energies) {
    if (energies.size() < b.n_modes)
        throw ConfigError("free_evolve: energies shorter than mode count");
    Eigen::VectorXd e(b.dim);
    for (long i = 0; i < b.dim; ++i) {
        double s = 0.0;
        for (int l = 0; l < b.n_modes; ++l) s += b.states[i][l] * energies(l);
        e(i) = s;
    }
    Matrix rho(b.dim, b.dim);
    for (long i = 0; i < b.dim; ++i)
        for (long j = 0; j < b.dim; ++j)
            rho(i, j) = state.rho(i, j) * std::exp(Complex(0.0, -(e(i) - e(j)) * t));
    return {rho};
}

// <exp(i z.Z)> on the N sector.
inline Complex macro_characteristic(const ManyBodyState& state, const FockBasis& b,
                                    const ZVector& z, int n_e, const TrapBasis& trap) {
    if (n_e <= 0) throw ConfigError("macro_characteristic: N_e must be positive");
    const auto eig = hermitian_eigen(detail::z_generator(b, trap, z, n_e));
    const Matrix t = apply_spectral(eig, [](double w) { return std::exp(Complex(0.0, w)); });
    return (state.rho * t).trace();
}

}  // namespace bosefeed
