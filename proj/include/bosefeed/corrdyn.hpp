#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <vector>

#include "bosefeed/config.hpp"
#include "bosefeed/errors.hpp"
#include "bosefeed/hilbert.hpp"
#include "bosefeed/linalg.hpp"
#include "bosefeed/quadrature.hpp"

namespace bosefeed {

// Closed-form correlation field of the condensate family:
//   D_{mu,lambda}(z) = coeff_{mu,lambda} * exp(i c gamma - (1/2) u^T Q u),
// u = (alpha, beta).  Free evolution maps the family onto itself.
struct GaussianForm {
    Matrix coeff;
    Eigen::Matrix2d quad = Eigen::Matrix2d::Zero();
    double gamma_coeff = 0.0;
};

// D_{mu,lambda}(z): lazy evaluator with memoization on quantized z.
// Fields built by this library from fixed-N states carry an exact
// exp(i c gamma) dependence in gamma; gamma_phase records c when known.
class CorrelationField {
public:
    enum class Kind { analytic_gaussian, numeric_composed };
    using MatrixEvaluator = std::function<Matrix(const ZVector&)>;

    static CorrelationField from_gaussian(GaussianForm form, int n_e, int depth = 0) {
        auto impl = std::make_shared<Impl>();
        impl->n_modes = static_cast<int>(form.coeff.rows());
        impl->n_atoms = form.coeff.trace().real();
        impl->n_e = n_e;
        impl->depth = depth;
        impl->z_independent =
            form.quad.cwiseAbs().maxCoeff() == 0.0 && form.gamma_coeff == 0.0;
        impl->gamma_phase = form.gamma_coeff;
        impl->gaussian = form;
        impl->evaluator = [form](const ZVector& z) {
            const double quad = form.quad(0, 0) * z.alpha * z.alpha +
                                2.0 * form.quad(0, 1) * z.alpha * z.beta +
                                form.quad(1, 1) * z.beta * z.beta;
            const Complex s =
                std::exp(Complex(-0.5 * quad, form.gamma_coeff * z.gamma));
            return Matrix(s * form.coeff);
        };
        return CorrelationField(std::move(impl));
    }

    static CorrelationField from_evaluator(MatrixEvaluator ev, int n_modes,
                                           double n_atoms, int n_e,
                                           std::optional<double> gamma_phase,
                                           bool z_independent, int depth) {
        auto impl = std::make_shared<Impl>();
        impl->n_modes = n_modes;
        impl->n_atoms = n_atoms;
        impl->n_e = n_e;
        impl->depth = depth;
        impl->z_independent = z_independent;
        impl->gamma_phase = gamma_phase;
        impl->evaluator = std::move(ev);
        return CorrelationField(std::move(impl));
    }

    Matrix evaluate(const ZVector& z) const {
        if (!z.finite()) throw ConfigError("correlation field: non-finite z");
        const Key key{quantize(z.alpha), quantize(z.beta), quantize(z.gamma)};
        {
            std::shared_lock lock(impl_->mutex);
            const auto it = impl_->cache.find(key);
            if (it != impl_->cache.end()) return it->second;
        }
        Matrix m = impl_->evaluator(z);
        {
            std::unique_lock lock(impl_->mutex);
            impl_->cache.emplace(key, m);
        }
        return m;
    }

    Complex evaluate(int mu, int lambda, const ZVector& z) const {
        return evaluate(z)(mu, lambda);
    }

    Kind kind() const {
        return impl_->gaussian ? Kind::analytic_gaussian : Kind::numeric_composed;
    }
    int n_modes() const { return impl_->n_modes; }
    double n_atoms() const { return impl_->n_atoms; }
    int n_e() const { return impl_->n_e; }
    int depth() const { return impl_->depth; }
    bool z_independent() const { return impl_->z_independent; }
    const std::optional<GaussianForm>& gaussian_form() const { return impl_->gaussian; }
    std::optional<double> gamma_phase() const { return impl_->gamma_phase; }

private:
    using Key = std::array<long long, 3>;

    struct Impl {
        int n_modes = 0;
        double n_atoms = 0.0;
        int n_e = 1;
        int depth = 0;
        bool z_independent = false;
        std::optional<double> gamma_phase;
        std::optional<GaussianForm> gaussian;
        MatrixEvaluator evaluator;
        mutable std::shared_mutex mutex;
        mutable std::map<Key, Matrix> cache;
    };

    static long long quantize(double x) { return llround(x * 1e9); }

    explicit CorrelationField(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<Impl> impl_;
};

// Initial correlation field of the N-atom condensate (all atoms in the trap
// ground state, N_e = N): rank-one coefficient N |0><0|, phase
// exp[i gamma (1 - 1/N)], Gaussian widths (N-1) dp0^2 and (N-1) dq0^2 / N^2.
inline CorrelationField bec_initial(int n_atoms, const TrapBasis& basis) {
    if (n_atoms < 1) throw ConfigError("bec_initial: N must be >= 1");
    GaussianForm form;
    form.coeff = Matrix::Zero(basis.dim, basis.dim);
    form.coeff(0, 0) = Complex(n_atoms, 0);
    form.quad(0, 0) = (n_atoms - 1) * basis.dp0 * basis.dp0;
    form.quad(1, 1) = (n_atoms - 1) * basis.dq0 * basis.dq0 / double(n_atoms * n_atoms);
    form.gamma_coeff = 1.0 - 1.0 / n_atoms;
    return CorrelationField::from_gaussian(std::move(form), n_atoms);
}

namespace detail {

// Probes a numeric field for the half-range where its alpha' tail has
// decayed; errors if no such range is found.
inline double alpha_tail_range(const CorrelationField& d, double beta, double gamma,
                               const QuadSpec& quad) {
    if (quad.alpha_range > 0.0) return quad.alpha_range;
    const double scale = std::max(max_abs(d.evaluate({0.0, beta, gamma})), 1e-300);
    double r = 8.0;
    for (int it = 0; it < 7; ++it) {
        const double tail = std::max(max_abs(d.evaluate({r, beta, gamma})),
                                     max_abs(d.evaluate({-r, beta, gamma})));
        if (tail <= 1e-10 * scale) return r;
        r *= 2.0;
    }
    throw ToleranceError("alpha tail unresolved: field does not decay within range");
}

}  // namespace detail

// Fourier transform of the field over alpha' at argument x:
//   Dt(x; beta, gamma) = int dalpha' exp(-i alpha' x) D(alpha', beta, gamma).
// Closed form for the Gaussian family, Gauss-Legendre otherwise.
inline Matrix alpha_fourier_matrix(const CorrelationField& d, double beta,
                                   double gamma, double x, const QuadSpec& quad) {
    if (d.z_independent())
        throw ConfigError(
            "alpha_fourier: field is z-independent (single-atom branch applies)");
    if (d.gaussian_form()) {
        const auto& g = *d.gaussian_form();
        const double q11 = g.quad(0, 0), q12 = g.quad(0, 1), q22 = g.quad(1, 1);
        if (!(q11 > 0.0))
            throw ConfigError("alpha_fourier: degenerate Gaussian width");
        const Complex arg = Complex(q12 * beta, x);
        const Complex s = std::sqrt(2.0 * M_PI / q11) *
                          std::exp(arg * arg / (2.0 * q11) +
                                   Complex(-0.5 * q22 * beta * beta,
                                           g.gamma_coeff * gamma));
        return Matrix(s * g.coeff);
    }
    const double r = detail::alpha_tail_range(d, beta, gamma, quad);
    const auto rule = gauss_legendre(quad.n_alpha).scaled(0.0, r);
    Matrix out = Matrix::Zero(d.n_modes(), d.n_modes());
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double ap = rule.nodes[i];
        out += (rule.weights[i] * std::exp(Complex(0.0, -ap * x))) *
               d.evaluate({ap, beta, gamma});
    }
    return out;
}

inline Complex alpha_fourier(const CorrelationField& d, int mu, int lambda,
                             double beta, double gamma, double x,
                             const QuadSpec& quad) {
    return alpha_fourier_matrix(d, beta, gamma, x, quad)(mu, lambda);
}

namespace detail {

// Spectral data of the single-atom q and p operators plus node rules,
// shared by the kernel quadratures.
struct KernelWorkspace {
    HermitianEigen q;  // kick generator
    HermitianEigen p;  // measured observable
    Matrix p_to_q;     // V_q^dag V_p
    double half_a = 0.0;
    double norm = 0.0;  // (2 pi sigma^2)^(-1/4)

    KernelWorkspace(const TrapBasis& basis, const FeedbackConfig& cfg,
                    double n_atoms)
        : q(hermitian_eigen(position_op(basis).matrix)),
          p(hermitian_eigen(momentum_op(basis).matrix)) {
        p_to_q = q.vectors.adjoint() * p.vectors;
        half_a = cfg.quad.range_mult *
                 (cfg.sigma + std::sqrt(std::max(n_atoms, 1.0)) * basis.dp0);
        norm = std::pow(2.0 * M_PI * cfg.sigma * cfg.sigma, -0.25);
    }

    // diag(m(a' - p)) in the p eigenbasis
    Eigen::VectorXd m_diag(double a_prime, double sigma) const {
        Eigen::VectorXd v(p.values.size());
        for (Eigen::Index i = 0; i < p.values.size(); ++i) {
            const double x = a_prime - p.values(i);
            v(i) = norm * std::exp(-x * x / (4.0 * sigma * sigma));
        }
        return v;
    }

    // diag(exp(i f q / N_e)) in the q eigenbasis
    Vector kick_diag(double f, int n_e) const {
        Vector v(q.values.size());
        for (Eigen::Index i = 0; i < q.values.size(); ++i)
            v(i) = std::exp(Complex(0.0, f * q.values(i) / n_e));
        return v;
    }
};

}  // namespace detail

// Direct single-atom feedback channel, rho' = int dA U(A) M(A-p) rho M^dag U^dag.
// This is the N = 1 limit of the kernel map and the zero-width surrogate used
// by the decorrelation statistic.
inline Matrix direct_single_atom_channel(const Matrix& rho, const FeedbackConfig& cfg,
                                         const TrapBasis& basis) {
    cfg.validate();
    const detail::KernelWorkspace ws(basis, cfg, 1.0);
    const double tr = rho.trace().real();
    if (!(tr > 0.0)) throw ConfigError("single-atom channel: trace must be > 0");
    const Matrix p_op = momentum_op(basis).matrix;
    const double mean = (rho * p_op).trace().real() / tr;
    const double msq = (rho * p_op * p_op).trace().real() / tr;
    const double var = std::max(msq - mean * mean, 0.0);
    const double half = cfg.quad.range_mult * (cfg.sigma + std::sqrt(var));
    const auto rule = gauss_legendre(cfg.quad.n_a).scaled(mean, half);

    const Matrix rho_p = ws.p.vectors.adjoint() * rho * ws.p.vectors;
    Matrix out_q = Matrix::Zero(basis.dim, basis.dim);
    for (std::size_t k = 0; k < rule.size(); ++k) {
        const Eigen::VectorXd m = ws.m_diag(rule.nodes[k], cfg.sigma);
        const Matrix mm =
            m.cast<Complex>().asDiagonal() * rho_p * m.cast<Complex>().asDiagonal();
        Matrix t = ws.p_to_q * mm * ws.p_to_q.adjoint();
        const Vector u = ws.kick_diag(cfg.response(rule.nodes[k]), cfg.n_e);
        t = u.asDiagonal() * t;
        t = t * u.conjugate().asDiagonal();
        out_q += rule.weights[k] * t;
    }
    return ws.q.vectors * out_q * ws.q.vectors.adjoint();
}

namespace detail {

// Shared implementation of the beta = 0 kernel quadrature:
//   (1/2pi) sum_{j,k} w_j w_k e^{i alpha (A_j - A'_k)}
//     U(A_j) M(A'_k - p) Dt(A_j - A'_k; 0, gamma + alpha f(A_j)) M(A'_k - p) U^dag(A_j)
inline Matrix kernel_map_beta0(const CorrelationField& d, const FeedbackConfig& cfg,
                               const TrapBasis& basis, double alpha, double gamma,
                               const QuadSpec& quad) {
    const KernelWorkspace ws(basis, cfg, d.n_atoms());
    const auto rule_a = gauss_legendre(quad.n_a).scaled(0.0, ws.half_a);
    const auto rule_ap = gauss_legendre(quad.n_aprime).scaled(0.0, ws.half_a);
    const int dim = basis.dim;

    const std::optional<double> c = d.gamma_phase();
    const bool structured = c.has_value();
    if (!structured && (alpha != 0.0 || gamma != 0.0))
        throw ConfigError(
            "feedback kernel: field lacks the fixed-N gamma phase; "
            "only the z = 0 map is available for opaque fields");

    // Dt0(x) := Dt(x; 0, 0) as a function handle; separable Gaussian fields
    // factor into a scalar profile times a constant coefficient matrix.
    const bool separable = d.gaussian_form().has_value();
    Matrix coeff;
    std::function<Complex(double)> profile;
    std::function<Matrix(double)> full;
    if (separable) {
        const auto& g = *d.gaussian_form();
        const double q11 = g.quad(0, 0);
        if (!(q11 > 0.0)) throw ConfigError("feedback kernel: degenerate field width");
        coeff = g.coeff;
        profile = [q11](double x) {
            return Complex(std::sqrt(2.0 * M_PI / q11) * std::exp(-x * x / (2.0 * q11)), 0.0);
        };
    } else {
        full = [&](double x) { return alpha_fourier_matrix(d, 0.0, 0.0, x, quad); };
    }

    // sandwich in the p eigenbasis: P_k(x) = m_k . Dt0(x) . m_k
    std::vector<Eigen::VectorXd> mdiags(rule_ap.size());
    for (std::size_t k = 0; k < rule_ap.size(); ++k)
        mdiags[k] = ws.m_diag(rule_ap.nodes[k], cfg.sigma);

    Matrix coeff_p;
    if (separable)
        coeff_p = ws.p.vectors.adjoint() * coeff * ws.p.vectors;

    Matrix out_q = Matrix::Zero(dim, dim);
    for (std::size_t j = 0; j < rule_a.size(); ++j) {
        const double a_val = rule_a.nodes[j];
        const double f = cfg.response(a_val);
        Matrix inner_p = Matrix::Zero(dim, dim);
        for (std::size_t k = 0; k < rule_ap.size(); ++k) {
            const double x = a_val - rule_ap.nodes[k];
            const Complex phase =
                rule_ap.weights[k] * std::exp(Complex(0.0, alpha * x));
            Matrix mid;
            if (separable) {
                mid = (phase * profile(x)) *
                      (mdiags[k].asDiagonal() * coeff_p * mdiags[k].asDiagonal());
            } else {
                mid = phase * (mdiags[k].asDiagonal() *
                               (ws.p.vectors.adjoint() * full(x) * ws.p.vectors) *
                               mdiags[k].asDiagonal());
            }
            inner_p += mid;
        }
        Complex w = rule_a.weights[j] / (2.0 * M_PI);
        if (structured) w *= std::exp(Complex(0.0, *c * (gamma + alpha * f)));
        const Vector u = ws.kick_diag(f, cfg.n_e);
        Matrix inner_q = ws.p_to_q * inner_p * ws.p_to_q.adjoint();
        inner_q = u.asDiagonal() * inner_q;
        inner_q = inner_q * u.conjugate().asDiagonal();
        out_q += w * inner_q;
    }
    return ws.q.vectors * out_q * ws.q.vectors.adjoint();
}

// beta != 0 branch: 4-D Gauss-Legendre over (A, A', A'', k) with both delta
// constraints of the kernel eliminated analytically (beta' = beta and
// gamma' = gamma + alpha f(A) + beta k).  Measurement operators enter at the
// half-shifted arguments A' -/+ A''/2; this choice, together with the sign of
// the beta k term, is pinned by the oracle-equivalence tests.
inline Matrix kernel_map_beta(const CorrelationField& d, const FeedbackConfig& cfg,
                              const TrapBasis& basis, const ZVector& z,
                              const QuadSpec& quad) {
    const KernelWorkspace ws(basis, cfg, d.n_atoms());
    const auto rule_a = gauss_legendre(quad.n_a).scaled(0.0, ws.half_a);
    const auto rule_ap = gauss_legendre(quad.n_aprime).scaled(0.0, ws.half_a);
    const auto rule_app = gauss_legendre(quad.n_adoubleprime).scaled(0.0, ws.half_a);
    const auto rule_k =
        gauss_legendre(quad.n_k).scaled(0.0, quad.range_mult / cfg.sigma);
    const int dim = basis.dim;
    const double beta = z.beta;

    const std::optional<double> c = d.gamma_phase();
    if (c.has_value()) {
        // k integral folded against the exact gamma phase:
        //   S(A'') = sum_m w_m exp(i k_m (A'' + c beta))
        std::vector<Complex> s_fold(rule_app.size(), Complex(0, 0));
        for (std::size_t l = 0; l < rule_app.size(); ++l)
            for (std::size_t m = 0; m < rule_k.size(); ++m)
                s_fold[l] += rule_k.weights[m] *
                             std::exp(Complex(0.0, rule_k.nodes[m] *
                                                       (rule_app.nodes[l] + *c * beta)));

        const bool separable = d.gaussian_form().has_value();
        Matrix coeff_p;
        std::function<Complex(double)> profile;
        if (separable) {
            const auto& g = *d.gaussian_form();
            const double q11 = g.quad(0, 0), q12 = g.quad(0, 1), q22 = g.quad(1, 1);
            if (!(q11 > 0.0))
                throw ConfigError("feedback kernel: degenerate field width");
            coeff_p = ws.p.vectors.adjoint() * g.coeff * ws.p.vectors;
            profile = [=](double x) {
                const Complex arg = Complex(q12 * beta, x);
                return std::sqrt(2.0 * M_PI / q11) *
                       std::exp(arg * arg / (2.0 * q11) - 0.5 * q22 * beta * beta);
            };
        }

        // Y_k = sum_l w_l S_l M(A'_k - A''_l/2) C M(A'_k + A''_l/2)   (p basis)
        std::vector<Matrix> y;
        if (separable) {
            y.resize(rule_ap.size());
            for (std::size_t k = 0; k < rule_ap.size(); ++k) {
                Matrix acc = Matrix::Zero(dim, dim);
                for (std::size_t l = 0; l < rule_app.size(); ++l) {
                    const Complex wl = rule_app.weights[l] * s_fold[l];
                    const Eigen::VectorXd m_minus = ws.m_diag(
                        rule_ap.nodes[k] - 0.5 * rule_app.nodes[l], cfg.sigma);
                    const Eigen::VectorXd m_plus = ws.m_diag(
                        rule_ap.nodes[k] + 0.5 * rule_app.nodes[l], cfg.sigma);
                    acc += wl * (m_minus.asDiagonal() * coeff_p * m_plus.asDiagonal());
                }
                y[k] = acc;
            }
        }

        Matrix out_q = Matrix::Zero(dim, dim);
        if (separable) {
            for (std::size_t j = 0; j < rule_a.size(); ++j) {
                const double a_val = rule_a.nodes[j];
                const double f = cfg.response(a_val);
                Matrix inner_p = Matrix::Zero(dim, dim);
                for (std::size_t k = 0; k < rule_ap.size(); ++k) {
                    const double x = a_val - rule_ap.nodes[k];
                    inner_p += (rule_ap.weights[k] * profile(x) *
                                std::exp(Complex(0.0, z.alpha * x))) *
                               y[k];
                }
                const Complex w = rule_a.weights[j] / (4.0 * M_PI * M_PI) *
                                  std::exp(Complex(0.0, *c * (z.gamma + z.alpha * f)));
                const Vector u = ws.kick_diag(f, cfg.n_e);
                Matrix inner_q = ws.p_to_q * inner_p * ws.p_to_q.adjoint();
                inner_q = u.asDiagonal() * inner_q;
                inner_q = inner_q * u.conjugate().asDiagonal();
                out_q += w * inner_q;
            }
        } else {
            // numeric-composed field with known gamma phase: middle matrix
            // Dt(x; beta, 0) depends on the (j,k) pair
            for (std::size_t j = 0; j < rule_a.size(); ++j) {
                const double a_val = rule_a.nodes[j];
                const double f = cfg.response(a_val);
                Matrix inner_p = Matrix::Zero(dim, dim);
                for (std::size_t k = 0; k < rule_ap.size(); ++k) {
                    const double x = a_val - rule_ap.nodes[k];
                    const Matrix mid_p =
                        ws.p.vectors.adjoint() *
                        alpha_fourier_matrix(d, beta, 0.0, x, quad) * ws.p.vectors;
                    Matrix acc = Matrix::Zero(dim, dim);
                    for (std::size_t l = 0; l < rule_app.size(); ++l) {
                        const Complex wl = rule_app.weights[l] * s_fold[l];
                        const Eigen::VectorXd m_minus = ws.m_diag(
                            rule_ap.nodes[k] - 0.5 * rule_app.nodes[l], cfg.sigma);
                        const Eigen::VectorXd m_plus = ws.m_diag(
                            rule_ap.nodes[k] + 0.5 * rule_app.nodes[l], cfg.sigma);
                        acc += wl * (m_minus.asDiagonal() * mid_p * m_plus.asDiagonal());
                    }
                    inner_p += (rule_ap.weights[k] *
                                std::exp(Complex(0.0, z.alpha * x))) *
                               acc;
                }
                const Complex w = rule_a.weights[j] / (4.0 * M_PI * M_PI) *
                                  std::exp(Complex(0.0, *c * (z.gamma + z.alpha * f)));
                const Vector u = ws.kick_diag(f, cfg.n_e);
                Matrix inner_q = ws.p_to_q * inner_p * ws.p_to_q.adjoint();
                inner_q = u.asDiagonal() * inner_q;
                inner_q = inner_q * u.conjugate().asDiagonal();
                out_q += w * inner_q;
            }
        }
        return ws.q.vectors * out_q * ws.q.vectors.adjoint();
    }

    // opaque field: literal nested quadrature, Dt evaluated per (j, k, m)
    Matrix out_q = Matrix::Zero(dim, dim);
    for (std::size_t j = 0; j < rule_a.size(); ++j) {
        const double a_val = rule_a.nodes[j];
        const double f = cfg.response(a_val);
        Matrix inner_p = Matrix::Zero(dim, dim);
        for (std::size_t k = 0; k < rule_ap.size(); ++k) {
            const double x = a_val - rule_ap.nodes[k];
            const Complex px = std::exp(Complex(0.0, z.alpha * x));
            for (std::size_t m = 0; m < rule_k.size(); ++m) {
                const double gp = z.gamma + z.alpha * f + beta * rule_k.nodes[m];
                const Matrix mid_p = ws.p.vectors.adjoint() *
                                     alpha_fourier_matrix(d, beta, gp, x, quad) *
                                     ws.p.vectors;
                for (std::size_t l = 0; l < rule_app.size(); ++l) {
                    const Complex w =
                        rule_ap.weights[k] * rule_k.weights[m] * rule_app.weights[l] *
                        px *
                        std::exp(Complex(0.0, rule_k.nodes[m] * rule_app.nodes[l]));
                    const Eigen::VectorXd m_minus = ws.m_diag(
                        rule_ap.nodes[k] - 0.5 * rule_app.nodes[l], cfg.sigma);
                    const Eigen::VectorXd m_plus = ws.m_diag(
                        rule_ap.nodes[k] + 0.5 * rule_app.nodes[l], cfg.sigma);
                    inner_p += w * (m_minus.asDiagonal() * mid_p * m_plus.asDiagonal());
                }
            }
        }
        const Complex w = rule_a.weights[j] / (4.0 * M_PI * M_PI);
        const Vector u = ws.kick_diag(f, cfg.n_e);
        Matrix inner_q = ws.p_to_q * inner_p * ws.p_to_q.adjoint();
        inner_q = u.asDiagonal() * inner_q;
        inner_q = inner_q * u.conjugate().asDiagonal();
        out_q += w * inner_q;
    }
    return ws.q.vectors * out_q * ws.q.vectors.adjoint();
}

inline QuadSpec doubled(const QuadSpec& q) {
    QuadSpec d = q;
    d.n_a *= 2;
    d.n_aprime *= 2;
    d.n_adoubleprime *= 2;
    d.n_k *= 2;
    d.n_alpha *= 2;
    return d;
}

}  // namespace detail

// Single-atom density matrix: the field at z = 0.
inline Matrix sadm(const CorrelationField& d) { return d.evaluate({0.0, 0.0, 0.0}); }

// Reduced feedback map: rho(t+) from the pre-feedback field.  Consumes
// Dt(A - A'; 0, 0) at nonzero argument, which is why no closed map exists on
// the single-atom density matrix alone.
inline Matrix feedback_reduced(const CorrelationField& d, const FeedbackConfig& cfg,
                               const TrapBasis& basis) {
    cfg.validate();
    Matrix out;
    if (d.z_independent()) {
        out = direct_single_atom_channel(sadm(d), cfg, basis);
    } else {
        out = detail::kernel_map_beta0(d, cfg, basis, 0.0, 0.0, cfg.quad);
        if (cfg.check_convergence) {
            const Matrix ref =
                detail::kernel_map_beta0(d, cfg, basis, 0.0, 0.0, detail::doubled(cfg.quad));
            if (max_abs(out - ref) > 1e-3 * std::max(1.0, max_abs(ref)))
                throw ToleranceError("kernel quadrature under-resolved (node doubling)");
        }
    }
    const double expected = d.n_atoms();
    const double drift = std::abs(out.trace().real() - expected) +
                         std::abs(out.trace().imag());
    if (drift > 1e-4 * std::max(expected, 1.0))
        throw ToleranceError("kernel quadrature under-resolved: trace drift " +
                             std::to_string(drift));
    return out;
}

// Full feedback map: D(z, t+) for one z.
inline Matrix feedback_full(const CorrelationField& d, const FeedbackConfig& cfg,
                            const TrapBasis& basis, const ZVector& z) {
    cfg.validate();
    if (!z.finite()) throw ConfigError("feedback_full: non-finite z");
    const auto run = [&](const QuadSpec& quad) {
        if (d.z_independent())
            return direct_single_atom_channel(sadm(d), cfg, basis);
        if (z.beta == 0.0)
            return detail::kernel_map_beta0(d, cfg, basis, z.alpha, z.gamma, quad);
        return detail::kernel_map_beta(d, cfg, basis, z, quad);
    };
    Matrix out = run(cfg.quad);
    if (cfg.check_convergence && !d.z_independent()) {
        const Matrix ref = run(detail::doubled(cfg.quad));
        if (max_abs(out - ref) > 1e-3 * std::max(1.0, max_abs(ref)))
            throw ToleranceError("kernel quadrature under-resolved (node doubling)");
    }
    return out;
}

// Wraps one feedback stage as a new lazily-evaluated field.  At most three
// stages per run; each stage nests quadratures and the cost grows
// geometrically.
inline CorrelationField compose_feedback(const CorrelationField& d,
                                         const FeedbackConfig& cfg,
                                         const TrapBasis& basis) {
    if (d.depth() + 1 > 3)
        throw CapacityError("feedback composition depth limit (3) exceeded");
    CorrelationField pre = d;
    FeedbackConfig c = cfg;
    TrapBasis b = basis;
    return CorrelationField::from_evaluator(
        [pre, c, b](const ZVector& z) { return feedback_full(pre, c, b, z); },
        basis.dim, d.n_atoms(), cfg.n_e, d.gamma_phase(), d.z_independent(),
        d.depth() + 1);
}

// E(sigma): distance between the kernel-mapped single-atom density matrix and
// the uncorrelated-atom surrogate (zero-width Dt replaced by the direct
// single-atom channel on rho_pre).  Decreases as the measurement resolution
// worsens.
inline double decorrelation_statistic(const CorrelationField& d,
                                      const FeedbackConfig& cfg,
                                      const TrapBasis& basis) {
    const Matrix full = feedback_reduced(d, cfg, basis);
    const Matrix surrogate = direct_single_atom_channel(sadm(d), cfg, basis);
    return (full - surrogate).norm();
}

}  // namespace bosefeed
