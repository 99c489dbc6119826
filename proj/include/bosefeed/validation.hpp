#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "bosefeed/corrdyn.hpp"
#include "bosefeed/experiments.hpp"
#include "bosefeed/freeprop.hpp"
#include "bosefeed/observables.hpp"
#include "bosefeed/oracle.hpp"

namespace bosefeed {

struct CheckResult {
    std::string check;
    bool passed = false;
    double observed = 0.0;
    double tolerance = 0.0;
    std::string ref;
    bool diagnostic = false;  // evidence line, not gating
};

struct CriterionReport {
    int id = 0;
    std::string title;
    std::vector<CheckResult> checks;
    double seconds = 0.0;

    bool passed() const {
        for (const auto& c : checks)
            if (!c.diagnostic && !c.passed) return false;
        return true;
    }
};

struct ValidationOptions {
    double omega = 1.0;
    bool flip_kick_sign = false;  // harness sanity: must make the
                                  // transformation-law check fail
};

namespace vdetail {

// Deterministic normal deviates (mt19937 is pinned by the standard;
// the distribution adapters are not, so roll Box-Muller by hand).
struct DetRng {
    std::mt19937 gen;
    explicit DetRng(unsigned seed) : gen(seed) {}
    double uniform() { return (double(gen()) + 0.5) / 4294967296.0; }
    double normal() {
        const double u1 = uniform(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
};

inline double rel_err(const Matrix& a, const Matrix& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

inline FeedbackConfig negative_feedback(double sigma, int n_e) {
    FeedbackConfig cfg;
    cfg.sigma = sigma;
    cfg.response = {-1.0, 0.0};
    cfg.n_e = n_e;
    return cfg;
}

// Ginibre random density matrix on the sub-sector with occupation restricted
// to the first `support` modes, embedded into an M-mode basis.
inline ManyBodyState random_low_mode_state(int n_atoms, int n_modes, int support,
                                           DetRng& rng) {
    const FockBasis sub = make_fock_basis(n_atoms, support);
    Matrix x(sub.dim, sub.dim);
    for (long i = 0; i < sub.dim; ++i)
        for (long j = 0; j < sub.dim; ++j)
            x(i, j) = Complex(rng.normal(), rng.normal());
    Matrix r = x * x.adjoint();
    r /= r.trace().real();

    const FockBasis full = make_fock_basis(n_atoms, n_modes);
    Matrix rho = Matrix::Zero(full.dim, full.dim);
    std::vector<long> map(sub.dim);
    for (long i = 0; i < sub.dim; ++i) {
        std::vector<int> occ = sub.states[i];
        occ.resize(n_modes, 0);
        map[i] = full.index.at(occ);
    }
    for (long i = 0; i < sub.dim; ++i)
        for (long j = 0; j < sub.dim; ++j)
            rho(map[i], map[j]) = r(i, j);
    return {rho};
}

// z samples for the kernel-vs-oracle equivalence, frozen from
// mt19937(12345) uniforms on [-1,1]^3.
inline std::vector<ZVector> frozen_z_samples() {
    std::vector<ZVector> zs;
    DetRng rng(12345);
    for (int i = 0; i < 10; ++i) {
        const double a = 2.0 * rng.uniform() - 1.0;
        const double b = 2.0 * rng.uniform() - 1.0;
        const double g = 2.0 * rng.uniform() - 1.0;
        zs.push_back({a, b, g});
    }
    return zs;
}

}  // namespace vdetail

// 1. N=1 exact channel: post-feedback momentum variance equals sigma^2.
inline CriterionReport criterion1(const ValidationOptions& opt = {}) {
    vdetail::Timer timer;
    CriterionReport rep{1, "N=1 exact channel: var_p(t+) = sigma^2"};
    const double st = 1.0;

    {  // oracle path, M = 24 single-atom modes
        const TrapBasis trap = make_trap_basis(24, opt.omega);
        const double sigma = st * trap.dp0;
        const FockBasis fock = make_fock_basis(1, 24);
        const auto post = exact_feedback(bec_ground_state(fock),
                                         vdetail::negative_feedback(sigma, 1), fock, trap);
        const double var = moments(single_atom_dm(post, fock), trap).var_p;
        const double rel = std::abs(var - sigma * sigma) / (sigma * sigma);
        rep.checks.push_back({"oracle var_p relative error", rel <= 1e-6, rel, 1e-6,
                              "single-atom limit"});
    }
    {  // kernel path, d = 40
        const TrapBasis trap = make_trap_basis(40, opt.omega);
        const double sigma = st * trap.dp0;
        const Matrix rho =
            feedback_reduced(bec_initial(1, trap), vdetail::negative_feedback(sigma, 1), trap);
        const double var = moments(rho, trap).var_p;
        const double rel = std::abs(var - sigma * sigma) / (sigma * sigma);
        rep.checks.push_back({"kernel var_p relative error", rel <= 1e-4, rel, 1e-4,
                              "single-atom limit"});
    }
    rep.seconds = timer.seconds();
    rep.checks.push_back(
        {"runtime seconds", rep.seconds < 1.0, rep.seconds, 1.0, "single-atom limit"});
    return rep;
}

// 2. Moment relations at M=4: <p> compensated to zero, <q> unchanged,
// var_q increased by exactly 1/(4 sigma^2).  The measurement width is chosen
// in the weak regime (sigma/dp0 = 12) where the M=4 truncation corner stays
// below the stated tolerances; the mean relations are parity-exact at any
// sigma.  The truncation-leakage gate is lifted for this run: the collective
// kick scatters the state across ~sigma^2/N^2 modes, which M=4 cannot hold,
// while the q-moment relations are insensitive to it (the kick commutes with
// every function of q).
inline CriterionReport criterion2(const ValidationOptions& opt = {}) {
    vdetail::Timer timer;
    CriterionReport rep{2, "moment relations (oracle, N in {1,2,3}, M=4)"};
    const double st = 12.0;
    const TrapBasis trap = make_trap_basis(4, opt.omega);
    const double sigma = st * trap.dp0;
    OracleOptions opts;
    opts.leak_tol = 1.0;
    for (int n : {1, 2, 3}) {
        const FockBasis fock = make_fock_basis(n, 4);
        const auto pre = bec_ground_state(fock);
        const auto post =
            exact_feedback(pre, vdetail::negative_feedback(sigma, n), fock, trap, opts);
        const MomentReport m0 = moments(single_atom_dm(pre, fock), trap);
        const MomentReport m1 = moments(single_atom_dm(post, fock), trap);
        const std::string tag = "N=" + std::to_string(n);
        rep.checks.push_back({tag + " |<p>(t+)|", std::abs(m1.mean_p) <= 1e-8,
                              std::abs(m1.mean_p), 1e-8, "moment relations"});
        rep.checks.push_back({tag + " |<q>(t+) - <q>(t-)|",
                              std::abs(m1.mean_q - m0.mean_q) <= 1e-8,
                              std::abs(m1.mean_q - m0.mean_q), 1e-8,
                              "moment relations"});
        const double resid =
            (m1.var_q - m0.var_q) - 1.0 / (4.0 * sigma * sigma);
        rep.checks.push_back({tag + " back-action residual", std::abs(resid) <= 1e-6,
                              std::abs(resid), 1e-6, "moment relations"});
    }
    rep.seconds = timer.seconds();
    return rep;
}

// 3. Variance identity var_p(t+) = var_p(t-) - var(A)/N^2 + (sigma/N)^2 on
// pseudo-random correlated states, N=3, M=4 as stated.  The identity is
// exact only in the untruncated algebra; at M=4 the kick corner leaves a
// residual floor near 1e-3 for any sigma, so the stated tolerance is not
// reachable there.  The diagnostic lines rerun the same five states embedded
// at M=13, where the identity holds at the stated 1e-6.
inline CriterionReport criterion3(const ValidationOptions& opt = {}) {
    vdetail::Timer timer;
    CriterionReport rep{3, "variance identity on random correlated states (N=3, M=4)"};
    const double st = 2.0;
    OracleOptions opts;
    opts.leak_tol = 1.0;

    for (int m : {4, 13}) {
        const bool diagnostic = (m != 4);
        const TrapBasis trap = make_trap_basis(m, opt.omega);
        const double sigma = st * trap.dp0;
        vdetail::DetRng rng(777);  // same five states on both grids
        for (int trial = 0; trial < 5; ++trial) {
            const FockBasis fock = make_fock_basis(3, m);
            const auto pre = vdetail::random_low_mode_state(3, m, 3, rng);
            const auto post = exact_feedback(
                pre, vdetail::negative_feedback(sigma, 3), fock, trap, opts);
            const MomentReport m0 = moments(single_atom_dm(pre, fock), trap);
            const MomentReport m1 = moments(single_atom_dm(post, fock), trap);
            const double resid = avar_check(m0, macro_variance_a(pre, fock, trap),
                                            m1, 3, sigma);
            rep.checks.push_back({"state " + std::to_string(trial) + " residual (M=" +
                                      std::to_string(m) + ")",
                                  std::abs(resid) <= 1e-6, std::abs(resid), 1e-6,
                                  "variance identity", diagnostic});
        }
    }
    rep.seconds = timer.seconds();
    return rep;
}

// 4. Condensate closed form var_p(t+)/dp0^2 = 1 - 1/N + (sigma/dp0)^2/N^2
// for N in 1..5.  Oracle mode counts are chosen per N so the truncated
// channel is converged below the stated tolerance.
inline CriterionReport criterion4(const ValidationOptions& opt = {}) {
    vdetail::Timer timer;
    CriterionReport rep{4, "condensate closed-form variance, N = 1..5"};
    const double st = 1.5;
    const std::vector<std::pair<int, int>> grid = {
        {1, 20}, {2, 12}, {3, 10}, {4, 10}, {5, 10}};
    const TrapBasis kernel_basis = make_trap_basis(40, opt.omega);
    for (const auto& [n, m] : grid) {
        const TrapBasis trap = make_trap_basis(m, opt.omega);
        const double sigma = st * trap.dp0;
        const double closed =
            trap.dp0 * trap.dp0 * (1.0 - 1.0 / n) + sigma * sigma / double(n) / double(n);
        const FockBasis fock = make_fock_basis(n, m);
        const auto post = exact_feedback(bec_ground_state(fock),
                                         vdetail::negative_feedback(sigma, n), fock, trap);
        const double var_or = moments(single_atom_dm(post, fock), trap).var_p;
        const double rel_or = std::abs(var_or - closed) / closed;
        rep.checks.push_back({"oracle N=" + std::to_string(n) + " (M=" +
                                  std::to_string(m) + ")",
                              rel_or <= 1e-6, rel_or, 1e-6,
                              "closed-form condensate variance"});

        const double sigma_k = st * kernel_basis.dp0;
        const Matrix rho = feedback_reduced(
            bec_initial(n, kernel_basis), vdetail::negative_feedback(sigma_k, n),
            kernel_basis);
        const double var_k = moments(rho, kernel_basis).var_p;
        const double closed_k = kernel_basis.dp0 * kernel_basis.dp0 * (1.0 - 1.0 / n) +
                                sigma_k * sigma_k / double(n) / double(n);
        const double rel_k = std::abs(var_k - closed_k) / closed_k;
        rep.checks.push_back({"kernel N=" + std::to_string(n), rel_k <= 1e-3, rel_k,
                              1e-3, "closed-form condensate variance"});
    }
    rep.seconds = timer.seconds();
    rep.checks.push_back({"runtime seconds", rep.seconds < 60.0, rep.seconds, 60.0,
                          "closed-form condensate variance"});
    return rep;
}

// 5. Kernel-vs-oracle field equivalence at M=4, sigma/dp0 in {1,2},
// N in {2,3}, ten frozen z samples in [-1,1]^3.  The kernel runs in the
// same truncated single-atom basis (d = M).  At sigma/dp0 = 1 the truncated
// oracle carries an error floor near 1e-2 (its own leakage gate fires at
// 2e-2), so the stated 1e-3 is not reachable there; the diagnostic lines
// show the same comparison converging through M = 6 and 8.
inline CriterionReport criterion5(const ValidationOptions& opt = {}) {
    vdetail::Timer timer;
    CriterionReport rep{5, "kernel-vs-oracle field equivalence (M=4)"};
    const auto zs = vdetail::frozen_z_samples();
    OracleOptions opts;
    opts.leak_tol = 1.0;

    const auto compare = [&](int n, double st, int m) {
        const TrapBasis trap = make_trap_basis(m, opt.omega);
        const double sigma = st * trap.dp0;
        const FeedbackConfig cfg = vdetail::negative_feedback(sigma, n);
        const FockBasis fock = make_fock_basis(n, m);
        const auto post = exact_feedback(bec_ground_state(fock), cfg, fock, trap, opts);
        const CorrelationField field = bec_initial(n, trap);
        double worst = 0.0;
        for (const auto& z : zs) {
            const Matrix d_or = correlation_matrix(post, fock, z, n, trap);
            const Matrix d_k = feedback_full(field, cfg, trap, z);
            worst = std::max(worst, vdetail::rel_err(d_k, d_or));
        }
        return worst;
    };

    for (int n : {2, 3}) {
        for (double st : {1.0, 2.0}) {
            const double worst = compare(n, st, 4);
            rep.checks.push_back({"N=" + std::to_string(n) +
                                      " sigma/dp0=" + format_g17(st) + " worst rel",
                                  worst <= 1e-3, worst, 1e-3,
                                  "kernel-oracle equivalence"});
        }
    }
    for (int m : {6, 8}) {
        const double worst = compare(2, 1.0, m);
        rep.checks.push_back({"diagnostic N=2 sigma/dp0=1 at M=" + std::to_string(m),
                              worst <= 1e-3, worst, 1e-3,
                              "kernel-oracle equivalence", true});
    }
    rep.seconds = timer.seconds();
    rep.checks.push_back({"runtime seconds", rep.seconds < 300.0, rep.seconds, 300.0,
                          "kernel-oracle equivalence"});
    return rep;
}

// 6. Figure-2 asymptote: kernel-path scaled momentum variance approaches 1,
// and at N=100 matches 1 - 1/N + (sigma/dp0)^2/N^2 within 1e-3.  The closed
// form dips below 1 at small N and rises back, so monotonicity is checked on
// the tail N >= 2 (sigma/dp0)^2.
inline CriterionReport criterion6(const ValidationOptions& opt = {}) {
    vdetail::Timer timer;
    CriterionReport rep{6, "figure-2 asymptote (kernel path)"};
    RunConfig rc;
    rc.omega = opt.omega;
    const auto rows = run_fig2(rc);
    for (double st : rc.sigma_over_dp0) {
        std::vector<std::pair<int, double>> series;
        for (const auto& r : rows)
            if (r.sigma_over_dp0 == st) series.push_back({r.n_atoms, r.value});
        const double v100 = series.back().second;
        const double closed = 1.0 - 1.0 / 100.0 + st * st / 1e4;
        rep.checks.push_back({"sigma/dp0=" + format_g17(st) + " N=100 vs closed form",
                              std::abs(v100 - closed) <= 1e-3, std::abs(v100 - closed),
                              1e-3, "figure-2 asymptote"});
        double worst_step = 0.0;
        bool tail_ok = true;
        for (std::size_t i = 0; i + 1 < series.size(); ++i) {
            if (series[i].first < 2.0 * st * st) continue;
            const double step = series[i + 1].second - series[i].second;
            worst_step = std::min(worst_step, step);
            if (step < -1e-9 || series[i + 1].second > 1.0 + 1e-3) tail_ok = false;
        }
        rep.checks.push_back({"sigma/dp0=" + format_g17(st) +
                                  " monotone tail approach (min step)",
                              tail_ok, worst_step, 0.0, "figure-2 asymptote"});
    }
    rep.seconds = timer.seconds();
    return rep;
}

// 7. Figure-3 asymptote and minimum: the scaled uncertainty product reaches
// sqrt(1 + (dp0/sigma)^2) at large N and attains its minimum at N=2 for
// sigma/dp0 = 1 with value sqrt(1.5).
inline CriterionReport criterion7(const ValidationOptions& opt = {}) {
    vdetail::Timer timer;
    CriterionReport rep{7, "figure-3 asymptote and minimum (kernel path)"};
    RunConfig rc;
    rc.omega = opt.omega;
    rc.sigma_over_dp0 = {1.0};
    rc.n_atoms = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 200};
    const auto rows = run_fig3(rc);
    const double u200 = rows.back().value;
    rep.checks.push_back({"N=200 vs sqrt(2)", std::abs(u200 - std::sqrt(2.0)) <= 1e-2,
                          std::abs(u200 - std::sqrt(2.0)), 1e-2, "figure-3 asymptote"});
    int argmin = 0;
    double best = 1e300;
    for (const auto& r : rows) {
        if (r.n_atoms > 10) continue;
        if (r.value < best) {
            best = r.value;
            argmin = r.n_atoms;
        }
    }
    rep.checks.push_back({"argmin over N in 1..10", argmin == 2, double(argmin), 2.0,
                          "figure-3 minimum"});
    rep.checks.push_back({"minimum value vs sqrt(1.5)",
                          std::abs(best - std::sqrt(1.5)) <= 1e-3,
                          std::abs(best - std::sqrt(1.5)), 1e-3, "figure-3 minimum"});
    rep.seconds = timer.seconds();
    return rep;
}

// 8. Free-evolution kernel against the oracle Heisenberg evolution at quarter
// and half period (N=2, M=6, displaced condensate), plus the V_z group
// identities.
inline CriterionReport criterion8(const ValidationOptions& opt = {}) {
    vdetail::Timer timer;
    CriterionReport rep{8, "free-evolution kernel and V_z identities"};
    const double omega = opt.omega;
    const int n = 2, m = 6;
    const TrapBasis trap = make_trap_basis(m, omega);
    const FockBasis fock = make_fock_basis(n, m);

    // displaced condensate: exp(i dGamma(0.4 q + 0.3 p)) applied to the ground state
    const Matrix gen = second_quantize(
        Matrix(0.4 * position_op(trap).matrix + 0.3 * momentum_op(trap).matrix), fock);
    const Matrix u = apply_spectral(hermitian_eigen(gen),
                                    [](double w) { return std::exp(Complex(0, w)); });
    const ManyBodyState displaced{u * bec_ground_state(fock).rho * u.adjoint()};

    const CorrelationField base = CorrelationField::from_evaluator(
        [displaced, fock, n, trap](const ZVector& z) {
            return correlation_matrix(displaced, fock, z, n, trap);
        },
        m, double(n), n, 1.0 - 1.0 / n, false, 0);

    const std::vector<ZVector> zs = {
        {0.0, 0.0, 0.0}, {0.4, 0.0, 0.2}, {0.3, 0.5, -0.2}, {-0.6, 0.8, 0.4}};
    double worst = 0.0;
    for (double frac : {0.25, 0.5}) {
        const double t = frac * 2.0 * M_PI / omega;
        const auto vz = harmonic_vz(t, omega, n);
        const auto evolved = evolve_correlation(base, t, vz, trap);
        const auto rho_t = free_evolve(displaced, fock, t, trap.energies);
        for (const auto& z : zs) {
            const Matrix ref = correlation_matrix(rho_t, fock, z, n, trap);
            worst = std::max(worst, max_abs(evolved.evaluate(z) - ref));
        }
    }
    rep.checks.push_back({"field evolution vs oracle (max abs)", worst <= 1e-6, worst,
                          1e-6, "free-evolution kernel"});

    double id_defect = 0.0;
    for (double t : {0.3, 1.1}) {
        const auto v1 = harmonic_vz(t, omega, n), v1m = harmonic_vz(-t, omega, n);
        const auto v2 = harmonic_vz(0.7, omega, n);
        const auto v12 = harmonic_vz(t + 0.7, omega, n);
        id_defect = std::max(id_defect,
                             (v1m.v * v1.v - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff());
        id_defect = std::max(id_defect, (v12.v - v1.v * v2.v).cwiseAbs().maxCoeff());
        const auto f1 = free_particle_vz(t, n), f1m = free_particle_vz(-t, n);
        const auto f12 = free_particle_vz(t + 0.7, n), f2 = free_particle_vz(0.7, n);
        id_defect = std::max(id_defect,
                             (f1m.v * f1.v - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff());
        id_defect = std::max(id_defect, (f12.v - f1.v * f2.v).cwiseAbs().maxCoeff());
    }
    rep.checks.push_back({"V_z inverse/group identities", id_defect <= 1e-12, id_defect,
                          1e-12, "free-evolution kernel"});
    rep.seconds = timer.seconds();
    return rep;
}

// 9. Decorrelation trend: E(sigma) strictly decreasing over
// sigma/dp0 in {2, 5, 10, 20} (N=3 condensate, kernel path).
inline CriterionReport criterion9(const ValidationOptions& opt = {}) {
    vdetail::Timer timer;
    CriterionReport rep{9, "weak-measurement decorrelation trend"};
    const TrapBasis trap = make_trap_basis(40, opt.omega);
    const CorrelationField field = bec_initial(3, trap);
    std::vector<double> es;
    for (double st : {2.0, 5.0, 10.0, 20.0}) {
        auto cfg = vdetail::negative_feedback(st * trap.dp0, 3);
        // the A window scales with sigma while the Dt ridge width does not
        cfg.quad.n_a = 512;
        cfg.quad.n_aprime = 512;
        cfg.quad.range_mult = 6.0;
        es.push_back(decorrelation_statistic(field, cfg, trap));
    }
    double worst_ratio = 0.0;
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < es.size(); ++i) {
        worst_ratio = std::max(worst_ratio, es[i + 1] / es[i]);
        if (!(es[i + 1] < es[i])) decreasing = false;
    }
    rep.checks.push_back({"E(sigma) strictly decreasing (max ratio)", decreasing,
                          worst_ratio, 1.0, "weak-measurement decorrelation"});
    rep.seconds = timer.seconds();
    return rep;
}

// 10. Channel sanity across the grid: oracle trace preservation and
// positivity, kernel trace drift, truncation-doubling stability, and the
// kick transformation law (flippable for harness sanity).
inline CriterionReport criterion10(const ValidationOptions& opt = {}) {
    vdetail::Timer timer;
    CriterionReport rep{10, "channel sanity across the grid"};
    OracleOptions opts;
    opts.leak_tol = 1.0;

    double worst_trace = 0.0, worst_neg = 0.0;
    for (int n : {1, 3, 5}) {
        for (int m : {4, 6}) {
            for (double st : {0.5, 1.0, 2.0}) {
                const TrapBasis trap = make_trap_basis(m, opt.omega);
                const double sigma = st * trap.dp0;
                const FockBasis fock = make_fock_basis(n, m);
                const auto post = exact_feedback(
                    bec_ground_state(fock), vdetail::negative_feedback(sigma, n),
                    fock, trap, opts);
                worst_trace = std::max(worst_trace,
                                       std::abs(post.rho.trace().real() - 1.0));
                const auto eig = hermitian_eigen(post.rho);
                worst_neg = std::min(worst_neg, eig.values.minCoeff());
                worst_neg = std::min(worst_neg, 0.0);
            }
        }
    }
    rep.checks.push_back({"oracle trace preservation", worst_trace <= 1e-8,
                          worst_trace, 1e-8, "channel sanity"});
    rep.checks.push_back({"oracle positivity (min eigenvalue)", worst_neg >= -1e-8,
                          worst_neg, -1e-8, "channel sanity"});

    {  // kernel trace drift at representative configurations
        const TrapBasis trap = make_trap_basis(40, opt.omega);
        double worst = 0.0;
        for (double st : {1.0, 2.0}) {
            const Matrix rho = feedback_reduced(
                bec_initial(3, trap), vdetail::negative_feedback(st * trap.dp0, 3), trap);
            worst = std::max(worst, std::abs(rho.trace().real() - 3.0));
        }
        rep.checks.push_back({"kernel trace drift", worst <= 1e-4 * 3.0, worst,
                              1e-4 * 3.0, "channel sanity"});
    }

    {  // truncation-doubling stability of the kernel path, d = 40 vs 80
        const TrapBasis t40 = make_trap_basis(40, opt.omega);
        const TrapBasis t80 = make_trap_basis(80, opt.omega);
        const double sigma = 1.0 * t40.dp0;
        const double v40 = moments(feedback_reduced(bec_initial(3, t40),
                                                    vdetail::negative_feedback(sigma, 3), t40),
                                   t40)
                               .var_p;
        const double v80 = moments(feedback_reduced(bec_initial(3, t80),
                                                    vdetail::negative_feedback(sigma, 3), t80),
                                   t80)
                               .var_p;
        rep.checks.push_back({"truncation doubling var_p drift",
                              std::abs(v80 - v40) <= 1e-8, std::abs(v80 - v40), 1e-8,
                              "channel sanity"});
    }

    {  // transformation law U^dag A U = A + f N/N_e on a margin-protected block
        const int n = 2, m = 10, n_e = 2;
        const double f = 0.4;
        const TrapBasis trap = make_trap_basis(m, opt.omega);
        const FockBasis fock = make_fock_basis(n, m);
        const Matrix a_op = macro_a(fock, momentum_op(trap));
        const Matrix b_op = macro_b(fock, position_op(trap), n_e);
        Matrix u = apply_spectral(hermitian_eigen(b_op), [&](double w) {
            return std::exp(Complex(0.0, f * w));
        });
        if (opt.flip_kick_sign) u = u.adjoint().eval();
        const Matrix lhs = u.adjoint() * a_op * u;
        const Matrix rhs = a_op + (f / n_e) * number_op(fock);
        // restrict to states occupying only the lower half of the modes
        double worst = 0.0;
        for (long i = 0; i < fock.dim; ++i) {
            bool safe_i = true;
            for (int l = m / 2; l < m; ++l) safe_i &= fock.states[i][l] == 0;
            if (!safe_i) continue;
            for (long j = 0; j < fock.dim; ++j) {
                bool safe_j = true;
                for (int l = m / 2; l < m; ++l) safe_j &= fock.states[j][l] == 0;
                if (safe_j) worst = std::max(worst, std::abs(lhs(i, j) - rhs(i, j)));
            }
        }
        rep.checks.push_back({"kick transformation law", worst <= 1e-8, worst, 1e-8,
                              "channel sanity"});
    }
    rep.seconds = timer.seconds();
    return rep;
}

inline std::vector<CriterionReport> run_acceptance(const ValidationOptions& opt = {}) {
    return {criterion1(opt), criterion2(opt), criterion3(opt), criterion4(opt),
            criterion5(opt), criterion6(opt), criterion7(opt), criterion8(opt),
            criterion9(opt), criterion10(opt)};
}

inline json report_to_json(const std::vector<CriterionReport>& reps) {
    json checks = json::array();
    bool all_passed = true;
    int n_failed = 0;
    for (const auto& rep : reps) {
        for (const auto& c : rep.checks) {
            json jc;
            jc["check"] = "criterion " + std::to_string(rep.id) + ": " + c.check;
            jc["status"] = c.diagnostic ? "info" : (c.passed ? "pass" : "fail");
            jc["observed"] = c.observed;
            jc["tolerance"] = c.tolerance;
            jc["paper_ref"] = c.ref;
            checks.push_back(jc);
            if (!c.diagnostic && !c.passed) {
                all_passed = false;
                ++n_failed;
            }
        }
    }
    json out;
    out["checks"] = checks;
    out["passed"] = all_passed;
    out["n_failed"] = n_failed;
    return out;
}

}  // namespace bosefeed
