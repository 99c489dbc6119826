#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "bosefeed/corrdyn.hpp"
#include "bosefeed/errors.hpp"
#include "bosefeed/observables.hpp"
#include "bosefeed/runconfig.hpp"

namespace bosefeed {

inline std::string format_g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct FigRow {
    int n_atoms;
    double sigma_over_dp0;
    double value;
};

// Post-feedback single-atom density matrix for a condensate of n atoms,
// kernel path.  Cost is independent of n.
inline Matrix bec_post_sadm(int n, double sigma_scaled, const RunConfig& rc,
                            const TrapBasis& basis) {
    const double sigma = sigma_scaled * basis.dp0;
    const FeedbackConfig cfg = rc.feedback_for(n, sigma);
    const CorrelationField field = bec_initial(n, basis);
    return feedback_reduced(field, cfg, basis);
}

// Variance of the single-atom momentum after one feedback, scaled by dp0^2,
// versus atom number.
inline std::vector<FigRow> run_fig2(const RunConfig& rc) {
    const TrapBasis basis = make_trap_basis(rc.dim, rc.omega);
    std::vector<FigRow> rows;
    for (int n : rc.n_atoms) {
        for (double st : rc.sigma_over_dp0) {
            try {
                const Matrix rho = bec_post_sadm(n, st, rc, basis);
                rows.push_back({n, st, moments(rho, basis).var_p_scaled});
            } catch (const ToleranceError& e) {
                throw ToleranceError("fig2 row N=" + std::to_string(n) +
                                     " sigma/dp0=" + format_g17(st) + ": " + e.what());
            }
        }
    }
    return rows;
}

// Uncertainty product of single-atom position and momentum after one
// feedback, scaled by dq0 dp0.  The position variance from the kernel path
// must agree with the back-action formula var_q + 1/(4 sigma^2).
inline std::vector<FigRow> run_fig3(const RunConfig& rc) {
    const TrapBasis basis = make_trap_basis(rc.dim, rc.omega);
    std::vector<FigRow> rows;
    for (int n : rc.n_atoms) {
        for (double st : rc.sigma_over_dp0) {
            try {
                const double sigma = st * basis.dp0;
                const Matrix rho = bec_post_sadm(n, st, rc, basis);
                const MomentReport m = moments(rho, basis);
                const double var_q_formula =
                    basis.dq0 * basis.dq0 + 1.0 / (4.0 * sigma * sigma);
                if (std::abs(m.var_q - var_q_formula) >
                    1e-3 * std::max(1.0, var_q_formula))
                    throw ToleranceError(
                        "kernel var_q deviates from the back-action formula by " +
                        format_g17(m.var_q - var_q_formula));
                rows.push_back({n, st, m.uncertainty_product_scaled});
            } catch (const ToleranceError& e) {
                throw ToleranceError("fig3 row N=" + std::to_string(n) +
                                     " sigma/dp0=" + format_g17(st) + ": " + e.what());
            }
        }
    }
    return rows;
}

inline void write_csv(const std::vector<FigRow>& rows, const std::string& header,
                      std::ostream& os) {
    os << header << "\n";
    for (const auto& r : rows)
        os << r.n_atoms << "," << format_g17(r.sigma_over_dp0) << ","
           << format_g17(r.value) << "\n";
}

inline void write_csv_file(const std::vector<FigRow>& rows, const std::string& header,
                           const std::string& path) {
    std::ofstream os(path, std::ios::binary);  // LF line endings everywhere
    if (!os) throw ConfigError("cannot open output file: " + path);
    write_csv(rows, header, os);
}

// One configuration (first entries of the lists): pre/post kernel-path
// moments, the condensate closed forms, and an exact-channel cross-check on
// the configured oracle grid.
inline json run_single(const RunConfig& rc) {
    const TrapBasis basis = make_trap_basis(rc.dim, rc.omega);
    const int n = rc.n_atoms.front();
    const double st = rc.sigma_over_dp0.front();
    const double sigma = st * basis.dp0;
    const FeedbackConfig cfg = rc.feedback_for(n, sigma);
    const CorrelationField field = bec_initial(n, basis);

    const MomentReport pre = moments(sadm(field), basis);
    const MomentReport post = moments(feedback_reduced(field, cfg, basis), basis);

    const TrapBasis trap_or = make_trap_basis(rc.oracle.n_modes, rc.omega);
    const FockBasis fock = make_fock_basis(n, rc.oracle.n_modes, rc.oracle.cap);
    OracleOptions opts;
    opts.a_nodes = rc.oracle.a_nodes;
    opts.trace_tol = rc.oracle.trace_tol;
    opts.leak_tol = rc.oracle.leak_tol;
    FeedbackConfig cfg_or = cfg;
    cfg_or.sigma = st * trap_or.dp0;
    const auto exact =
        exact_feedback(bec_ground_state(fock), cfg_or, fock, trap_or, opts);
    const MomentReport post_or = moments(single_atom_dm(exact, fock), trap_or);

    const auto report = [](const MomentReport& m) {
        return json{{"mean_p", m.mean_p},
                    {"mean_q", m.mean_q},
                    {"var_p", m.var_p},
                    {"var_q", m.var_q},
                    {"var_p_scaled", m.var_p_scaled},
                    {"var_q_scaled", m.var_q_scaled},
                    {"uncertainty_product_scaled", m.uncertainty_product_scaled},
                    {"n_atoms_mean", m.n_atoms_mean}};
    };
    json out;
    out["n_atoms"] = n;
    out["sigma_over_dp0"] = st;
    out["pre"] = report(pre);
    out["post"] = report(post);
    out["oracle"] = report(post_or);
    out["oracle"]["n_modes"] = rc.oracle.n_modes;
    out["closed_form"] = {
        {"var_p_scaled", 1.0 - 1.0 / n + st * st / double(n) / double(n)},
        {"var_q_scaled", 1.0 + 1.0 / (st * st)}};
    out["kernel_minus_oracle_var_p_scaled"] =
        post.var_p_scaled - post_or.var_p_scaled;
    return out;
}

}  // namespace bosefeed
