#include <catch_amalgamated.hpp>

#include <bosefeed/corrdyn.hpp>
#include <bosefeed/observables.hpp>
#include <bosefeed/oracle.hpp>

#include <cmath>

using namespace bosefeed;

namespace {
FeedbackConfig neg_feedback(double sigma, int n_e) {
    FeedbackConfig cfg;
    cfg.sigma = sigma;
    cfg.response = {-1.0, 0.0};
    cfg.n_e = n_e;
    return cfg;
}
}  // namespace

TEST_CASE("condensate moments are scale-free") {
    for (double omega : {1.0, 2.7}) {
        const auto trap = make_trap_basis(16, omega);
        const auto field = bec_initial(5, trap);
        const auto m = moments(sadm(field), trap);
        CHECK(m.var_p_scaled == Catch::Approx(1.0).margin(1e-8));
        CHECK(m.var_q_scaled == Catch::Approx(1.0).margin(1e-8));
        CHECK(m.uncertainty_product_scaled == Catch::Approx(1.0).margin(1e-8));
        CHECK(m.n_atoms_mean == Catch::Approx(5.0).margin(1e-10));
    }
}

TEST_CASE("moments reject empty states") {
    const auto trap = make_trap_basis(4, 1.0);
    REQUIRE_THROWS_AS(moments(Matrix::Zero(4, 4), trap), ConfigError);
}

TEST_CASE("post-feedback N=1 at sigma/dp0 = 1: scaled variance 1") {
    const auto trap = make_trap_basis(40, 1.0);
    const double sigma = 1.0 * trap.dp0;
    const Matrix rho = feedback_reduced(bec_initial(1, trap), neg_feedback(sigma, 1), trap);
    CHECK(moments(rho, trap).var_p_scaled == Catch::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("post-feedback N=2 at sigma/dp0 = 1: uncertainty product sqrt(1.5)") {
    const auto trap = make_trap_basis(40, 1.0);
    const double sigma = 1.0 * trap.dp0;
    const Matrix rho = feedback_reduced(bec_initial(2, trap), neg_feedback(sigma, 2), trap);
    CHECK(moments(rho, trap).uncertainty_product_scaled ==
          Catch::Approx(std::sqrt(1.5)).epsilon(1e-3));
}

TEST_CASE("macroscopic variance of the total momentum") {
    const auto trap = make_trap_basis(8, 1.0);
    CHECK(macro_variance_a_bec(5, trap) == Catch::Approx(5.0 * trap.dp0 * trap.dp0));

    const auto fock = make_fock_basis(5, 6);
    const auto trap6 = make_trap_basis(6, 1.0);
    CHECK(macro_variance_a(bec_ground_state(fock), fock, trap6) ==
          Catch::Approx(macro_variance_a_bec(5, trap6)).margin(1e-10));

    // single atom: equals the single-atom variance
    const auto f1 = make_fock_basis(1, 6);
    const auto m1 = moments(single_atom_dm(bec_ground_state(f1), f1), trap6);
    CHECK(macro_variance_a(bec_ground_state(f1), f1, trap6) ==
          Catch::Approx(m1.var_p).margin(1e-12));

    // number state along a momentum eigenmode has zero spread
    // (approximated by the kernel basis: a p-eigenstate projector)
    const auto ep = hermitian_eigen(momentum_op(trap6).matrix);
    Matrix proj = ep.vectors.col(2) * ep.vectors.col(2).adjoint();
    const FockBasis fock1 = make_fock_basis(1, 6);
    const ManyBodyState st{proj};
    CHECK(macro_variance_a(st, fock1, trap6) <= 1e-12);
}

TEST_CASE("variance-identity harness responds to a wrong sigma") {
    const int n = 3, m = 10;
    const auto trap = make_trap_basis(m, 1.0);
    const double sigma = 1.5 * trap.dp0;
    const auto fock = make_fock_basis(n, m);
    const auto pre = bec_ground_state(fock);
    const auto post = exact_feedback(pre, neg_feedback(sigma, n), fock, trap);
    const auto m0 = moments(single_atom_dm(pre, fock), trap);
    const auto m1 = moments(single_atom_dm(post, fock), trap);
    const double va = macro_variance_a(pre, fock, trap);

    CHECK(std::abs(avar_check(m0, va, m1, n, sigma)) <= 1e-6);

    const double wrong = 1.25 * sigma;
    const double expected_shift = (sigma * sigma - wrong * wrong) / double(n * n);
    CHECK(avar_check(m0, va, m1, n, wrong) ==
          Catch::Approx(expected_shift).margin(1e-6));
}

TEST_CASE("figure-2 and figure-3 closed forms at spot values") {
    const auto trap = make_trap_basis(40, 1.0);
    {  // N=4, sigma/dp0 = 1.5 -> 1 - 1/4 + 2.25/16 = 0.890625
        const double sigma = 1.5 * trap.dp0;
        const Matrix rho = feedback_reduced(bec_initial(4, trap), neg_feedback(sigma, 4), trap);
        CHECK(std::abs(moments(rho, trap).var_p_scaled - 0.890625) <= 1e-3);
    }
    {  // N=100, sigma/dp0 = 2
        const double sigma = 2.0 * trap.dp0;
        const Matrix rho =
            feedback_reduced(bec_initial(100, trap), neg_feedback(sigma, 100), trap);
        const double closed = 1.0 - 1.0 / 100.0 + 4.0 / 1e4;
        CHECK(std::abs(moments(rho, trap).var_p_scaled - closed) <= 1e-3);
    }
}
