#include <catch_amalgamated.hpp>

#include <bosefeed/observables.hpp>
#include <bosefeed/oracle.hpp>

#include <cmath>
#include <random>

using namespace bosefeed;

namespace {

FeedbackConfig neg_feedback(double sigma, int n_e) {
    FeedbackConfig cfg;
    cfg.sigma = sigma;
    cfg.response = {-1.0, 0.0};
    cfg.n_e = n_e;
    return cfg;
}

// deterministic Ginibre state on the full sector
ManyBodyState random_state(const FockBasis& b, unsigned seed) {
    std::mt19937 gen(seed);
    auto u = [&] { return (double(gen()) + 0.5) / 4294967296.0; };
    auto n = [&] { return std::sqrt(-2.0 * std::log(u())) * std::cos(2 * M_PI * u()); };
    Matrix x(b.dim, b.dim);
    for (long i = 0; i < b.dim; ++i)
        for (long j = 0; j < b.dim; ++j) x(i, j) = Complex(n(), n());
    Matrix r = x * x.adjoint();
    r /= r.trace().real();
    return {r};
}

}  // namespace

TEST_CASE("fock basis enumeration") {
    const auto b = make_fock_basis(1, 3);
    REQUIRE(b.dim == 3);

    const auto b22 = make_fock_basis(2, 2);
    REQUIRE(b22.dim == 3);
    CHECK(b22.states[0] == std::vector<int>{2, 0});
    CHECK(b22.states[1] == std::vector<int>{1, 1});
    CHECK(b22.states[2] == std::vector<int>{0, 2});

    CHECK(make_fock_basis(3, 4).dim == 20);  // C(6,3)
    REQUIRE_THROWS_AS(make_fock_basis(40, 12), CapacityError);
    try {
        make_fock_basis(40, 12);
    } catch (const CapacityError& e) {
        CHECK(std::string(e.what()).find("dimension") != std::string::npos);
    }
}

TEST_CASE("second quantization basics") {
    const auto trap = make_trap_basis(6, 1.0);
    const auto b = make_fock_basis(3, 4);
    const Matrix n_from_id = second_quantize(Matrix::Identity(6, 6), b);
    CHECK(max_abs(n_from_id - 3.0 * Matrix::Identity(b.dim, b.dim)) <= 1e-12);

    // N=1 reduces to the single-atom block
    const auto b1 = make_fock_basis(1, 4);
    const Matrix q1 = second_quantize(position_op(trap), b1);
    CHECK(max_abs(q1 - position_op(trap).matrix.topLeftCorner(4, 4)) <= 1e-12);
}

TEST_CASE("second quantization against hand enumeration, N=2 M=2") {
    const auto trap = make_trap_basis(2, 1.0);
    const auto b = make_fock_basis(2, 2);
    const Matrix q2 = second_quantize(position_op(trap), b);
    // states (2,0),(1,1),(0,2); q couples neighbors with sqrt(2) dq0
    const double s2 = std::sqrt(2.0) * trap.dq0;
    Matrix expected = Matrix::Zero(3, 3);
    expected(0, 1) = expected(1, 0) = s2;
    expected(1, 2) = expected(2, 1) = s2;
    CHECK(max_abs(q2 - expected) <= 1e-12);
}

TEST_CASE("macroscopic commutators") {
    const auto trap = make_trap_basis(8, 1.0);
    const int n = 2, m = 8, n_e = 3;
    const auto b = make_fock_basis(n, m);
    const Matrix a_op = macro_a(b, momentum_op(trap));
    const Matrix b_op = macro_b(b, position_op(trap), n_e);
    const Matrix n_op = number_op(b);

    CHECK(max_abs(a_op * n_op - n_op * a_op) <= 1e-12);
    CHECK(max_abs(b_op * n_op - n_op * b_op) <= 1e-12);

    // [A,B] = -i N/N_e on the truncation-safe subspace (orientation fixed by
    // the standard [q,p] = +i convention together with the kick law)
    const Matrix comm = a_op * b_op - b_op * a_op;
    const Matrix expect = Complex(0, -1) / double(n_e) * n_op;
    double worst = 0.0;
    for (long i = 0; i < b.dim; ++i) {
        if (b.states[i][m - 1] != 0) continue;
        for (long j = 0; j < b.dim; ++j)
            if (b.states[j][m - 1] == 0)
                worst = std::max(worst, std::abs(comm(i, j) - expect(i, j)));
    }
    CHECK(worst <= 1e-10);

    // N = N_e = 1 reduction
    const auto b1 = make_fock_basis(1, 8);
    const Matrix c1 = macro_a(b1, momentum_op(trap)) * macro_b(b1, position_op(trap), 1) -
                      macro_b(b1, position_op(trap), 1) * macro_a(b1, momentum_op(trap));
    double worst1 = 0.0;
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j)
            worst1 = std::max(worst1,
                              std::abs(c1(i, j) - (i == j ? Complex(0, -1) : Complex(0, 0))));
    CHECK(worst1 <= 1e-12);

    REQUIRE_THROWS_AS(macro_b(b, position_op(trap), 0), ConfigError);
}

TEST_CASE("impotent loop: huge sigma, zero response") {
    const auto trap = make_trap_basis(6, 1.0);
    const auto b = make_fock_basis(2, 6);
    auto cfg = neg_feedback(1e3 * trap.dp0, 2);
    cfg.response = {0.0, 0.0};
    const auto pre = bec_ground_state(b);
    const auto post = exact_feedback(pre, cfg, b, trap);
    CHECK((post.rho - pre.rho).norm() <= 1e-4);
}

TEST_CASE("N=1 feedback leaves variance sigma^2") {
    const auto trap = make_trap_basis(20, 1.0);
    const auto b = make_fock_basis(1, 20);
    const double sigma = 1.0 * trap.dp0;
    const auto post = exact_feedback(bec_ground_state(b), neg_feedback(sigma, 1), b, trap);
    const auto m = moments(single_atom_dm(post, b), trap);
    CHECK(m.var_p == Catch::Approx(sigma * sigma).epsilon(1e-6));
}

TEST_CASE("N=3 condensate: closed-form post variance") {
    const auto trap = make_trap_basis(10, 1.0);
    const auto b = make_fock_basis(3, 10);
    const double sigma = 1.5 * trap.dp0;
    const auto post = exact_feedback(bec_ground_state(b), neg_feedback(sigma, 3), b, trap);
    const auto m = moments(single_atom_dm(post, b), trap);
    const double expected =
        trap.dp0 * trap.dp0 * (1.0 - 1.0 / 3.0) + sigma * sigma / 9.0;
    CHECK(std::abs(m.var_p - expected) <= 1e-6);
}

TEST_CASE("feedback channel invariants on the oracle grid") {
    OracleOptions opts;
    opts.leak_tol = 1.0;  // strong measurements leak at small M; tested separately
    for (int n : {1, 2, 5}) {
        for (double st : {0.5, 1.0, 2.0}) {
            const int m = 6;
            const auto trap = make_trap_basis(m, 1.0);
            const auto b = make_fock_basis(n, m);
            const auto post = exact_feedback(bec_ground_state(b),
                                             neg_feedback(st * trap.dp0, n), b, trap, opts);
            CHECK(std::abs(post.rho.trace().real() - 1.0) <= 1e-8);
            CHECK(hermitian_eigen(post.rho).values.minCoeff() >= -1e-8);
        }
    }
}

TEST_CASE("per-atom means: p compensated, q untouched") {
    const auto trap = make_trap_basis(8, 1.0);
    const auto b = make_fock_basis(2, 8);
    const double sigma = 2.0 * trap.dp0;
    OracleOptions opts;
    opts.leak_tol = 1.0;
    const auto pre = bec_ground_state(b);
    const auto post = exact_feedback(pre, neg_feedback(sigma, 2), b, trap, opts);
    const auto m0 = moments(single_atom_dm(pre, b), trap);
    const auto m1 = moments(single_atom_dm(post, b), trap);
    CHECK(std::abs(m1.mean_p) <= 1e-8);
    CHECK(std::abs(m1.mean_q - m0.mean_q) <= 1e-8);
    // back-action on the position variance
    const double resid = (m1.var_q - m0.var_q) - 1.0 / (4.0 * sigma * sigma);
    CHECK(std::abs(resid) <= 1e-4);  // M=8 truncation floor at this sigma
}

TEST_CASE("variance identity on a random correlated state (converged grid)") {
    const int n = 3, m = 13;
    const auto trap = make_trap_basis(m, 1.0);
    const auto b = make_fock_basis(n, m);
    const double sigma = 2.0 * trap.dp0;
    OracleOptions opts;
    opts.leak_tol = 1.0;
    // support on the three lowest modes keeps the truncated channel converged
    const auto sub = make_fock_basis(n, 3);
    const auto rnd = random_state(sub, 99);
    Matrix rho = Matrix::Zero(b.dim, b.dim);
    for (long i = 0; i < sub.dim; ++i) {
        std::vector<int> oi = sub.states[i];
        oi.resize(m, 0);
        for (long j = 0; j < sub.dim; ++j) {
            std::vector<int> oj = sub.states[j];
            oj.resize(m, 0);
            rho(b.index.at(oi), b.index.at(oj)) = rnd.rho(i, j);
        }
    }
    const ManyBodyState pre{rho};
    const auto post = exact_feedback(pre, neg_feedback(sigma, n), b, trap, opts);
    const auto m0 = moments(single_atom_dm(pre, b), trap);
    const auto m1 = moments(single_atom_dm(post, b), trap);
    const double resid =
        avar_check(m0, macro_variance_a(pre, b, trap), m1, n, sigma);
    CHECK(std::abs(resid) <= 1e-6);
}

TEST_CASE("quadrature node doubling leaves the post state in place") {
    const auto trap = make_trap_basis(8, 1.0);
    const auto b = make_fock_basis(2, 8);
    const auto cfg = neg_feedback(1.5 * trap.dp0, 2);
    OracleOptions o1;
    o1.leak_tol = 1.0;
    OracleOptions o2 = o1;
    o2.a_nodes = 402;
    const auto p1 = exact_feedback(bec_ground_state(b), cfg, b, trap, o1);
    const auto p2 = exact_feedback(bec_ground_state(b), cfg, b, trap, o2);
    CHECK(max_abs(p1.rho - p2.rho) <= 1e-8);
}

TEST_CASE("truncation leakage is detected") {
    const auto trap = make_trap_basis(4, 1.0);
    const auto b = make_fock_basis(3, 4);
    // strong measurement at M=4 pushes weight onto the top mode
    REQUIRE_THROWS_AS(exact_feedback(bec_ground_state(b),
                                     neg_feedback(1.0 * trap.dp0, 3), b, trap),
                      ToleranceError);
}

TEST_CASE("single-atom density matrix") {
    const auto trap = make_trap_basis(4, 1.0);
    const auto b = make_fock_basis(3, 4);
    const Matrix rho = single_atom_dm(bec_ground_state(b), b);
    Matrix expected = Matrix::Zero(4, 4);
    expected(0, 0) = 3.0;
    CHECK(max_abs(rho - expected) <= 1e-12);

    // N=2 with one atom excited: diag(1,1,0,0)
    const auto b2 = make_fock_basis(2, 4);
    Matrix r2 = Matrix::Zero(b2.dim, b2.dim);
    r2(b2.index.at({1, 1, 0, 0}), b2.index.at({1, 1, 0, 0})) = 1.0;
    const Matrix sadm2 = single_atom_dm(ManyBodyState{r2}, b2);
    Matrix exp2 = Matrix::Zero(4, 4);
    exp2(0, 0) = exp2(1, 1) = 1.0;
    CHECK(max_abs(sadm2 - exp2) <= 1e-12);

    // trace = N for any valid state
    const auto rnd = random_state(b, 5);
    CHECK(single_atom_dm(rnd, b).trace().real() == Catch::Approx(3.0).margin(1e-10));
    CHECK(hermiticity_defect(single_atom_dm(rnd, b)) <= 1e-12);
}

TEST_CASE("correlation function: z = 0 and N = 1 reductions") {
    const auto trap = make_trap_basis(5, 1.0);
    const auto b = make_fock_basis(2, 5);
    const auto rnd = random_state(b, 17);
    const Matrix at_zero = correlation_matrix(rnd, b, {0, 0, 0}, 2, trap);
    CHECK(max_abs(at_zero - single_atom_dm(rnd, b)) <= 1e-10);

    const auto b1 = make_fock_basis(1, 5);
    const auto rnd1 = random_state(b1, 23);
    const Matrix d1a = correlation_matrix(rnd1, b1, {0.7, -0.4, 1.1}, 1, trap);
    const Matrix d1b = correlation_matrix(rnd1, b1, {-0.2, 0.9, -2.0}, 1, trap);
    CHECK(max_abs(d1a - d1b) <= 1e-12);

    REQUIRE_THROWS_AS(
        correlation_matrix(rnd, b, {std::nan(""), 0, 0}, 2, trap), ConfigError);
}

TEST_CASE("condensate correlation matches the closed form") {
    const int n = 3, m = 10;
    const auto trap = make_trap_basis(m, 1.0);
    const auto b = make_fock_basis(n, m);
    const auto bec = bec_ground_state(b);
    for (const ZVector z : {ZVector{0.3, 0.2, 0.1}, ZVector{-0.5, 0.8, -0.9}}) {
        const Matrix d = correlation_matrix(bec, b, z, n, trap);
        const Complex expected =
            double(n) * std::exp(Complex(0, z.gamma * (1.0 - 1.0 / n))) *
            std::exp(Complex(-(n - 1) / 2.0 *
                                 (trap.dp0 * trap.dp0 * z.alpha * z.alpha +
                                  trap.dq0 * trap.dq0 / double(n * n) * z.beta * z.beta),
                             0));
        CHECK(std::abs(d(0, 0) - expected) <= 1e-8);
        double off = 0.0;
        for (int mu = 0; mu < m; ++mu)
            for (int lam = 0; lam < m; ++lam)
                if (mu != 0 || lam != 0) off = std::max(off, std::abs(d(mu, lam)));
        CHECK(off <= 1e-10);
    }
}

TEST_CASE("conjugation symmetry of the correlation field") {
    const auto trap = make_trap_basis(5, 1.0);
    const auto b = make_fock_basis(2, 5);
    const auto rnd = random_state(b, 31);
    for (const ZVector z : {ZVector{0.4, -0.3, 0.6}, ZVector{1.0, 0.5, -0.2}}) {
        const Matrix d = correlation_matrix(rnd, b, z, 2, trap);
        const Matrix dm = correlation_matrix(rnd, b, {-z.alpha, -z.beta, -z.gamma}, 2, trap);
        CHECK(max_abs(d - dm.adjoint()) <= 1e-8);
    }
}

TEST_CASE("free evolution") {
    const auto trap = make_trap_basis(6, 1.0);
    const auto b = make_fock_basis(2, 6);
    const auto rnd = random_state(b, 41);
    const auto same = free_evolve(rnd, b, 0.0, trap.energies);
    CHECK(max_abs(same.rho - rnd.rho) <= 1e-14);

    const auto bec = bec_ground_state(b);
    const auto later = free_evolve(bec, b, 1.37, trap.energies);
    CHECK(max_abs(later.rho - bec.rho) <= 1e-14);

    // quarter period: p/q variances swap (omega = 1)
    const auto b1 = make_fock_basis(1, 6);
    Matrix r = Matrix::Zero(6, 6);
    const double c = std::cos(0.4), s = std::sin(0.4);
    // single atom in cos|0> + sin|2>, squeezed-ish variances
    Vector v = Vector::Zero(6);
    v(0) = c;
    v(2) = s;
    r = v * v.adjoint();
    const ManyBodyState st{r};
    const auto m0 = moments(single_atom_dm(st, b1), trap);
    const auto st2 = free_evolve(st, b1, M_PI / 2.0, trap.energies);
    const auto m1 = moments(single_atom_dm(st2, b1), trap);
    CHECK(m1.var_p == Catch::Approx(m0.var_q).epsilon(1e-10));
    CHECK(m1.var_q == Catch::Approx(m0.var_p).epsilon(1e-10));
}

TEST_CASE("macroscopic characteristic function") {
    const auto trap = make_trap_basis(8, 1.0);
    const int n = 3, n_e = 2;
    const auto b = make_fock_basis(n, 8);
    const auto bec = bec_ground_state(b);
    CHECK(std::abs(macro_characteristic(bec, b, {0, 0, 0}, n_e, trap) - 1.0) <= 1e-12);

    // gamma only: a phase for the number eigenstate
    const Complex g = macro_characteristic(bec, b, {0, 0, 0.9}, n_e, trap);
    CHECK(std::abs(g - std::exp(Complex(0, 0.9 * n / double(n_e)))) <= 1e-10);

    // gaussian in (alpha, beta) with product-state variances
    const ZVector z{0.5, 0.7, 0.0};
    const Complex d = macro_characteristic(bec, b, z, n_e, trap);
    const double va = n * trap.dp0 * trap.dp0;
    const double vb = trap.dq0 * trap.dq0 * n / double(n_e * n_e);
    const Complex expected =
        std::exp(Complex(-0.5 * (va * z.alpha * z.alpha + vb * z.beta * z.beta), 0));
    CHECK(std::abs(d - expected) <= 1e-8);
}
