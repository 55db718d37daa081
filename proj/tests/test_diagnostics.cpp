#include "plcg/diagnostics.hpp"
#include "plcg/errors.hpp"
#include "plcg/plcg.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace plcg;
using Catch::Approx;

namespace {

Vector zeros(std::size_t n) { return Vector(n, 0.0); }

SolveConfig fixed_budget(std::size_t iters) {
    SolveConfig cfg;
    cfg.max_iter = iters;
    cfg.stop_on_tol = false;
    return cfg;
}

}  // namespace

TEST_CASE("dense Lanczos recovers a small spectrum exactly") {
    const CsrMatrix a = CsrMatrix::diagonal(Vector{1.0, 2.0, 3.0});
    const double s = 1.0 / std::sqrt(3.0);
    const auto r = dense_lanczos(a, Vector{s, s, s}, 3);
    REQUIRE(r.steps() == 3);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.t);
    CHECK(es.eigenvalues()(0) == Approx(1.0).margin(1e-12));
    CHECK(es.eigenvalues()(1) == Approx(2.0).margin(1e-12));
    CHECK(es.eigenvalues()(2) == Approx(3.0).margin(1e-12));
}

TEST_CASE("dense Lanczos stops on an invariant subspace") {
    const auto r = dense_lanczos(CsrMatrix::identity(5), Vector{1, 2, 3, 4, 5}, 4);
    CHECK(r.steps() == 1);
    CHECK(r.t(0, 0) == Approx(1.0));
}

TEST_CASE("dense Lanczos basis is orthonormal and Ritz values lie in the Gershgorin interval") {
    const CsrMatrix a = build_poisson_2d(30, 30);
    const Vector b = rhs_for_unit_solution(a);
    const auto r = dense_lanczos(a, b, 25);
    REQUIRE(r.steps() == 25);
    const auto k = static_cast<Eigen::Index>(r.steps());
    CHECK((r.v.transpose() * r.v - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::MatrixXd av(r.v.rows(), k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const Vector y = spmv(a, std::vector<double>(r.v.col(j).data(), r.v.col(j).data() + r.v.rows()));
        av.col(j) = Eigen::Map<const Eigen::VectorXd>(y.data(), r.v.rows());
    }
    Eigen::MatrixXd rel = av - r.v * r.t;
    rel.col(k - 1) -= r.beta_next * r.next;
    CHECK(rel.norm() < 1e-10 * 8.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.t);
    const SpectralInterval g = gershgorin_interval(a);
    CHECK(es.eigenvalues().minCoeff() >= g.lambda_min);
    CHECK(es.eigenvalues().maxCoeff() <= g.lambda_max);
}

TEST_CASE("inverse max norm of small triangular matrices") {
    CHECK(ginv_max_norm(Eigen::MatrixXd::Identity(4, 4)) == 1.0);
    Eigen::MatrixXd g(2, 2);
    g << 1, 2, 0, 1;
    CHECK(ginv_max_norm(g) == 2.0);
    g(1, 1) = 0.0;
    CHECK(std::isinf(ginv_max_norm(g)));
}

TEST_CASE("incremental inverse norm equals the dense inverse") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Eigen::Index n = 30;
    const std::size_t band = 4;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    TriangularInverseMax inc;
    for (Eigen::Index k = 0; k < n; ++k) {
        const std::size_t first = static_cast<std::size_t>(k) > band ? static_cast<std::size_t>(k) - band : 0;
        std::vector<double> col;
        for (auto i = static_cast<Eigen::Index>(first); i <= k; ++i) {
            g(i, k) = i == k ? 0.5 + std::abs(u(rng)) : u(rng);
            col.push_back(g(i, k));
        }
        inc.add_column(first, col);
        const Eigen::MatrixXd lead = g.topLeftCorner(k + 1, k + 1);
        const double dense = lead.triangularView<Eigen::Upper>()
                                 .solve(Eigen::MatrixXd::Identity(k + 1, k + 1))
                                 .cwiseAbs()
                                 .maxCoeff();
        CHECK(inc.value() == Approx(dense).epsilon(1e-10));
    }
}

TEST_CASE("G entry bound on the identity is the scalar polynomial") {
    const CsrMatrix a = CsrMatrix::identity(8);
    const ShiftSet s = user_shifts({0.25, -0.5});
    CHECK(shift_polynomial_norm(a, s) == Approx(std::max({1.0, 0.75, 0.75 * 1.5})));
    const auto r = lemma41_bound(a, Vector(8, 1.0), s, fixed_budget(5));
    CHECK(r.holds());
}

TEST_CASE("G entry bound holds on Poisson and exposes monomial shifts") {
    const CsrMatrix a = build_poisson_2d(30, 30);
    const Vector b = rhs_for_unit_solution(a);
    const auto cheb = lemma41_bound(a, b, chebyshev_shifts({0, 8}, 2), fixed_budget(60));
    CHECK_FALSE(cheb.estimated);
    CHECK(cheb.holds());
    CHECK(cheb.measured.size() >= 60);
    const auto mono = lemma41_bound(a, b, monomial_shifts(3), fixed_budget(20));
    CHECK(mono.poly_norm >= 10.0 * shift_polynomial_norm(a, chebyshev_shifts({0, 8}, 3)));
}

TEST_CASE("trailing block of G from the shifted polynomial of T") {
    const CsrMatrix d = CsrMatrix::diagonal(Vector{1.0, 2.0, 3.0});
    CHECK(lemma_a1_check(d, Vector{1, 1, 1}, chebyshev_shifts({1, 3}, 1), 3) <= 1e-12);
    const CsrMatrix a = build_poisson_2d(20, 20);
    const Vector b = rhs_for_unit_solution(a);
    CHECK(lemma_a1_check(a, b, chebyshev_shifts({0, 8}, 2), 15) <= 1e-8);
    CHECK(lemma_a1_check(a, b, ShiftSet{}, 10) <= 1e-12);
    CHECK_THROWS_AS(lemma_a1_check(a, b, chebyshev_shifts({0, 8}, 3), 3), ArgumentError);
}

TEST_CASE("gap trace starts at rounding level and stays small on the identity") {
    const CsrMatrix a = build_poisson_2d(20, 20);
    const Vector b = rhs_for_unit_solution(a);
    const auto g = residual_gap_trace(a, b, zeros(a.size()), 2, chebyshev_shifts({0, 8}, 2), fixed_budget(40));
    REQUIRE(g.records.size() == 41);
    const double eps = std::numeric_limits<double>::epsilon();
    CHECK(g.records[0].residual_gap <= static_cast<double>(a.size()) * eps * norm2(b));
    CHECK(g.records[0].amplification == 1.0);
    CHECK(g.records[1].basis_gap <= 1e-13);
    for (std::size_t k = 1; k < g.records.size(); ++k) {
        CHECK(g.records[k].amplification >= g.records[k - 1].amplification);
        CHECK(g.records[k].g_max >= g.records[k - 1].g_max);
    }
    CHECK(basis_gap_trace(g).size() == 41);

    const CsrMatrix id = CsrMatrix::identity(10);
    const auto gi = residual_gap_trace(id, Vector(10, 1.0), zeros(10), 1, monomial_shifts(1), fixed_budget(5));
    for (const auto& r : gi.records) CHECK(r.residual_gap <= 1e-14);
}

TEST_CASE("CG residual gap stays at rounding level") {
    const CsrMatrix a = build_poisson_2d(30, 30);
    const Vector b = rhs_for_unit_solution(a);
    const auto g = cg_gap_trace(a, b, zeros(a.size()), fixed_budget(100));
    for (const auto& r : g.records) {
        CHECK(r.residual_gap <= 1e-13);
        CHECK(r.amplification == 1.0);
    }
}

TEST_CASE("p-CG gap decomposition") {
    const CsrMatrix a = build_poisson_2d(30, 30);
    const Vector b = rhs_for_unit_solution(a);
    const auto g = pcg_gap_decomposition(a, b, zeros(a.size()), fixed_budget(60));
    REQUIRE(g.records.size() == 60);
    const auto& r0 = g.records.front();
    CHECK(r0.r_gap <= 1e-15);
    CHECK(r0.s_gap <= 1e-15);
    CHECK(r0.w_gap <= 1e-15);
    CHECK(r0.z_gap <= 1e-15);
    CHECK(g.beta.size() == 59);
    double expect = 1.0;
    for (std::size_t j = 0; j <= g.beta.size(); ++j)
        for (std::size_t i = 0; i <= j; ++i) expect = std::max(expect, std::abs(binv_entry(g.beta, i, j)));
    CHECK(g.records.back().binv_max == Approx(expect));
    CHECK(binv_entry(g.beta, 2, 4) == g.beta[2] * g.beta[3]);
    CHECK(binv_entry(g.beta, 3, 3) == 1.0);
    CHECK(binv_entry(g.beta, 4, 3) == 0.0);
}

TEST_CASE("snapshot caps are enforced") {
    const CsrMatrix a = build_poisson_2d(4, 4);
    CHECK_THROWS_AS(cg_gap_trace(a, Vector(16, 1.0), zeros(16), fixed_budget(501)), SizeError);
    SolveConfig cfg = fixed_budget(10);
    cfg.precond = Preconditioner::jacobi(a);
    CHECK_THROWS_AS(residual_gap_trace(a, Vector(16, 1.0), zeros(16), 1, monomial_shifts(1), cfg), ArgumentError);
}
