// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "noma/channel.hpp"
#include "noma/conic.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace noma;
using namespace noma::conic;

namespace {

Eigen::MatrixXcd random_hermitian(int n, std::uint64_t seed) {
    TrialRng rng(seed, 0, 200);
    Eigen::MatrixXcd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.cnormal();
    return 0.5 * (a + a.adjoint().eval());
}

}  // namespace

TEST_CASE("svec/smat round trip and inner products") {
    TrialRng rng(1, 0, 201);
    Eigen::MatrixXd a(4, 4), b(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            a(i, j) = rng.normal();
            b(i, j) = rng.normal();
        }
    a = (0.5 * (a + a.transpose().eval())).eval();
    b = (0.5 * (b + b.transpose().eval())).eval();
    CHECK((smat(svec(a)) - a).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(svec(a).dot(svec(b)) == doctest::Approx((a * b).trace()).epsilon(1e-12));
}

TEST_CASE("Hermitian embedding identities") {
    SUBCASE("identity maps to identity") {
        CHECK((embed_hermitian(Eigen::MatrixXcd::Identity(2, 2)) -
               Eigen::MatrixXd::Identity(4, 4))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }

    SUBCASE("eigenvalues double up") {
        Eigen::MatrixXcd h(2, 2);
        h << std::complex<double>(0, 0), std::complex<double>(0, 1),
            std::complex<double>(0, -1), std::complex<double>(0, 0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(embed_hermitian(h));
        const Eigen::VectorXd values = eig.eigenvalues();
        CHECK(values(0) == doctest::Approx(-1.0));
        CHECK(values(1) == doctest::Approx(-1.0));
        CHECK(values(2) == doctest::Approx(1.0));
        CHECK(values(3) == doctest::Approx(1.0));
    }

    SUBCASE("half-trace identity and round trip") {
        for (std::uint64_t seed : {3, 4, 5}) {
            const Eigen::MatrixXcd h = random_hermitian(3, seed);
            const Eigen::MatrixXcd w = random_hermitian(3, seed + 50);
            const double direct = (h * w).trace().real();
            const double embedded =
                0.5 * (embed_hermitian(h) * embed_hermitian(w)).trace();
            CHECK(embedded == doctest::Approx(direct).epsilon(1e-12));
            CHECK((hermitian_from_embedding(embed_hermitian(h)) - h).cwiseAbs().maxCoeff() <
                  1e-14);
        }
    }

    SUBCASE("PSD-ness is preserved both ways") {
        const Eigen::MatrixXcd h = random_hermitian(3, 7);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eh(h);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ee(embed_hermitian(h));
        CHECK(ee.eigenvalues().minCoeff() ==
              doctest::Approx(eh.eigenvalues().minCoeff()).epsilon(1e-10));
    }

    SUBCASE("non-Hermitian input is rejected") {
        Eigen::MatrixXcd bad = random_hermitian(2, 9);
        bad(0, 1) += std::complex<double>(1e-6, 0.0);
        CHECK_THROWS_AS(embed_hermitian(bad), std::invalid_argument);
    }
}

// The fixed library of tiny problems with known optima. Objective error
// must stay below 1e-6 absolute, and reported dual objectives must
// certify the primal from below.
TEST_CASE("solver library") {
    struct Expect {
        const char* name;
        double optimum;
    };

    const auto check_optimal = [](const ConicProgram& p, double expected, const char* name) {
        const SolveReport rep = solve(p);
        INFO(name);
        REQUIRE(rep.status == SolveStatus::optimal);
        CHECK(std::abs(rep.objective - expected) < 1e-6);
        CHECK(rep.objective >= rep.dual_objective - 1e-6);  // weak duality
        CHECK(rep.max_primal_residual < 1e-8);
        CHECK(rep.max_dual_residual < 1e-8);
    };

    {
        // 1. two-variable LP
        ConicProgram p;
        auto x = p.add_nonnegative(2);
        p.add_objective_term(x.offset, 1.0);
        p.add_objective_term(x.offset + 1, 2.0);
        auto row = p.add_equality_row(4.0);
        p.add_coefficient(row, x.offset, 1.0);
        p.add_coefficient(row, x.offset + 1, 1.0);
        check_optimal(p, 4.0, "lp-2var");
    }
    {
        // 2. min x s.t. x >= 3, written as x = u + 3 with u >= 0
        ConicProgram p;
        auto u = p.add_nonnegative(1);
        p.add_objective_term(u.offset, 1.0);
        const SolveReport rep = solve(p);
        REQUIRE(rep.status == SolveStatus::optimal);
        const double x_value = rep.primal(u.offset) + 3.0;
        CHECK(std::abs(x_value - 3.0) < 1e-6);
    }
    {
        // 3. min t, ||(1,1)|| <= t
        ConicProgram p;
        auto soc = p.add_second_order(3);
        p.add_objective_term(soc.offset, 1.0);
        auto r1 = p.add_equality_row(1.0);
        p.add_coefficient(r1, soc.offset + 1, 1.0);
        auto r2 = p.add_equality_row(1.0);
        p.add_coefficient(r2, soc.offset + 2, 1.0);
        check_optimal(p, std::sqrt(2.0), "soc-sqrt2");
    }
    {
        // 4. min t, ||(3,4)|| <= t
        ConicProgram p;
        auto soc = p.add_second_order(3);
        p.add_objective_term(soc.offset, 1.0);
        auto r1 = p.add_equality_row(3.0);
        p.add_coefficient(r1, soc.offset + 1, 1.0);
        auto r2 = p.add_equality_row(4.0);
        p.add_coefficient(r2, soc.offset + 2, 1.0);
        check_optimal(p, 5.0, "soc-345");
    }
    {
        // 5. rotated-cone pattern: min p s.t. p >= ||(1,2)||^2
        ConicProgram p;
        auto soc = p.add_second_order(4);
        p.add_objective_term(soc.offset, 1.0);
        p.add_objective_term(soc.offset + 3, 1.0);
        auto r0 = p.add_equality_row(1.0);
        p.add_coefficient(r0, soc.offset, 1.0);
        p.add_coefficient(r0, soc.offset + 3, -1.0);
        auto r1 = p.add_equality_row(1.0);
        p.add_coefficient(r1, soc.offset + 1, 1.0);
        auto r2 = p.add_equality_row(2.0);
        p.add_coefficient(r2, soc.offset + 2, 1.0);
        check_optimal(p, 5.0, "rotated-power");
    }
    {
        // 6. min Tr(W) s.t. Tr(diag(2,1) W) >= 1, W >= 0  ->  1/2
        ConicProgram p;
        auto w = p.add_psd(2);
        auto slack = p.add_nonnegative(1);
        p.add_objective_block(w, svec(Eigen::MatrixXd::Identity(2, 2)));
        Eigen::MatrixXd h(2, 2);
        h << 2, 0, 0, 1;
        auto row = p.add_equality_row(1.0);
        p.add_coefficient_block(row, w, svec(h));
        p.add_coefficient(row, slack.offset, -1.0);
        check_optimal(p, 0.5, "sdp-trace");

        // analytic optimum W = diag(1/2, 0), cross-checked by a fine grid
        // over feasible diagonal matrices
        double best = 1e9;
        for (double w11 = 0.0; w11 <= 1.0; w11 += 1e-3)
            for (double w22 = 0.0; w22 <= 1.0; w22 += 1e-1)
                if (2.0 * w11 + w22 >= 1.0) best = std::min(best, w11 + w22);
        CHECK(best == doctest::Approx(0.5).epsilon(1e-2));
    }
    {
        // 7. matrix completion: W11 = 1, W21 = 0.7, min Tr -> 1.49
        ConicProgram p;
        auto w = p.add_psd(2);
        p.add_objective_block(w, svec(Eigen::MatrixXd::Identity(2, 2)));
        auto r1 = p.add_equality_row(1.0);
        p.add_coefficient(r1, w.offset + 0, 1.0);  // W11
        auto r2 = p.add_equality_row(std::numbers::sqrt2 * 0.7);
        p.add_coefficient(r2, w.offset + 1, 1.0);  // sqrt2 * W21
        check_optimal(p, 1.49, "sdp-completion");
    }
    {
        // 8. complex SDP via embedding: H = [[2, i], [-i, 2]] -> 1/3
        ConicProgram p;
        auto w = p.add_psd(4);
        auto slack = p.add_nonnegative(1);
        p.add_objective_block(w, hermitian_form_coefficients(
                                     Eigen::MatrixXcd::Identity(2, 2)));
        Eigen::MatrixXcd h(2, 2);
        h << std::complex<double>(2, 0), std::complex<double>(0, 1),
            std::complex<double>(0, -1), std::complex<double>(2, 0);
        auto row = p.add_equality_row(1.0);
        p.add_coefficient_block(row, w, hermitian_form_coefficients(h));
        p.add_coefficient(row, slack.offset, -1.0);
        check_optimal(p, 1.0 / 3.0, "csdp-embedded");
    }
    {
        // 9. infeasible
        ConicProgram p;
        auto x = p.add_nonnegative(1);
        p.add_objective_term(x.offset, 1.0);
        auto row = p.add_equality_row(-1.0);
        p.add_coefficient(row, x.offset, 1.0);
        CHECK(solve(p).status == SolveStatus::infeasible);
    }
    {
        // 10. unbounded
        ConicProgram p;
        auto x = p.add_nonnegative(1);
        p.add_objective_term(x.offset, -1.0);
        CHECK(solve(p).status == SolveStatus::unbounded);
    }
}

TEST_CASE("program dump format") {
    ConicProgram p;
    auto x = p.add_nonnegative(1, "x");
    auto soc = p.add_second_order(3, "cone");
    p.add_objective_term(x.offset, 1.5);
    auto row = p.add_equality_row(2.25);
    p.add_coefficient(row, soc.offset, -1.0);
    std::ostringstream os;
    p.dump(os);
    const std::string text = os.str();
    CHECK(text.find("conic-program v1") == 0);
    CHECK(text.find("vars 4") != std::string::npos);
    CHECK(text.find("nonneg 0 1 x") != std::string::npos);
    CHECK(text.find("soc 1 3 cone") != std::string::npos);
    CHECK(text.find("2.25") != std::string::npos);
}

TEST_CASE("rank-one extraction") {
    SUBCASE("exact rank one returns the vector up to phase") {
        Eigen::VectorXcd v(2);
        v << std::complex<double>(1.0, 0.0), std::complex<double>(0.0, 1.0);
        v /= v.norm();
        const auto ext = extract_rank_one(v * v.adjoint());
        CHECK(ext.gap == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(std::abs(std::abs(v.dot(ext.vector)) - ext.vector.norm()) < 1e-12);
    }

    SUBCASE("identity is maximally non-rank-one") {
        const auto ext = extract_rank_one(Eigen::MatrixXcd::Identity(2, 2));
        CHECK(ext.gap == doctest::Approx(1.0));
    }

    SUBCASE("zero matrix") {
        const auto ext = extract_rank_one(Eigen::MatrixXcd::Zero(3, 3));
        CHECK(ext.gap == 0.0);
        CHECK(ext.vector.norm() == 0.0);
    }

    SUBCASE("reconstruction error bound (n-1) lambda_2") {
        for (std::uint64_t seed : {11, 12, 13, 14}) {
            Eigen::MatrixXcd h = random_hermitian(4, seed);
            Eigen::MatrixXcd psd = h * h.adjoint();  // PSD
            const auto ext = extract_rank_one(psd);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(psd);
            const double lambda2 = eig.eigenvalues()(2);
            const double err = (ext.vector * ext.vector.adjoint() - psd).norm();
            CHECK(err <= 3.0 * lambda2 + 1e-10);
        }
    }

    SUBCASE("indefinite input is rejected") {
        Eigen::MatrixXcd indef = Eigen::MatrixXcd::Identity(2, 2);
        indef(1, 1) = -1.0;
        CHECK_THROWS_AS(extract_rank_one(indef), std::invalid_argument);
    }
}

TEST_CASE("randomization contract") {
    SUBCASE("always-false evaluator reports failure") {
        std::vector<Eigen::MatrixXcd> w_set = {Eigen::MatrixXcd::Identity(2, 2)};
        const auto outcome = randomize_rank_one(
            w_set, [](const auto& dirs) { return std::vector<double>(dirs.size(), 1.0); },
            [](const auto&) { return false; }, 25, 3);
        CHECK_FALSE(outcome.success);
        CHECK(outcome.feasible_candidates == 0);
    }

    SUBCASE("rank-one inputs collapse to the eigenvector direction") {
        TrialRng rng(15, 0, 202);
        const Eigen::VectorXcd v = rng.cnormal_vector(3).normalized();
        std::vector<Eigen::MatrixXcd> w_set = {4.0 * v * v.adjoint()};
        const auto outcome = randomize_rank_one(
            w_set,
            [](const auto& dirs) {
                return std::vector<double>(dirs.size(), 4.0);  // keep the power
            },
            [](const auto&) { return true; }, 8, 3);
        REQUIRE(outcome.success);
        const Eigen::VectorXcd got = outcome.beams[0];
        CHECK(got.norm() == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(std::abs(v.dot(got)) == doctest::Approx(got.norm()).epsilon(1e-9));
    }
}

TEST_CASE("interior-point complexity bounds") {
    const auto est = complexity_estimate(3, 3, 0.1);
    CHECK(est.sca_iterations == doctest::Approx(3.0 * std::log(10.0)).epsilon(1e-12));
    CHECK(est.sca_iterations == doctest::Approx(6.9).epsilon(0.01));
    // SOC dimension term at N = 3, scaled by (MN)^2
    CHECK(est.sca_operations ==
          doctest::Approx(81.0 * (0.33 * 27 + 0.5 * 9 + 1.16 * 3 + 1.0)).epsilon(1e-12));
    CHECK(est.sca_operations / 81.0 == doctest::Approx(17.9).epsilon(1e-2));
    CHECK(est.sdp_iterations == doctest::Approx(3.0 * std::log(10.0)).epsilon(1e-12));
    const double m_cons = 6.0, n_dim = 9.0;
    CHECK(est.sdp_operations ==
          doctest::Approx(m_cons * std::pow(n_dim, 3) + m_cons * m_cons * n_dim * n_dim +
                          std::pow(m_cons, 3)));

    // iteration bounds vanish as the accuracy requirement disappears
    CHECK(complexity_estimate(3, 3, 0.999999).sca_iterations ==
          doctest::Approx(0.0).epsilon(1e-4));
    CHECK_THROWS_AS(complexity_estimate(3, 3, 1.5), std::invalid_argument);
}
