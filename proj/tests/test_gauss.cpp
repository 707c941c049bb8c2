#include <cmath>
#include <random>

#include "doctest.h"
#include "evarkit/family.hpp"
#include "evarkit/gauss.hpp"

using namespace evar;

namespace {

CovMatrix random_spd(int d, std::mt19937_64& rng, double jitter = 0.3) {
    std::normal_distribution<double> norm(0.0, 1.0);
    CovMatrix a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = norm(rng);
    return a * a.transpose() + jitter * CovMatrix::Identity(d, d);
}

}  // namespace

TEST_CASE("d_gauss identity matrix is zero") {
    for (int d : {1, 2, 5}) {
        CHECK(d_gauss(Eigen::MatrixXd::Identity(d, d)) == doctest::Approx(0.0));
    }
}

TEST_CASE("d_gauss diag(2,2) frozen value") {
    Eigen::MatrixXd b = 2.0 * Eigen::MatrixXd::Identity(2, 2);
    // 0.5 * (-log det B - (d - tr B)) = 0.5*(-2 log 2 + 2) = 1 - log 2
    CHECK(d_gauss(b) == doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-12));
    CHECK(d_gauss(b) == doctest::Approx(0.30685281944).epsilon(1e-9));
}

TEST_CASE("d_gauss rejects singular and negative-determinant inputs") {
    Eigen::MatrixXd sing = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(d_gauss(sing), domain_error);
    Eigen::MatrixXd neg(2, 2);
    neg << -1.0, 0.0, 0.0, 1.0;
    CHECK_THROWS_AS(d_gauss(neg), domain_error);
}

TEST_CASE("d_gauss nonnegative on whitened SPD pairs, zero iff equal") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + static_cast<int>(rng() % 4);
        const CovMatrix sq = random_spd(d, rng);
        const CovMatrix sp = random_spd(d, rng);
        const double val = d_gauss_pair(sq, sp);
        CHECK(val >= -1e-12);
        CHECK(d_gauss_pair(sq, sq) == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("d_gauss matches the eigenvalue form") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + static_cast<int>(rng() % 3);
        const CovMatrix sq = random_spd(d, rng);
        const CovMatrix sp = random_spd(d, rng);
        const Eigen::MatrixXd b = sq * sp.inverse();
        // whitened form: eigenvalues of sp^{-1/2} sq sp^{-1/2}
        Eigen::SelfAdjointEigenSolver<CovMatrix> es(sp);
        const CovMatrix root_inv = es.operatorInverseSqrt();
        Eigen::SelfAdjointEigenSolver<CovMatrix> ew(root_inv * sq * root_inv);
        double acc = 0.0;
        for (int j = 0; j < d; ++j) {
            const double lam = ew.eigenvalues()(j);
            acc += 0.5 * (-std::log(lam) - (1.0 - lam));
        }
        CHECK(d_gauss(b) == doctest::Approx(acc).epsilon(1e-10));
        CHECK(d_gauss_pair(sq, sp) == doctest::Approx(acc).epsilon(1e-10));
    }
}

TEST_CASE("trace_ratio basics") {
    std::mt19937_64 rng(3);
    const CovMatrix s = random_spd(3, rng);
    CHECK(trace_ratio(s, s) == doctest::Approx(3.0).epsilon(1e-12));
    CovMatrix eye2 = CovMatrix::Identity(2, 2);
    CHECK(trace_ratio(2.0 * eye2, eye2) == doctest::Approx(4.0));
    CHECK_THROWS_AS(trace_ratio(eye2, s), domain_error);
}

TEST_CASE("trace_ratio reproduces the bernoulli two-sample effective dimension") {
    // d_qp = (mu_a(1-mu_a) + mu_b(1-mu_b)) / (2 mubar (1-mubar)) at (0.95, 0.05)
    CovMatrix sq(1, 1), sp(1, 1);
    sq(0, 0) = 0.95 * 0.05 + 0.05 * 0.95;
    sp(0, 0) = 2.0 * 0.5 * 0.5;
    CHECK(trace_ratio(sq, sp) == doctest::Approx(0.19).epsilon(1e-12));
}

TEST_CASE("d_triple identities") {
    std::mt19937_64 rng(5);
    const CovMatrix sp = random_spd(3, rng);
    const CovMatrix sq = random_spd(3, rng);
    CHECK(d_triple(sq, sq, sq) == doctest::Approx(0.0));
    // with Sigma_r = Sigma_q it collapses to d_gauss(Sigma_q Sigma_p^{-1})
    CHECK(d_triple(sq, sq, sp) == doctest::Approx(d_gauss_pair(sq, sp)).epsilon(1e-10));
    // scalar case frozen: sigma_r = 1, sigma_q = 0.19, sigma_p = 1
    CovMatrix r(1, 1), q(1, 1), p(1, 1);
    r << 1.0;
    q << 0.19;
    p << 1.0;
    const double expected = -0.5 * std::log(0.19) + 0.5 * (1.0 - 1.0 / 0.19);
    CHECK(d_triple(r, q, p) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gaussian_kl closed forms") {
    MeanVec zero = MeanVec::Zero(2);
    CovMatrix eye = CovMatrix::Identity(2, 2);
    CHECK(gaussian_kl(zero, eye, zero, eye) == doctest::Approx(0.0));

    MeanVec m0(1), m1(1);
    m0 << 0.0;
    m1 << 1.0;
    CovMatrix one = CovMatrix::Identity(1, 1);
    CHECK(gaussian_kl(m0, one, m1, one) == doctest::Approx(0.5).epsilon(1e-12));

    // mu_r = mu_0 reduces to the d_triple form
    std::mt19937_64 rng(17);
    const CovMatrix sr = random_spd(2, rng);
    const CovMatrix sp = random_spd(2, rng);
    CHECK(gaussian_kl(zero, sr, zero, sp) ==
          doctest::Approx(d_triple(sr, sr, sp)).epsilon(1e-12));
}

TEST_CASE("gaussian_kl agrees with a Monte-Carlo estimate of E_R[log q/p0]") {
    std::mt19937_64 rng(23);
    const int d = 2;
    const CovMatrix sr = random_spd(d, rng);
    const CovMatrix sq = random_spd(d, rng);
    const CovMatrix sp = random_spd(d, rng);
    MeanVec mu_r(d), mu_0(d);
    mu_r << 0.3, -0.2;
    mu_0 << -0.5, 0.4;
    const double exact = gaussian_kl(mu_r, sr, sq, mu_0, sp);

    const Eigen::MatrixXd chol = Eigen::LLT<CovMatrix>(sr).matrixL();
    std::normal_distribution<double> norm(0.0, 1.0);
    const int reps = 100000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < reps; ++i) {
        MeanVec z(d);
        for (int j = 0; j < d; ++j) z(j) = norm(rng);
        const MeanVec x = mu_r + chol * z;
        const double v =
            gauss_log_density(x, mu_r, sq) - gauss_log_density(x, mu_0, sp);
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sum_sq / reps - mean * mean) / reps);
    CHECK(std::abs(mean - exact) < 4.0 * se);
}

TEST_CASE("mle_marginal") {
    std::mt19937_64 rng(29);
    const CovMatrix sp = random_spd(2, rng);
    MeanVec mu(2);
    mu << 1.0, -1.0;

    SUBCASE("point prior gives Sigma_p / n") {
        GaussLaw point{mu, CovMatrix::Zero(2, 2)};
        const GaussLaw law = mle_marginal(point, sp, 4);
        CHECK((law.cov - sp / 4.0).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(law.mean == mu);
    }
    SUBCASE("matching condition Pi = (Sigma_q - Sigma_p)/n gives Sigma_q/n") {
        const CovMatrix sq = sp + random_spd(2, rng, 0.1);
        const int n = 7;
        GaussLaw prior{mu, (sq - sp) / n};
        const GaussLaw law = mle_marginal(prior, sp, n);
        CHECK((law.cov - sq / n).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("large n limit approaches the prior covariance") {
        const CovMatrix pi = random_spd(2, rng);
        GaussLaw prior{mu, pi};
        const GaussLaw law = mle_marginal(prior, sp, 100000000);
        CHECK((law.cov - pi).cwiseAbs().maxCoeff() < 1e-6);
    }
}
