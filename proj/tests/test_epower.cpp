#include <cmath>
#include <random>

#include "doctest.h"
#include "evarkit/epower.hpp"

using namespace evar;

namespace {

CovMatrix rnd_spd(int d, std::mt19937_64& rng, double jitter = 0.4) {
    std::normal_distribution<double> norm(0.0, 1.0);
    CovMatrix a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = norm(rng);
    return a * a.transpose() + jitter * CovMatrix::Identity(d, d);
}

double pooled_se(const CurveRow& a, const CurveRow& b) {
    return std::sqrt(a.se * a.se + b.se * b.se);
}

const CurveRow& row_of(const EPowerCurve& curve, EVarKind kind, int n) {
    for (const auto& row : curve.rows)
        if (row.kind == kind && row.n == n) return row;
    throw std::runtime_error("row not found");
}

}  // namespace

TEST_CASE("sequence term stays below the Euler-constant bound") {
    const double euler = 0.57721566490153286;
    for (int n : {1, 2, 5, 17, 100, 1000, 10000}) {
        const double ob = o_b_sequence(n, 1.0);
        CHECK(ob <= euler + 0.5 / n + 1e-12);
    }
}

TEST_CASE("predict case tags") {
    CHECK(predicted_epower("thm2-cond", 10, 0.3).value == doctest::Approx(2.7));
    CHECK(predicted_epower("thm1-ui", 10, 0.3, 2.0).value == doctest::Approx(2.0));
    CHECK(predicted_epower("thm1-rip-simple", 7, 0.5).value == doctest::Approx(3.5));
    CHECK(predicted_epower("thm1-seqrip-anti", 7, 0.5).value == 0.0);
    CHECK_THROWS_AS(predicted_epower("thm9-bogus", 1, 0.0), domain_error);
}

TEST_CASE("gaussian composite identities hold in monte carlo (misspecified R)") {
    std::mt19937_64 rng(2024);
    GaussianSetup s;
    const int d = 2;
    s.mu_star = MeanVec::Zero(d);
    s.mu_star << 0.4, -0.2;
    s.sigma_p = rnd_spd(d, rng);
    s.sigma_q = s.sigma_p + rnd_spd(d, rng, 0.2);  // anti-simple
    s.sigma_r = s.sigma_q + rnd_spd(d, rng, 0.1);  // misspecified sampling law
    GaussLaw w1;
    w1.mean = s.mu_star + 0.4 * MeanVec::Ones(d);
    w1.cov = rnd_spd(d, rng, 0.5);
    s.w1 = w1;
    MeanVec x0 = s.mu_star + 0.3 * MeanVec::Ones(d);
    s.x0 = x0;
    s.n0 = 1.0;

    SimPlan plan;
    plan.problem = std::make_shared<GaussianLocationProblem>(s);
    plan.evars = {{EVarKind::UiSimple, true}, {EVarKind::Cond},
                  {EVarKind::UiPlugin},       {EVarKind::UiMixture},
                  {EVarKind::RipExact},       {EVarKind::Haar},
                  {EVarKind::PseudoW1},       {EVarKind::SeqRip}};
    plan.n_grid = {2, 10};
    plan.replicates = 40000;
    plan.seed = 99;
    const EPowerCurve curve = monte_carlo(plan);

    for (const auto& row : curve.rows) {
        if (row.kind == EVarKind::SeqRip) {
            // anti-simple: identically one
            CHECK(row.mean_log_s == 0.0);
            CHECK(row.se == 0.0);
            CHECK(row.predicted.value() == 0.0);
            continue;
        }
        REQUIRE(row.predicted.has_value());
        INFO("kind ", to_string(row.kind), " n ", row.n);
        CHECK(std::abs(row.mean_log_s - *row.predicted) < 4.0 * row.se);
    }
}

TEST_CASE("gaussian simple-case plug-in identities hold in monte carlo") {
    std::mt19937_64 rng(77);
    GaussianSetup s;
    const int d = 2;
    s.mu_star = MeanVec::Zero(d);
    s.sigma_p = rnd_spd(d, rng) + CovMatrix::Identity(d, d);
    s.sigma_q = 0.4 * s.sigma_p;  // strictly simple
    s.sigma_r = s.sigma_q;
    MeanVec x0 = s.mu_star + 0.5 * MeanVec::Ones(d);
    s.x0 = x0;
    s.n0 = 1.5;

    SimPlan plan;
    plan.problem = std::make_shared<GaussianLocationProblem>(s);
    plan.evars = {{EVarKind::SeqRip}, {EVarKind::UiPlugin}};
    plan.n_grid = {3, 12};
    plan.replicates = 60000;
    plan.seed = 7;
    const EPowerCurve curve = monte_carlo(plan);
    for (const auto& row : curve.rows) {
        REQUIRE(row.predicted.has_value());
        INFO("kind ", to_string(row.kind), " n ", row.n);
        CHECK(std::abs(row.mean_log_s - *row.predicted) < 4.0 * row.se);
    }
}

TEST_CASE("growth-rate ordering: RIP dominates the other kinds") {
    std::mt19937_64 rng(4);
    GaussianSetup s;
    const int d = 2;
    s.mu_star = MeanVec::Zero(d);
    s.sigma_p = rnd_spd(d, rng);
    s.sigma_q = s.sigma_p + rnd_spd(d, rng, 0.3);
    s.sigma_r = s.sigma_q;  // well-specified
    GaussLaw w1{s.mu_star, 0.5 * CovMatrix::Identity(d, d)};
    s.w1 = w1;

    SimPlan plan;
    plan.problem = std::make_shared<GaussianLocationProblem>(s);
    plan.evars = {{EVarKind::RipExact}, {EVarKind::Cond}, {EVarKind::UiMixture},
                  {EVarKind::UiPlugin}, {EVarKind::SeqRip}};
    plan.n_grid = {20};
    plan.replicates = 20000;
    plan.seed = 321;
    const EPowerCurve curve = monte_carlo(plan);
    const CurveRow& rip = row_of(curve, EVarKind::RipExact, 20);
    for (const auto& row : curve.rows) {
        if (row.kind == EVarKind::RipExact) continue;
        CHECK(rip.mean_log_s >= row.mean_log_s - 3.0 * pooled_se(rip, row));
    }
}

TEST_CASE("corollary gaps between RIP and UI in the strict cases") {
    std::mt19937_64 rng(11);
    const int d = 2;

    SUBCASE("strict anti-simple: d/2 + half the log-eigenvalue sum") {
        GaussianSetup s;
        s.mu_star = MeanVec::Zero(d);
        s.sigma_p = rnd_spd(d, rng);
        s.sigma_q = s.sigma_p + rnd_spd(d, rng, 0.4);
        s.sigma_r = s.sigma_q;
        SimPlan plan;
        plan.problem = std::make_shared<GaussianLocationProblem>(s);
        EVarSpec rip{EVarKind::RipExact};
        rip.simple_q = true;  // point W1 at mu*: the simple-alternative RIPr
        plan.evars = {rip, {EVarKind::UiSimple, true}};
        plan.n_grid = {15};
        plan.replicates = 60000;
        plan.seed = 5150;
        const EPowerCurve curve = monte_carlo(plan);
        const CurveRow& r = row_of(curve, EVarKind::RipExact, 15);
        const CurveRow& u = row_of(curve, EVarKind::UiSimple, 15);

        Eigen::SelfAdjointEigenSolver<CovMatrix> es(s.sigma_p);
        const CovMatrix root_inv = es.operatorInverseSqrt();
        Eigen::SelfAdjointEigenSolver<CovMatrix> ew(root_inv * s.sigma_q * root_inv);
        double expected = d / 2.0;
        for (int j = 0; j < d; ++j) expected += 0.5 * std::log(ew.eigenvalues()(j));
        CHECK(expected > d / 2.0);
        CHECK(std::abs((r.mean_log_s - u.mean_log_s) - expected) <
              4.0 * pooled_se(r, u));
    }

    SUBCASE("strict simple: d_qp/2") {
        GaussianSetup s;
        s.mu_star = MeanVec::Zero(d);
        s.sigma_p = rnd_spd(d, rng) + CovMatrix::Identity(d, d);
        s.sigma_q = 0.35 * s.sigma_p;
        s.sigma_r = s.sigma_q;
        SimPlan plan;
        plan.problem = std::make_shared<GaussianLocationProblem>(s);
        EVarSpec rip{EVarKind::SeqRip};
        rip.simple_q = true;  // simple case: RIP = seq-RIP = q/p_mu*
        plan.evars = {rip, {EVarKind::UiSimple, true}};
        plan.n_grid = {15};
        plan.replicates = 60000;
        plan.seed = 6;
        const EPowerCurve curve = monte_carlo(plan);
        const CurveRow& r = row_of(curve, EVarKind::SeqRip, 15);
        const CurveRow& u = row_of(curve, EVarKind::UiSimple, 15);
        const double expected = 0.5 * trace_ratio(s.sigma_q, s.sigma_p);
        CHECK(expected < d / 2.0);
        CHECK(std::abs((r.mean_log_s - u.mean_log_s) - expected) <
              4.0 * pooled_se(r, u));
    }
}

TEST_CASE("monte carlo is deterministic across thread counts") {
    TwoSampleSetup ts;
    ts.base = "bernoulli";
    ts.delta_star = 1.0;
    ts.prior_atoms = 21;
    SimPlan plan;
    plan.problem = std::make_shared<TwoSampleProblem>(ts);
    plan.evars = {{EVarKind::Cond}, {EVarKind::UiMixture}};
    plan.n_grid = {5, 10};
    plan.replicates = 64;
    plan.seed = 42;
    plan.threads = 1;
    const EPowerCurve one = monte_carlo(plan);
    plan.threads = 2;
    plan.problem = std::make_shared<TwoSampleProblem>(ts);
    const EPowerCurve two = monte_carlo(plan);
    REQUIRE(one.rows.size() == two.rows.size());
    for (std::size_t i = 0; i < one.rows.size(); ++i) {
        CHECK(one.rows[i].mean_log_s == two.rows[i].mean_log_s);
        CHECK(one.rows[i].se == two.rows[i].se);
    }
}

TEST_CASE("brute validity on the bernoulli two-sample") {
    TwoSampleSetup ts;
    ts.base = "bernoulli";
    ts.delta_star = 2.0 * std::log(19.0);
    ts.prior_atoms = 51;
    ts.solver.tol = 1e-9;
    TwoSampleProblem prob(ts);

    for (int n : {1, 2, 3}) {
        for (double mu : {0.6, 1.0}) {
            CHECK(brute_validity(prob, {EVarKind::Cond}, mu, n) ==
                  doctest::Approx(1.0).epsilon(1e-9));
            CHECK(brute_validity(prob, {EVarKind::UiSimple, true}, mu, n) <=
                  1.0 + 1e-9);
            CHECK(brute_validity(prob, {EVarKind::UiPlugin}, mu, n) <= 1.0 + 1e-9);
            CHECK(brute_validity(prob, {EVarKind::UiMixture}, mu, n) <= 1.0 + 1e-9);
            CHECK(brute_validity(prob, {EVarKind::SeqRip}, mu, n) <= 1.0 + 1e-9);
            EVarSpec rip{EVarKind::RipNumeric};
            const double e = brute_validity(prob, rip, mu, n);
            const double gap = prob.rip_certificate(n)->gap;
            CHECK(gap <= 1e-8);
            CHECK(e <= 1.0 + gap + 1e-9);
        }
    }
}

TEST_CASE("eprocess counterexample: gaussian anti-simple certifies") {
    const EprocessReport rep = eprocess_gaussian(0.0, 2.0, 1.0, 2);
    CHECK(rep.conclusive);
    CHECK((rep.expect_forward > 1.0 + 1e-4 || rep.expect_backward > 1.0 + 1e-4));

    CHECK_FALSE(eprocess_gaussian(0.0, 2.0, 1.0, 0).conclusive);
    // matching variances: consecutive priors coincide, premise fails
    CHECK_FALSE(eprocess_gaussian(0.0, 1.0, 1.0, 2).conclusive);
}

TEST_CASE("eprocess counterexample: matching poisson case is inconclusive") {
    TwoSampleSetup ts;
    ts.base = "poisson";
    ts.delta_star = 0.6;
    ts.prior_atoms = 31;
    TwoSampleProblem prob(ts);
    const EprocessReport rep = eprocess_two_sample(prob, 2, /*simple_q=*/true);
    CHECK_FALSE(rep.conclusive);
}

TEST_CASE("plan validation failures") {
    SimPlan plan;
    CHECK_THROWS_AS(monte_carlo(plan), domain_error);
    TwoSampleSetup ts;
    plan.problem = std::make_shared<TwoSampleProblem>(ts);
    plan.evars = {{EVarKind::Cond}};
    plan.n_grid = {5, 5};
    plan.replicates = 2;
    CHECK_THROWS_AS(monte_carlo(plan), domain_error);
}
