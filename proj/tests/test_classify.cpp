#include <cmath>

#include "doctest.h"
#include "evarkit/classify.hpp"
#include "evarkit/two_sample.hpp"

using namespace evar;

TEST_CASE("bernoulli two-sample curve is simple") {
    TwoSampleSpec spec("bernoulli", 2.0 * std::log(19.0));
    const auto grid = classify_grid(0.2, 1.8, 101);
    const Classification cls =
        classify(*spec.null_family(), *spec.gen_family(), grid);
    CHECK((cls.verdict == SimplicityVerdict::Simple ||
           cls.verdict == SimplicityVerdict::StrictlySimple));
    CHECK(cls.max_eigenvalue <= cls.zero_threshold);
    // delta* != 0 keeps the component means apart: strictly simple here
    CHECK(cls.verdict == SimplicityVerdict::StrictlySimple);
}

TEST_CASE("exponential two-sample curve is strictly anti-simple") {
    TwoSampleSpec spec("exponential", -1.0);
    const auto grid = classify_grid(0.7, 5.0, 101);
    const Classification cls =
        classify(*spec.null_family(), *spec.gen_family(), grid);
    CHECK(cls.verdict == SimplicityVerdict::StrictlyAntiSimple);
    CHECK(cls.min_eigenvalue > 0.0);
}

TEST_CASE("gaussian and poisson two-sample pairs are matching") {
    for (const char* base : {"gauss-loc", "poisson"}) {
        TwoSampleSpec spec(base, 0.6);
        const double mu = spec.anchor().mu_a + spec.anchor().mu_b;
        const auto grid = std::string(base) == "gauss-loc"
                              ? classify_grid(mu - 1.0, mu + 1.0, 101)
                              : classify_grid(mu * 0.5, mu * 1.5, 101);
        const Classification cls =
            classify(*spec.null_family(), *spec.gen_family(), grid);
        CHECK(cls.verdict == SimplicityVerdict::Matching);
    }
}

TEST_CASE("verdict is stable under grid refinement") {
    TwoSampleSpec spec("exponential", -1.0);
    const Classification coarse =
        classify(*spec.null_family(), *spec.gen_family(), classify_grid(0.7, 5.0, 101));
    const Classification fine =
        classify(*spec.null_family(), *spec.gen_family(), classify_grid(0.7, 5.0, 202));
    CHECK(coarse.verdict == fine.verdict);

    TwoSampleSpec bern("bernoulli", 1.0);
    const Classification c2 =
        classify(*bern.null_family(), *bern.gen_family(), classify_grid(0.2, 1.8, 101));
    const Classification f2 =
        classify(*bern.null_family(), *bern.gen_family(), classify_grid(0.2, 1.8, 202));
    CHECK(c2.verdict == f2.verdict);
}

TEST_CASE("curve covariance agrees with sampled covariance") {
    TwoSampleSpec spec("exponential", -1.0);
    const double mu = 8.0 / 3.0;
    const CurvePoint p = spec.curve_from_mean(mu);
    const double analytic = spec.alt_x_variance(p);
    std::mt19937_64 rng(4242);
    const int reps = 100000;
    double sum = 0.0, sum_sq = 0.0, sum_4 = 0.0;
    for (int i = 0; i < reps; ++i) {
        const Obs u = spec.sample_q(p, rng);
        const double x = u(0) + u(1);
        sum += x;
        sum_sq += x * x;
        const double c = (x - mu) * (x - mu);
        sum_4 += c * c;
    }
    const double mean = sum / reps;
    const double var = sum_sq / reps - mean * mean;
    const double var_of_var = (sum_4 / reps - var * var) / reps;
    CHECK(std::abs(var - analytic) < 4.0 * std::sqrt(var_of_var));
}

TEST_CASE("empty grid and shared-statistic misuse are rejected") {
    TwoSampleSpec spec("bernoulli", 1.0);
    CHECK_THROWS_AS(classify(*spec.null_family(), *spec.gen_family(), {}), domain_error);
    const auto outside = classify_grid(2.5, 3.0, 4);  // outside (0, 2)
    CHECK_THROWS_AS(classify(*spec.null_family(), *spec.gen_family(), outside),
                    domain_error);
}

TEST_CASE("matching-pair note distinguishes built-ins") {
    TwoSampleSpec spec("bernoulli", 1.0);
    const Classification cls =
        classify(*spec.null_family(), *spec.gen_family(), classify_grid(0.5, 1.5, 11));
    CHECK(cls.matching_pairs_note.find("verified") != std::string::npos);
    const FamilyPtr gamma = make_family("gamma");
    std::vector<MeanVec> grid;
    MeanVec mu(2);
    mu << 0.0, 1.5;
    grid.push_back(mu);
    const Classification user = classify(*gamma, *gamma, grid);
    CHECK(user.matching_pairs_note == "assumed");
    CHECK(user.verdict == SimplicityVerdict::Matching);
}
