#include <cmath>

#include "doctest.h"
#include "evarkit/two_sample.hpp"

using namespace evar;

namespace {

Obs po(double a, double b) {
    Obs u(2);
    u << a, b;
    return u;
}

// brute-force density of Exp(mu_a) + Exp(mu_b) at z via fine Riemann sum
double conv_oracle(double mu_a, double mu_b, double z) {
    const int m = 200000;
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        const double s = z * (i + 0.5) / m;
        acc += std::exp(-s / mu_a) / mu_a * std::exp(-(z - s) / mu_b) / mu_b;
    }
    return acc * z / m;
}

}  // namespace

TEST_CASE("bernoulli curve anchors and identities") {
    const double delta = 2.0 * std::log(19.0);
    TwoSampleSpec spec("bernoulli", delta);
    CHECK(spec.anchor().mu_a == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(spec.anchor().mu_b == doctest::Approx(0.05).epsilon(1e-12));

    const CurvePoint at0 = spec.curve(0.0);
    CHECK(at0.mu_a == doctest::Approx(spec.anchor().mu_a));
    CHECK(at0.mu_b == doctest::Approx(spec.anchor().mu_b));

    for (double beta : {-2.5, -0.3, 0.0, 1.0, 2.0}) {
        const CurvePoint p = spec.curve(beta);
        CHECK(std::abs(spec.effect_size(p) - delta) < 1e-12);
    }
    // extreme tilts push a component within 1e-6 of the boundary, where the
    // identity is limited by the representation of 1 - mu'
    for (double beta : {-10.0, 10.0}) {
        const CurvePoint p = spec.curve(beta);
        CHECK(std::abs(spec.effect_size(p) - delta) < 1e-9);
    }

    TwoSampleSpec flat("bernoulli", 0.0);
    for (double beta : {-3.0, 0.0, 2.0}) {
        const CurvePoint p = flat.curve(beta);
        CHECK(p.mu_a == doctest::Approx(p.mu_b).epsilon(1e-14));
    }
}

TEST_CASE("exponential curve anchor and admissible tilts") {
    TwoSampleSpec spec("exponential", -1.0);
    CHECK(spec.anchor().mu_a == doctest::Approx(2.0));
    CHECK(spec.anchor().mu_b == doctest::Approx(2.0 / 3.0));

    const CurvePoint at0 = spec.curve(0.0);
    CHECK(at0.mu_a == doctest::Approx(2.0));
    for (double beta : {-10.0, -1.0, 0.2, 0.49}) {
        const CurvePoint p = spec.curve(beta);
        CHECK(1.0 / p.mu_a - 1.0 / p.mu_b == doctest::Approx(-1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(spec.curve(0.5), domain_error);   // boundary of S
    CHECK_THROWS_AS(spec.curve(1.0), domain_error);
}

TEST_CASE("curve_from_mean inverts mean_at") {
    for (const char* base : {"bernoulli", "exponential", "poisson", "gauss-loc"}) {
        TwoSampleSpec spec(base, 0.8);
        for (double beta : {-3.0, -0.5, 0.0, 0.4}) {
            if (std::string(base) == "exponential" && beta >= spec.beta_range().second)
                continue;
            const double mu = spec.mean_at(beta);
            const CurvePoint p = spec.curve_from_mean(mu);
            CHECK(p.mu_a + p.mu_b == doctest::Approx(mu).epsilon(1e-10));
            CHECK(std::abs(spec.effect_size(p) - 0.8) < 1e-9);
        }
    }
}

TEST_CASE("bernoulli suffstat laws") {
    TwoSampleSpec spec("bernoulli", 2.0 * std::log(19.0));

    SUBCASE("fair-coin null at mu = 1, n = 1") {
        const ZLaw law = spec.null_z_law(1.0, 1);
        CHECK(std::exp(law.log_density(0)) == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(std::exp(law.log_density(1)) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(std::exp(law.log_density(2)) == doctest::Approx(0.25).epsilon(1e-12));
    }

    SUBCASE("alternative law by exhaustive enumeration, n = 1") {
        const CurvePoint p{0.95, 0.05};
        const ZLaw law = spec.alt_z_law(p, 1);
        CHECK(std::exp(law.log_density(0)) == doctest::Approx(0.05 * 0.95).epsilon(1e-12));
        CHECK(std::exp(law.log_density(1)) ==
              doctest::Approx(0.95 * 0.95 + 0.05 * 0.05).epsilon(1e-12));
        CHECK(std::exp(law.log_density(2)) == doctest::Approx(0.95 * 0.05).epsilon(1e-12));
    }

    SUBCASE("laws normalize") {
        for (int n : {1, 3, 7}) {
            CHECK(spec.null_z_law(0.73, n).total_mass() == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(spec.alt_z_law({0.6, 0.2}, n).total_mass() ==
                  doctest::Approx(1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("exponential suffstat laws") {
    TwoSampleSpec spec("exponential", -1.0);

    SUBCASE("n = 1 alternative density against a brute-force convolution") {
        const ZLaw law = spec.alt_z_law({2.0, 2.0 / 3.0}, 1);
        for (double z : {0.5, 2.0, 5.0}) {
            const double oracle = conv_oracle(2.0, 2.0 / 3.0, z);
            CHECK(std::exp(law.log_density(z)) == doctest::Approx(oracle).epsilon(1e-6));
        }
    }

    SUBCASE("tabulated n >= 2 law matches quadrature and normalizes") {
        const ZLaw law = spec.alt_z_law({2.0, 2.0 / 3.0}, 3);
        CHECK(law.total_mass() == doctest::Approx(1.0).epsilon(1e-6));
        // spot value: density of Gamma(3,2)+Gamma(3,2/3) at z = 8
        const double direct = log_gamma_sum_pdf(3.0, 2.0, 3.0, 2.0 / 3.0, 8.0);
        CHECK(law.log_density(8.0) == doctest::Approx(direct).epsilon(1e-6));
    }

    SUBCASE("null law normalizes") {
        CHECK(spec.null_z_law(8.0 / 3.0, 2).total_mass() ==
              doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("gaussian and poisson alternatives match the null Z-law at mu*") {
    for (const char* base : {"gauss-loc", "poisson"}) {
        TwoSampleSpec spec(base, 0.7);
        const CurvePoint p = spec.anchor();
        const double mu_star = p.mu_a + p.mu_b;
        const ZLaw alt = spec.alt_z_law(p, 4);
        const ZLaw null = spec.null_z_law(mu_star, 4);
        if (alt.is_lattice()) {
            for (int z = 0; z < 60; ++z)
                CHECK(alt.log_density(z) == doctest::Approx(null.log_density(z)).epsilon(1e-12));
        } else {
            for (double z : {mu_star * 4 - 3.0, mu_star * 4.0, mu_star * 4 + 2.5})
                CHECK(alt.log_density(z) == doctest::Approx(null.log_density(z)).epsilon(1e-12));
        }
    }
}

TEST_CASE("member densities and sampling") {
    TwoSampleSpec spec("bernoulli", 1.0);
    const CurvePoint p = spec.anchor();
    // log q at each of the four outcomes sums to one in probability
    double total = 0.0;
    for (const Obs& u : spec.enumerate_support()) total += std::exp(spec.log_q(p, u));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));

    // null member = equal-mean product
    CHECK(spec.log_p(1.2, po(1, 0)) ==
          doctest::Approx(std::log(0.6) + std::log(0.4)).epsilon(1e-12));

    TwoSampleSpec expo("exponential", -1.0);
    CHECK_THROWS_AS(expo.enumerate_support(), domain_error);
}

TEST_CASE("uniform beta prior") {
    TwoSampleSpec spec("exponential", -1.0);
    const CurvePrior prior = spec.uniform_beta_prior(201);
    CHECK(prior.size() == 201);
    double total = 0.0;
    for (double w : prior.weight) total += w;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(prior.beta.front() == doctest::Approx(-10.0));
    CHECK(prior.beta.back() < 0.5);  // admissible tilts only
    for (std::size_t k = 0; k < prior.size(); ++k)
        CHECK(std::abs(spec.effect_size(prior.point[k]) + 1.0) < 1e-9);
}

TEST_CASE("two-sample null family matches the base construction") {
    TwoSampleSpec spec("bernoulli", 1.0);
    const FamilyPtr null_fam = spec.null_family();
    MeanVec mu(1);
    mu << 0.9;
    // under the null member, (Ya, Yb) are i.i.d. with mean mu/2
    CHECK(std::exp(null_fam->log_density(mu, po(1, 1))) ==
          doctest::Approx(0.45 * 0.45).epsilon(1e-12));
    CHECK(null_fam->cov(mu)(0, 0) == doctest::Approx(2.0 * 0.45 * 0.55).epsilon(1e-12));
    // E[X] under Q_{a,b} is a + b: check via gen family mean coordinates
    const FamilyPtr gen = spec.gen_family();
    MeanVec m2(1);
    m2 << 1.3;
    const CurvePoint p = spec.curve_from_mean(1.3);
    CHECK(p.mu_a + p.mu_b == doctest::Approx(1.3).epsilon(1e-10));
    CHECK(gen->cov(m2)(0, 0) ==
          doctest::Approx(spec.alt_x_variance(p)).epsilon(1e-12));
}
