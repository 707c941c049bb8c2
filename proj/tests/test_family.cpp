#include <cmath>

#include "doctest.h"
#include "evarkit/family.hpp"

using namespace evar;

namespace {

MeanVec mv(double a) {
    MeanVec m(1);
    m << a;
    return m;
}

MeanVec mv2(double a, double b) {
    MeanVec m(2);
    m << a, b;
    return m;
}

std::vector<MeanVec> interior_grid(const std::string& name) {
    if (name == "bernoulli") return {mv(0.1), mv(0.35), mv(0.5), mv(0.8), mv(0.97)};
    if (name == "poisson") return {mv(0.2), mv(1.0), mv(3.5), mv(10.0)};
    if (name == "exponential") return {mv(0.3), mv(1.0), mv(2.0), mv(7.0)};
    if (name == "gauss-loc") return {mv(-2.0), mv(0.0), mv(1.3)};
    if (name == "gauss-loc-scale")
        return {mv2(0.0, 1.0), mv2(1.0, 2.5), mv2(-0.5, 0.5), mv2(2.0, 4.5)};
    // gamma: mu2 > exp(mu1)
    return {mv2(0.0, 1.5), mv2(0.5, 2.5), mv2(-1.0, 1.0), mv2(1.0, 4.0)};
}

}  // namespace

TEST_CASE("gradient of the log partition recovers the mean") {
    for (const auto& name : family_names()) {
        const FamilyPtr f = make_family(name);
        for (const MeanVec& mu : interior_grid(name)) {
            const Eigen::VectorXd beta = f->mean_to_canonical(mu);
            const double h = 1e-6;
            for (int j = 0; j < f->dim(); ++j) {
                Eigen::VectorXd bp = beta, bm = beta;
                bp(j) += h;
                bm(j) -= h;
                const double grad =
                    (f->log_partition(bp) - f->log_partition(bm)) / (2.0 * h);
                CHECK(grad == doctest::Approx(mu(j)).epsilon(1e-5));
            }
            // round trip
            const MeanVec back = f->canonical_to_mean(beta);
            CHECK((back - mu).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("covariance map matches the Hessian of the log partition") {
    for (const auto& name : family_names()) {
        const FamilyPtr f = make_family(name);
        for (const MeanVec& mu : interior_grid(name)) {
            const Eigen::VectorXd beta = f->mean_to_canonical(mu);
            const CovMatrix cov = f->cov(mu);
            const double h = 1e-4;
            for (int i = 0; i < f->dim(); ++i) {
                for (int j = 0; j < f->dim(); ++j) {
                    Eigen::VectorXd bpp = beta, bpm = beta, bmp = beta, bmm = beta;
                    bpp(i) += h; bpp(j) += h;
                    bpm(i) += h; bpm(j) -= h;
                    bmp(i) -= h; bmp(j) += h;
                    bmm(i) -= h; bmm(j) -= h;
                    const double hess =
                        (f->log_partition(bpp) - f->log_partition(bpm) -
                         f->log_partition(bmp) + f->log_partition(bmm)) /
                        (4.0 * h * h);
                    const double scale = std::max(1.0, std::abs(cov(i, j)));
                    CHECK(std::abs(hess - cov(i, j)) / scale < 1e-4);
                }
            }
            CHECK(is_spd(cov));
        }
    }
}

TEST_CASE("discrete densities sum to one") {
    const FamilyPtr bern = make_family("bernoulli");
    double total = 0.0;
    for (double u : {0.0, 1.0}) total += std::exp(bern->log_density(mv(0.3), mv(u)));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));

    const FamilyPtr pois = make_family("poisson");
    total = 0.0;
    for (int u = 0; u <= 200; ++u)
        total += std::exp(pois->log_density(mv(4.2), mv(u)));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("generic canonical KL equals the closed forms") {
    for (const auto& name : family_names()) {
        const FamilyPtr f = make_family(name);
        const auto grid = interior_grid(name);
        for (const MeanVec& a : grid) {
            for (const MeanVec& b : grid) {
                const double closed = f->kl(a, b);
                const double generic = f->kl_generic(a, b);
                CHECK(std::abs(closed - generic) < 1e-9 * std::max(1.0, std::abs(closed)));
                CHECK(closed >= -1e-12);
                if ((a - b).cwiseAbs().maxCoeff() < 1e-15)
                    CHECK(closed == doctest::Approx(0.0));
            }
        }
    }
}

TEST_CASE("paper-reported KL values") {
    const FamilyPtr expo = make_family("exponential");
    // exponential two-sample at (2, 2/3): D = ln(4/3)
    const double d_sum = expo->kl(mv(2.0), mv(4.0 / 3.0)) +
                         expo->kl(mv(2.0 / 3.0), mv(4.0 / 3.0));
    CHECK(d_sum == doctest::Approx(std::log(4.0 / 3.0)).epsilon(1e-12));
    CHECK(d_sum == doctest::Approx(0.2877).epsilon(1e-3));

    const FamilyPtr bern = make_family("bernoulli");
    const double d_b = bern->kl(mv(0.95), mv(0.5)) + bern->kl(mv(0.05), mv(0.5));
    CHECK(d_b == doctest::Approx(0.9893).epsilon(1e-3));
}

TEST_CASE("robustness identity: n*KL(muhat, mu0) equals the log likelihood ratio") {
    for (const auto& name : family_names()) {
        const FamilyPtr f = make_family(name);
        const auto grid = interior_grid(name);
        const MeanVec mu_gen = grid[1];
        const MeanVec mu0 = grid[0];
        const ObsSeq data = sample_iid(*f, mu_gen, 40, 99);
        const ExtendedMean hat = mle(*f, data);
        if (!hat.interior) continue;
        double lr = 0.0;
        for (const Obs& u : data)
            lr += f->log_density(hat.value, u) - f->log_density(mu0, u);
        const double via_kl = data.size() * f->kl_extended(hat, mu0);
        CHECK(std::abs(lr - via_kl) < 1e-8 * std::max(1.0, std::abs(lr)));
    }
}

TEST_CASE("boundary MLE handling") {
    const FamilyPtr bern = make_family("bernoulli");
    ObsSeq ones(3, mv(1.0));
    const ExtendedMean hat = mle(*bern, ones);
    CHECK(!hat.interior);
    CHECK(hat.value(0) == doctest::Approx(1.0));
    // all-ones against mu* = 0.5: sup_mu log ratio per observation is log 2
    CHECK(bern->kl_extended(hat, mv(0.5)) == doctest::Approx(std::log(2.0)));
    CHECK(bern->kl_extended({mv(0.5), true}, mv(0.5)) == doctest::Approx(0.0));

    const FamilyPtr pois = make_family("poisson");
    CHECK(pois->kl_extended({mv(0.0), false}, mv(1.7)) == doctest::Approx(1.7));

    const FamilyPtr expo = make_family("exponential");
    CHECK(std::isinf(expo->kl_extended({mv(0.0), false}, mv(1.0))));
    CHECK_THROWS_AS(bern->kl_extended({mv(1.5), false}, mv(0.5)), domain_error);
}

TEST_CASE("sampler determinism and law of large numbers") {
    for (const auto& name : family_names()) {
        const FamilyPtr f = make_family(name);
        const MeanVec mu = interior_grid(name)[1];
        CHECK(sample_iid(*f, mu, 0, 1).empty());
        const ObsSeq a = sample_iid(*f, mu, 50, 12345);
        const ObsSeq b = sample_iid(*f, mu, 50, 12345);
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK((a[i] - b[i]).cwiseAbs().maxCoeff() == 0.0);

        const int big = 200000;
        const ObsSeq big_draw = sample_iid(*f, mu, big, 777);
        MeanVec acc = MeanVec::Zero(f->dim());
        for (const Obs& u : big_draw) acc += f->suffstat(u);
        acc /= static_cast<double>(big);
        const CovMatrix cov = f->cov(mu);
        for (int j = 0; j < f->dim(); ++j) {
            const double se = std::sqrt(cov(j, j) / big);
            CHECK(std::abs(acc(j) - mu(j)) < 4.5 * se);
        }
    }
}

TEST_CASE("mle and prequential paths") {
    const FamilyPtr bern = make_family("bernoulli");
    CHECK_THROWS_AS(mle(*bern, {}), domain_error);

    ObsSeq data{mv(1.0), mv(0.0), mv(1.0)};
    const ExtendedMean hat = mle(*bern, data);
    CHECK(hat.interior);
    CHECK(hat.value(0) == doctest::Approx(2.0 / 3.0));

    // prequential at i=0 is x0; the running values stay interior
    const auto path = prequential(*bern, mv(0.5), 1.0, data);
    REQUIRE(path.size() == 4);
    CHECK(path[0](0) == doctest::Approx(0.5));
    CHECK(path[1](0) == doctest::Approx(1.5 / 2.0));
    CHECK(path[3](0) == doctest::Approx(2.5 / 4.0));
    for (const auto& m : path) CHECK(bern->in_mean_space(m));

    CHECK_THROWS_AS(prequential(*bern, mv(0.5), 0.0, data), domain_error);
    CHECK_THROWS_AS(prequential(*bern, mv(0.0), 1.0, data), domain_error);
}

TEST_CASE("registry") {
    for (const auto& name : family_names()) CHECK(make_family(name)->name() == name);
    CHECK_THROWS_AS(make_family("landau"), domain_error);
}
