#include <cmath>
#include <limits>

#include "evarkit/family.hpp"

namespace evar {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

// Digamma by downward recurrence into the asymptotic region.
double digamma(double x) {
    double acc = 0.0;
    while (x < 6.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    return acc + std::log(x) - 0.5 * inv -
           inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)));
}

double trigamma(double x) {
    double acc = 0.0;
    while (x < 6.0) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    return acc + inv * (1.0 + 0.5 * inv +
                        inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0))));
}

Obs scalar_obs(double v) {
    Obs u(1);
    u(0) = v;
    return u;
}

class Bernoulli final : public Family {
  public:
    std::string name() const override { return "bernoulli"; }
    int dim() const override { return 1; }
    ObsKind obs_kind() const override { return ObsKind::Lattice; }

    MeanVec suffstat(const Obs& u) const override { return u; }

    double log_density(const MeanVec& mu, const Obs& u) const override {
        const double m = mu(0);
        return xlogy(u(0), m) + xlogy(1.0 - u(0), 1.0 - m);
    }

    bool in_mean_space(const MeanVec& mu) const override {
        return mu(0) > 0.0 && mu(0) < 1.0;
    }
    bool in_mean_closure(const MeanVec& mu) const override {
        return mu(0) >= 0.0 && mu(0) <= 1.0;
    }

    Eigen::VectorXd mean_to_canonical(const MeanVec& mu) const override {
        return scalar_obs(std::log(mu(0) / (1.0 - mu(0))));
    }
    MeanVec canonical_to_mean(const Eigen::VectorXd& beta) const override {
        return scalar_obs(1.0 / (1.0 + std::exp(-beta(0))));
    }
    double log_partition(const Eigen::VectorXd& beta) const override {
        const double b = beta(0);
        return b > 0 ? b + std::log1p(std::exp(-b)) : std::log1p(std::exp(b));
    }

    CovMatrix cov(const MeanVec& mu) const override {
        CovMatrix s(1, 1);
        s(0, 0) = mu(0) * (1.0 - mu(0));
        return s;
    }

    Obs sample(const MeanVec& mu, std::mt19937_64& rng) const override {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        return scalar_obs(unif(rng) < mu(0) ? 1.0 : 0.0);
    }

    double kl(const MeanVec& mu1, const MeanVec& mu0) const override {
        const double a = mu1(0), b = mu0(0);
        return xlogy(a, a / b) + xlogy(1.0 - a, (1.0 - a) / (1.0 - b));
    }

    double kl_extended(const ExtendedMean& mu_hat, const MeanVec& mu0) const override {
        if (!in_mean_closure(mu_hat.value))
            throw domain_error("bernoulli: mean outside [0,1]");
        return kl(mu_hat.value, mu0);  // xlogy handles the boundary limits
    }
};

class Poisson final : public Family {
  public:
    std::string name() const override { return "poisson"; }
    int dim() const override { return 1; }
    ObsKind obs_kind() const override { return ObsKind::Lattice; }

    MeanVec suffstat(const Obs& u) const override { return u; }

    double log_density(const MeanVec& mu, const Obs& u) const override {
        return xlogy(u(0), mu(0)) - mu(0) - std::lgamma(u(0) + 1.0);
    }

    bool in_mean_space(const MeanVec& mu) const override { return mu(0) > 0.0; }
    bool in_mean_closure(const MeanVec& mu) const override { return mu(0) >= 0.0; }

    Eigen::VectorXd mean_to_canonical(const MeanVec& mu) const override {
        return scalar_obs(std::log(mu(0)));
    }
    MeanVec canonical_to_mean(const Eigen::VectorXd& beta) const override {
        return scalar_obs(std::exp(beta(0)));
    }
    double log_partition(const Eigen::VectorXd& beta) const override {
        return std::exp(beta(0));
    }

    CovMatrix cov(const MeanVec& mu) const override {
        CovMatrix s(1, 1);
        s(0, 0) = mu(0);
        return s;
    }

    Obs sample(const MeanVec& mu, std::mt19937_64& rng) const override {
        std::poisson_distribution<long> pois(mu(0));
        return scalar_obs(static_cast<double>(pois(rng)));
    }

    double kl(const MeanVec& mu1, const MeanVec& mu0) const override {
        return xlogy(mu1(0), mu1(0) / mu0(0)) - mu1(0) + mu0(0);
    }

    double kl_extended(const ExtendedMean& mu_hat, const MeanVec& mu0) const override {
        if (!in_mean_closure(mu_hat.value))
            throw domain_error("poisson: negative mean");
        return kl(mu_hat.value, mu0);
    }
};

class Exponential final : public Family {
  public:
    std::string name() const override { return "exponential"; }
    int dim() const override { return 1; }
    ObsKind obs_kind() const override { return ObsKind::Continuous; }

    MeanVec suffstat(const Obs& u) const override { return u; }

    double log_density(const MeanVec& mu, const Obs& u) const override {
        return -std::log(mu(0)) - u(0) / mu(0);
    }

    bool in_mean_space(const MeanVec& mu) const override { return mu(0) > 0.0; }
    bool in_mean_closure(const MeanVec& mu) const override { return mu(0) >= 0.0; }

    Eigen::VectorXd mean_to_canonical(const MeanVec& mu) const override {
        return scalar_obs(-1.0 / mu(0));
    }
    MeanVec canonical_to_mean(const Eigen::VectorXd& beta) const override {
        return scalar_obs(-1.0 / beta(0));
    }
    double log_partition(const Eigen::VectorXd& beta) const override {
        return -std::log(-beta(0));
    }

    CovMatrix cov(const MeanVec& mu) const override {
        CovMatrix s(1, 1);
        s(0, 0) = mu(0) * mu(0);
        return s;
    }

    Obs sample(const MeanVec& mu, std::mt19937_64& rng) const override {
        std::exponential_distribution<double> expo(1.0 / mu(0));
        return scalar_obs(expo(rng));
    }

    double kl(const MeanVec& mu1, const MeanVec& mu0) const override {
        const double r = mu1(0) / mu0(0);
        return -std::log(r) + r - 1.0;
    }

    double kl_extended(const ExtendedMean& mu_hat, const MeanVec& mu0) const override {
        if (!in_mean_closure(mu_hat.value))
            throw domain_error("exponential: negative mean");
        if (mu_hat.value(0) == 0.0) return kInf;  // likelihood supremum diverges
        return kl(mu_hat.value, mu0);
    }
};

class GaussLoc final : public Family {
  public:
    explicit GaussLoc(double var) : var_(var) {}

    std::string name() const override { return "gauss-loc"; }
    int dim() const override { return 1; }
    ObsKind obs_kind() const override { return ObsKind::Continuous; }

    MeanVec suffstat(const Obs& u) const override { return u; }

    double log_density(const MeanVec& mu, const Obs& u) const override {
        const double z = u(0) - mu(0);
        return -0.5 * (std::log(2.0 * M_PI * var_) + z * z / var_);
    }

    bool in_mean_space(const MeanVec&) const override { return true; }
    bool in_mean_closure(const MeanVec&) const override { return true; }

    Eigen::VectorXd mean_to_canonical(const MeanVec& mu) const override {
        return scalar_obs(mu(0) / var_);
    }
    MeanVec canonical_to_mean(const Eigen::VectorXd& beta) const override {
        return scalar_obs(beta(0) * var_);
    }
    double log_partition(const Eigen::VectorXd& beta) const override {
        return 0.5 * var_ * beta(0) * beta(0);
    }

    CovMatrix cov(const MeanVec&) const override {
        CovMatrix s(1, 1);
        s(0, 0) = var_;
        return s;
    }

    Obs sample(const MeanVec& mu, std::mt19937_64& rng) const override {
        std::normal_distribution<double> norm(mu(0), std::sqrt(var_));
        return scalar_obs(norm(rng));
    }

    double kl(const MeanVec& mu1, const MeanVec& mu0) const override {
        const double z = mu1(0) - mu0(0);
        return 0.5 * z * z / var_;
    }

  private:
    double var_;
};

// Mean coordinates (mu1, mu2) = (m, m^2 + s^2); mean space {mu2 > mu1^2}.
class GaussLocScale final : public Family {
  public:
    std::string name() const override { return "gauss-loc-scale"; }
    int dim() const override { return 2; }
    int obs_dim() const override { return 1; }
    ObsKind obs_kind() const override { return ObsKind::Continuous; }

    MeanVec suffstat(const Obs& u) const override {
        MeanVec t(2);
        t << u(0), u(0) * u(0);
        return t;
    }

    double log_density(const MeanVec& mu, const Obs& u) const override {
        const double m = mu(0), s2 = mu(1) - mu(0) * mu(0);
        const double z = u(0) - m;
        return -0.5 * (std::log(2.0 * M_PI * s2) + z * z / s2);
    }

    bool in_mean_space(const MeanVec& mu) const override {
        return mu(1) > mu(0) * mu(0);
    }
    bool in_mean_closure(const MeanVec& mu) const override {
        return mu(1) >= mu(0) * mu(0);
    }

    Eigen::VectorXd mean_to_canonical(const MeanVec& mu) const override {
        const double m = mu(0), s2 = mu(1) - mu(0) * mu(0);
        Eigen::VectorXd beta(2);
        beta << m / s2, -0.5 / s2;
        return beta;
    }
    MeanVec canonical_to_mean(const Eigen::VectorXd& beta) const override {
        const double s2 = -0.5 / beta(1), m = beta(0) * s2;
        MeanVec mu(2);
        mu << m, m * m + s2;
        return mu;
    }
    double log_partition(const Eigen::VectorXd& beta) const override {
        return -beta(0) * beta(0) / (4.0 * beta(1)) + 0.5 * std::log(-M_PI / beta(1));
    }

    CovMatrix cov(const MeanVec& mu) const override {
        const double m = mu(0), s2 = mu(1) - mu(0) * mu(0);
        CovMatrix s(2, 2);
        s << s2, 2.0 * m * s2, 2.0 * m * s2, 4.0 * m * m * s2 + 2.0 * s2 * s2;
        return s;
    }

    Obs sample(const MeanVec& mu, std::mt19937_64& rng) const override {
        const double m = mu(0), s2 = mu(1) - mu(0) * mu(0);
        std::normal_distribution<double> norm(m, std::sqrt(s2));
        return scalar_obs(norm(rng));
    }

    double kl(const MeanVec& mu1, const MeanVec& mu0) const override {
        const double m1 = mu1(0), v1 = mu1(1) - m1 * m1;
        const double m0 = mu0(0), v0 = mu0(1) - m0 * m0;
        return 0.5 * (std::log(v0 / v1) + (v1 + (m1 - m0) * (m1 - m0)) / v0 - 1.0);
    }

    double kl_extended(const ExtendedMean& mu_hat, const MeanVec& mu0) const override {
        if (!in_mean_closure(mu_hat.value))
            throw domain_error("gauss-loc-scale: mean outside closure");
        if (!mu_hat.interior) return kInf;  // zero-variance supremum
        return kl(mu_hat.value, mu0);
    }
};

// Mean coordinates (mu1, mu2) = (E log U, E U) = (psi(a) + log th, a*th) for
// shape a, scale th; mean space {mu2 > exp(mu1)}.
class Gamma final : public Family {
  public:
    std::string name() const override { return "gamma"; }
    int dim() const override { return 2; }
    int obs_dim() const override { return 1; }
    ObsKind obs_kind() const override { return ObsKind::Continuous; }

    MeanVec suffstat(const Obs& u) const override {
        MeanVec t(2);
        t << std::log(u(0)), u(0);
        return t;
    }

    double log_density(const MeanVec& mu, const Obs& u) const override {
        const auto [a, th] = shape_scale(mu);
        return (a - 1.0) * std::log(u(0)) - u(0) / th - std::lgamma(a) - a * std::log(th);
    }

    bool in_mean_space(const MeanVec& mu) const override {
        return mu(1) > std::exp(mu(0));
    }
    bool in_mean_closure(const MeanVec& mu) const override {
        return mu(1) >= std::exp(mu(0));
    }

    Eigen::VectorXd mean_to_canonical(const MeanVec& mu) const override {
        const auto [a, th] = shape_scale(mu);
        Eigen::VectorXd beta(2);
        beta << a - 1.0, -1.0 / th;
        return beta;
    }
    MeanVec canonical_to_mean(const Eigen::VectorXd& beta) const override {
        const double a = beta(0) + 1.0, th = -1.0 / beta(1);
        MeanVec mu(2);
        mu << digamma(a) + std::log(th), a * th;
        return mu;
    }
    double log_partition(const Eigen::VectorXd& beta) const override {
        const double a = beta(0) + 1.0, th = -1.0 / beta(1);
        return std::lgamma(a) + a * std::log(th);
    }

    CovMatrix cov(const MeanVec& mu) const override {
        const auto [a, th] = shape_scale(mu);
        CovMatrix s(2, 2);
        s << trigamma(a), th, th, a * th * th;
        return s;
    }

    Obs sample(const MeanVec& mu, std::mt19937_64& rng) const override {
        const auto [a, th] = shape_scale(mu);
        std::gamma_distribution<double> gam(a, th);
        return scalar_obs(gam(rng));
    }

    double kl(const MeanVec& mu1, const MeanVec& mu0) const override {
        const auto [a1, t1] = shape_scale(mu1);
        const auto [a0, t0] = shape_scale(mu0);
        return (a1 - a0) * digamma(a1) - std::lgamma(a1) + std::lgamma(a0) +
               a0 * std::log(t0 / t1) + a1 * (t1 - t0) / t0;
    }

    double kl_extended(const ExtendedMean& mu_hat, const MeanVec& mu0) const override {
        if (!in_mean_closure(mu_hat.value))
            throw domain_error("gamma: mean outside closure");
        if (!mu_hat.interior) return kInf;
        return kl(mu_hat.value, mu0);
    }

    /// Inverts (mu1, mu2) -> (shape, scale): solve psi(a) - log a = mu1 - log mu2.
    static std::pair<double, double> shape_scale(const MeanVec& mu) {
        const double target = mu(0) - std::log(mu(1));
        // psi(a) - log a is increasing from -inf to 0 on (0, inf)
        double lo = 1e-8, hi = 1.0;
        while (digamma(hi) - std::log(hi) < target) hi *= 2.0;
        while (digamma(lo) - std::log(lo) > target) lo *= 0.5;
        double a = 0.5 * (lo + hi);
        for (int it = 0; it < 100; ++it) {
            const double g = digamma(a) - std::log(a) - target;
            (g > 0 ? hi : lo) = a;
            const double step = g / (trigamma(a) - 1.0 / a);
            double next = a - step;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - a) < 1e-14 * a) { a = next; break; }
            a = next;
        }
        return {a, mu(1) / a};
    }
};

}  // namespace

FamilyPtr make_family(const std::string& name) {
    if (name == "bernoulli") return std::make_shared<Bernoulli>();
    if (name == "poisson") return std::make_shared<Poisson>();
    if (name == "exponential") return std::make_shared<Exponential>();
    if (name == "gauss-loc") return std::make_shared<GaussLoc>(1.0);
    if (name == "gauss-loc-scale") return std::make_shared<GaussLocScale>();
    if (name == "gamma") return std::make_shared<Gamma>();
    throw domain_error("unknown family: " + name);
}

std::vector<std::string> family_names() {
    return {"bernoulli", "poisson", "exponential", "gauss-loc", "gauss-loc-scale", "gamma"};
}

}  // namespace evar
