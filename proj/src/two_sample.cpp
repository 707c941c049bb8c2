#include "evarkit/two_sample.hpp"

#include <cmath>
#include <limits>

namespace evar {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

Obs pair_obs(double a, double b) {
    Obs u(2);
    u << a, b;
    return u;
}
}  // namespace

/// Null over pairs: Ya, Yb i.i.d. base members with mean mu/2; t(u) = ya+yb.
class TwoSampleNullFamily final : public Family {
  public:
    explicit TwoSampleNullFamily(const TwoSampleSpec* spec) : spec_(spec) {}

    std::string name() const override { return spec_->base_name() + "-2sample-null"; }
    int dim() const override { return 1; }
    int obs_dim() const override { return 2; }
    ObsKind obs_kind() const override { return spec_->base().obs_kind(); }

    MeanVec suffstat(const Obs& u) const override {
        MeanVec t(1);
        t(0) = u(0) + u(1);
        return t;
    }

    double log_density(const MeanVec& mu, const Obs& u) const override {
        return spec_->log_p(mu(0), u);
    }

    bool in_mean_space(const MeanVec& mu) const override {
        MeanVec half(1);
        half(0) = mu(0) / 2.0;
        return spec_->base().in_mean_space(half);
    }
    bool in_mean_closure(const MeanVec& mu) const override {
        MeanVec half(1);
        half(0) = mu(0) / 2.0;
        return spec_->base().in_mean_closure(half);
    }

    Eigen::VectorXd mean_to_canonical(const MeanVec& mu) const override {
        MeanVec half(1);
        half(0) = mu(0) / 2.0;
        return spec_->base().mean_to_canonical(half);
    }
    MeanVec canonical_to_mean(const Eigen::VectorXd& beta) const override {
        return 2.0 * spec_->base().canonical_to_mean(beta);
    }
    double log_partition(const Eigen::VectorXd& beta) const override {
        return 2.0 * spec_->base().log_partition(beta);
    }

    CovMatrix cov(const MeanVec& mu) const override {
        CovMatrix s(1, 1);
        s(0, 0) = spec_->null_x_variance(mu(0));
        return s;
    }

    Obs sample(const MeanVec& mu, std::mt19937_64& rng) const override {
        MeanVec half(1);
        half(0) = mu(0) / 2.0;
        const Obs ya = spec_->base().sample(half, rng);
        const Obs yb = spec_->base().sample(half, rng);
        return pair_obs(ya(0), yb(0));
    }

    double kl(const MeanVec& mu1, const MeanVec& mu0) const override {
        MeanVec h1(1), h0(1);
        h1(0) = mu1(0) / 2.0;
        h0(0) = mu0(0) / 2.0;
        return 2.0 * spec_->base().kl(h1, h0);
    }

    double kl_extended(const ExtendedMean& mu_hat, const MeanVec& mu0) const override {
        MeanVec h1(1), h0(1);
        h1(0) = mu_hat.value(0) / 2.0;
        h0(0) = mu0(0) / 2.0;
        return 2.0 * spec_->base().kl_extended({h1, mu_hat.interior}, h0);
    }

  private:
    const TwoSampleSpec* spec_;
};

/// Q^gen in the X-mean parameterization; carrier is the anchor member.
class TwoSampleGenFamily final : public Family {
  public:
    explicit TwoSampleGenFamily(const TwoSampleSpec* spec) : spec_(spec) {}

    std::string name() const override { return spec_->base_name() + "-2sample-gen"; }
    int dim() const override { return 1; }
    int obs_dim() const override { return 2; }
    ObsKind obs_kind() const override { return spec_->base().obs_kind(); }

    MeanVec suffstat(const Obs& u) const override {
        MeanVec t(1);
        t(0) = u(0) + u(1);
        return t;
    }

    double log_density(const MeanVec& mu, const Obs& u) const override {
        return spec_->log_q(spec_->curve_from_mean(mu(0)), u);
    }

    bool in_mean_space(const MeanVec& mu) const override {
        const auto [lo, hi] = spec_->mean_range();
        return mu(0) > lo && mu(0) < hi;
    }
    bool in_mean_closure(const MeanVec& mu) const override {
        const auto [lo, hi] = spec_->mean_range();
        return mu(0) >= lo && mu(0) <= hi;
    }

    Eigen::VectorXd mean_to_canonical(const MeanVec& mu) const override {
        MeanVec beta(1);
        const CurvePoint p = spec_->curve_from_mean(mu(0));
        beta(0) = spec_->tilt_of_point(p);
        return beta;
    }
    MeanVec canonical_to_mean(const Eigen::VectorXd& beta) const override {
        MeanVec mu(1);
        mu(0) = spec_->mean_at(beta(0));
        return mu;
    }
    double log_partition(const Eigen::VectorXd& beta) const override {
        return spec_->log_mgf_anchor(beta(0));
    }

    CovMatrix cov(const MeanVec& mu) const override {
        CovMatrix s(1, 1);
        s(0, 0) = spec_->alt_x_variance(spec_->curve_from_mean(mu(0)));
        return s;
    }

    Obs sample(const MeanVec& mu, std::mt19937_64& rng) const override {
        return spec_->sample_q(spec_->curve_from_mean(mu(0)), rng);
    }

    double kl(const MeanVec& mu1, const MeanVec& mu0) const override {
        const CurvePoint p1 = spec_->curve_from_mean(mu1(0));
        const CurvePoint p0 = spec_->curve_from_mean(mu0(0));
        MeanVec a1(1), a0(1), b1(1), b0(1);
        a1(0) = p1.mu_a; a0(0) = p0.mu_a; b1(0) = p1.mu_b; b0(0) = p0.mu_b;
        return spec_->base().kl(a1, a0) + spec_->base().kl(b1, b0);
    }

  private:
    const TwoSampleSpec* spec_;
};

TwoSampleSpec::TwoSampleSpec(std::string base_name, double delta_star)
    : TwoSampleSpec(std::move(base_name), delta_star, CurvePoint{0, 0}) {
    // overwrite the placeholder anchor with the canonical one
    switch (kind_) {
        case BaseKind::Bernoulli: {
            const double m = 1.0 / (1.0 + std::exp(-delta_star_ / 2.0));
            anchor_ = {m, 1.0 - m};
            break;
        }
        case BaseKind::Exponential: {
            if (std::abs(delta_star_) >= 2.0)
                throw domain_error(
                    "exponential two-sample: canonical anchor needs |delta*| < 2; "
                    "pass an explicit anchor");
            anchor_ = {1.0 / (1.0 + delta_star_ / 2.0), 1.0 / (1.0 - delta_star_ / 2.0)};
            break;
        }
        case BaseKind::GaussLoc:
            anchor_ = {delta_star_ / 2.0, -delta_star_ / 2.0};
            break;
        case BaseKind::Poisson:
            anchor_ = {std::exp(delta_star_ / 2.0), std::exp(-delta_star_ / 2.0)};
            break;
    }
}

TwoSampleSpec::TwoSampleSpec(std::string base_name, double delta_star, CurvePoint anchor)
    : base_name_(std::move(base_name)), delta_star_(delta_star), anchor_(anchor) {
    if (base_name_ == "bernoulli") kind_ = BaseKind::Bernoulli;
    else if (base_name_ == "poisson") kind_ = BaseKind::Poisson;
    else if (base_name_ == "exponential") kind_ = BaseKind::Exponential;
    else if (base_name_ == "gauss-loc") kind_ = BaseKind::GaussLoc;
    else throw domain_error("two-sample: unsupported base family " + base_name_);
    base_ = make_family(base_name_);
    null_family_ = std::make_shared<TwoSampleNullFamily>(this);
    gen_family_ = std::make_shared<TwoSampleGenFamily>(this);
}

double TwoSampleSpec::effect_size(CurvePoint p) const {
    switch (kind_) {
        case BaseKind::Bernoulli:
            return std::log(p.mu_a / (1.0 - p.mu_a)) - std::log(p.mu_b / (1.0 - p.mu_b));
        case BaseKind::Exponential:
            return 1.0 / p.mu_a - 1.0 / p.mu_b;
        case BaseKind::GaussLoc:
            return p.mu_a - p.mu_b;
        case BaseKind::Poisson:
            return std::log(p.mu_a / p.mu_b);
    }
    return 0.0;
}

std::pair<double, double> TwoSampleSpec::beta_range() const {
    if (kind_ == BaseKind::Exponential)
        return {-kInf, 1.0 / std::max(anchor_.mu_a, anchor_.mu_b)};
    return {-kInf, kInf};
}

CurvePoint TwoSampleSpec::curve(double beta) const {
    const auto [lo, hi] = beta_range();
    if (!(beta > lo && beta < hi))
        throw domain_error("two-sample: tilt outside the admissible set");
    switch (kind_) {
        case BaseKind::Bernoulli: {
            const double ea = std::exp(beta);
            return {anchor_.mu_a * ea / (1.0 - anchor_.mu_a + anchor_.mu_a * ea),
                    anchor_.mu_b * ea / (1.0 - anchor_.mu_b + anchor_.mu_b * ea)};
        }
        case BaseKind::Exponential:
            return {anchor_.mu_a / (1.0 - anchor_.mu_a * beta),
                    anchor_.mu_b / (1.0 - anchor_.mu_b * beta)};
        case BaseKind::GaussLoc:
            return {anchor_.mu_a + gauss_var_ * beta, anchor_.mu_b + gauss_var_ * beta};
        case BaseKind::Poisson:
            return {anchor_.mu_a * std::exp(beta), anchor_.mu_b * std::exp(beta)};
    }
    return {};
}

double TwoSampleSpec::mean_at(double beta) const {
    const CurvePoint p = curve(beta);
    return p.mu_a + p.mu_b;
}

std::pair<double, double> TwoSampleSpec::mean_range() const {
    switch (kind_) {
        case BaseKind::Bernoulli: return {0.0, 2.0};
        case BaseKind::Exponential: return {0.0, kInf};
        case BaseKind::GaussLoc: return {-kInf, kInf};
        case BaseKind::Poisson: return {0.0, kInf};
    }
    return {};
}

double TwoSampleSpec::tilt_of_point(CurvePoint p) const {
    switch (kind_) {
        case BaseKind::Bernoulli:
            return std::log(p.mu_a / (1.0 - p.mu_a)) -
                   std::log(anchor_.mu_a / (1.0 - anchor_.mu_a));
        case BaseKind::Exponential:
            return 1.0 / anchor_.mu_a - 1.0 / p.mu_a;
        case BaseKind::GaussLoc:
            return (p.mu_a - anchor_.mu_a) / gauss_var_;
        case BaseKind::Poisson:
            return std::log(p.mu_a / anchor_.mu_a);
    }
    return 0.0;
}

double TwoSampleSpec::log_mgf_anchor(double beta) const {
    const auto [lo, hi] = beta_range();
    if (!(beta > lo && beta < hi))
        throw domain_error("two-sample: tilt outside the admissible set");
    switch (kind_) {
        case BaseKind::Bernoulli:
            return std::log1p(anchor_.mu_a * std::expm1(beta)) +
                   std::log1p(anchor_.mu_b * std::expm1(beta));
        case BaseKind::Exponential:
            return -std::log1p(-anchor_.mu_a * beta) - std::log1p(-anchor_.mu_b * beta);
        case BaseKind::GaussLoc:
            return beta * (anchor_.mu_a + anchor_.mu_b) + gauss_var_ * beta * beta;
        case BaseKind::Poisson:
            return (anchor_.mu_a + anchor_.mu_b) * std::expm1(beta);
    }
    return 0.0;
}

CurvePoint TwoSampleSpec::curve_from_mean(double mu) const {
    const auto [mlo, mhi] = mean_range();
    if (!(mu > mlo && mu < mhi))
        throw domain_error("two-sample: X-mean outside the curve's range");
    // expand a bracket in beta, then Newton with derivative Var(X)
    const double bhi = beta_range().second;
    double lo = -1.0;
    double hi = (bhi == kInf) ? 1.0 : 0.5 * bhi;
    double step = 1.0;
    while (mean_at(lo) > mu) {
        lo -= step;
        step *= 2.0;
    }
    while (mean_at(hi) < mu)
        hi = (bhi == kInf) ? hi + (step *= 2.0) : 0.5 * (hi + bhi);
    double beta = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const CurvePoint p = curve(beta);
        const double g = p.mu_a + p.mu_b - mu;
        if (g > 0) hi = beta; else lo = beta;
        const double deriv = alt_x_variance(p);
        double next = beta - g / deriv;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - beta) < 1e-15 * (1.0 + std::abs(beta))) { beta = next; break; }
        beta = next;
    }
    return curve(beta);
}

double TwoSampleSpec::log_q(CurvePoint p, const Obs& u) const {
    MeanVec a(1), b(1), ya(1), yb(1);
    a(0) = p.mu_a; b(0) = p.mu_b; ya(0) = u(0); yb(0) = u(1);
    return base_->log_density(a, ya) + base_->log_density(b, yb);
}

double TwoSampleSpec::log_p(double mu, const Obs& u) const {
    return log_q({mu / 2.0, mu / 2.0}, u);
}

Obs TwoSampleSpec::sample_q(CurvePoint p, std::mt19937_64& rng) const {
    MeanVec a(1), b(1);
    a(0) = p.mu_a; b(0) = p.mu_b;
    const Obs ya = base_->sample(a, rng);
    const Obs yb = base_->sample(b, rng);
    return pair_obs(ya(0), yb(0));
}

double TwoSampleSpec::null_x_variance(double mu) const {
    MeanVec half(1);
    half(0) = mu / 2.0;
    return 2.0 * base_->cov(half)(0, 0);
}

double TwoSampleSpec::alt_x_variance(CurvePoint p) const {
    MeanVec a(1), b(1);
    a(0) = p.mu_a; b(0) = p.mu_b;
    return base_->cov(a)(0, 0) + base_->cov(b)(0, 0);
}

double TwoSampleSpec::kl_q_vs_null(CurvePoint p) const {
    MeanVec a(1), b(1), half(1);
    a(0) = p.mu_a; b(0) = p.mu_b; half(0) = (p.mu_a + p.mu_b) / 2.0;
    return base_->kl(a, half) + base_->kl(b, half);
}

ZLaw TwoSampleSpec::null_z_law(double mu, int n, int min_zmax) const {
    switch (kind_) {
        case BaseKind::Bernoulli: {
            std::vector<double> lm(static_cast<std::size_t>(2 * n) + 1);
            for (int k = 0; k <= 2 * n; ++k) lm[k] = log_binom_pmf(2 * n, mu / 2.0, k);
            return ZLaw::lattice(0.0, 1.0, std::move(lm));
        }
        case BaseKind::Poisson: {
            const double lam = n * mu;
            const int zmax = std::max(
                static_cast<int>(lam + 15.0 * std::sqrt(lam) + 60.0), min_zmax);
            std::vector<double> lm(static_cast<std::size_t>(zmax) + 1);
            for (int k = 0; k <= zmax; ++k) lm[k] = log_poisson_pmf(lam, k);
            return ZLaw::lattice(0.0, 1.0, std::move(lm));
        }
        case BaseKind::Exponential: {
            const double shape = 2.0 * n, scale = mu / 2.0;
            const double mean = shape * scale, sd = std::sqrt(shape) * scale;
            return ZLaw::continuous_fn(0.0, mean + 40.0 * sd + 10.0 * mu,
                                       [shape, scale](double z) {
                                           return log_gamma_pdf(shape, scale, z);
                                       });
        }
        case BaseKind::GaussLoc: {
            const double mean = n * mu, var = 2.0 * n * gauss_var_;
            const double sd = std::sqrt(var);
            return ZLaw::continuous_fn(mean - 40.0 * sd, mean + 40.0 * sd,
                                       [mean, var](double z) {
                                           return log_normal_pdf(mean, var, z);
                                       });
        }
    }
    throw domain_error("two-sample: unsupported base family");
}

ZLaw TwoSampleSpec::alt_z_law(CurvePoint p, int n) const {
    switch (kind_) {
        case BaseKind::Bernoulli: {
            std::vector<double> la(static_cast<std::size_t>(n) + 1);
            std::vector<double> lb(static_cast<std::size_t>(n) + 1);
            for (int k = 0; k <= n; ++k) {
                la[k] = log_binom_pmf(n, p.mu_a, k);
                lb[k] = log_binom_pmf(n, p.mu_b, k);
            }
            return convolve_lattice(ZLaw::lattice(0, 1, std::move(la)),
                                    ZLaw::lattice(0, 1, std::move(lb)));
        }
        case BaseKind::Poisson: {
            const double lam = n * (p.mu_a + p.mu_b);
            const int zmax = static_cast<int>(lam + 15.0 * std::sqrt(lam) + 60.0);
            std::vector<double> lm(static_cast<std::size_t>(zmax) + 1);
            for (int k = 0; k <= zmax; ++k) lm[k] = log_poisson_pmf(lam, k);
            return ZLaw::lattice(0.0, 1.0, std::move(lm));
        }
        case BaseKind::GaussLoc: {
            const double mean = n * (p.mu_a + p.mu_b), var = 2.0 * n * gauss_var_;
            const double sd = std::sqrt(var);
            return ZLaw::continuous_fn(mean - 40.0 * sd, mean + 40.0 * sd,
                                       [mean, var](double z) {
                                           return log_normal_pdf(mean, var, z);
                                       });
        }
        case BaseKind::Exponential: {
            const double ma = p.mu_a, mb = p.mu_b;
            const double mean = n * (ma + mb), sd = std::sqrt(n * (ma * ma + mb * mb));
            const double zhi = mean + 30.0 * sd + 10.0 * (ma + mb);
            if (n == 1)
                return ZLaw::continuous_fn(0.0, zhi, [ma, mb](double z) {
                    return log_gamma_sum_pdf(1.0, ma, 1.0, mb, z);
                });
            // Tabulate on a 4096-point grid: uniform core, log-spaced tails,
            // then renormalize the truncated table.
            const double zlo = std::max(mean * 1e-5, mean - 20.0 * sd);
            double core_lo = std::max(zlo, mean - 6.0 * sd);
            double core_hi = std::min(zhi, mean + 6.0 * sd);
            const bool left = core_lo > 1.5 * zlo;
            const bool right = zhi > 1.2 * core_hi;
            if (!left) core_lo = zlo;
            if (!right) core_hi = zhi;
            std::vector<double> grid;
            grid.reserve(4096);
            const int n_tail = 512;
            const int n_core = 4096 - (left ? n_tail : 0) - (right ? n_tail : 0);
            if (left)
                for (int i = 0; i < n_tail; ++i)
                    grid.push_back(zlo * std::pow(core_lo / zlo, double(i) / n_tail));
            for (int i = 0; i < n_core; ++i)
                grid.push_back(core_lo + (core_hi - core_lo) * double(i) / (n_core - 1));
            if (right)
                for (int i = 1; i <= n_tail; ++i)
                    grid.push_back(core_hi * std::pow(zhi / core_hi, double(i) / n_tail));
            std::vector<double> vals(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i)
                vals[i] = log_gamma_sum_pdf(n, ma, n, mb, grid[i]);
            // normalize the interpolant itself: per-cell Gauss-Legendre over
            // exp(pchip), then shift the table
            PchipCurve raw(grid, vals);
            static const double gl_x[2] = {0.3399810435848563, 0.8611363115940526};
            static const double gl_w[2] = {0.6521451548625461, 0.3478548451374538};
            double total = 0.0;
            for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
                const double c = 0.5 * (grid[i] + grid[i + 1]);
                const double h = 0.5 * (grid[i + 1] - grid[i]);
                for (int g = 0; g < 2; ++g)
                    total += h * gl_w[g] *
                             (std::exp(raw(c - h * gl_x[g])) + std::exp(raw(c + h * gl_x[g])));
            }
            const double log_total = std::log(total);
            for (double& v : vals) v -= log_total;
            return ZLaw::continuous_table(
                std::make_shared<PchipCurve>(std::move(grid), std::move(vals)));
        }
    }
    throw domain_error("two-sample: unsupported base family");
}

double TwoSampleSpec::null_x_log_density(double mu, double x) const {
    switch (kind_) {
        case BaseKind::Bernoulli: {
            const int k = static_cast<int>(std::lround(x));
            return log_binom_pmf(2, mu / 2.0, k);
        }
        case BaseKind::Poisson:
            return log_poisson_pmf(mu, static_cast<int>(std::lround(x)));
        case BaseKind::Exponential:
            return log_gamma_pdf(2.0, mu / 2.0, x);
        case BaseKind::GaussLoc:
            return log_normal_pdf(mu, 2.0 * gauss_var_, x);
    }
    return 0.0;
}

double TwoSampleSpec::alt_x_log_density(CurvePoint p, double x) const {
    switch (kind_) {
        case BaseKind::Bernoulli: {
            const int k = static_cast<int>(std::lround(x));
            if (k == 0) return std::log1p(-p.mu_a) + std::log1p(-p.mu_b);
            if (k == 1)
                return std::log(p.mu_a * (1.0 - p.mu_b) + p.mu_b * (1.0 - p.mu_a));
            if (k == 2) return std::log(p.mu_a) + std::log(p.mu_b);
            return -kInf;
        }
        case BaseKind::Poisson:
            return log_poisson_pmf(p.mu_a + p.mu_b, static_cast<int>(std::lround(x)));
        case BaseKind::Exponential:
            return log_gamma_sum_pdf(1.0, p.mu_a, 1.0, p.mu_b, x);
        case BaseKind::GaussLoc:
            return log_normal_pdf(p.mu_a + p.mu_b, 2.0 * gauss_var_, x);
    }
    return 0.0;
}

CurvePrior TwoSampleSpec::uniform_beta_prior(int atoms, double beta_lo,
                                             double beta_hi) const {
    const auto [lo, hi] = beta_range();
    double a = std::max(beta_lo, lo), b = std::min(beta_hi, hi);
    if (hi != kInf && b >= hi) b = hi - 1e-9 * (hi - a);  // keep atoms interior
    CurvePrior prior;
    prior.beta.resize(atoms);
    prior.point.resize(atoms);
    prior.mean.resize(atoms);
    prior.weight.assign(atoms, 1.0 / atoms);
    for (int i = 0; i < atoms; ++i) {
        const double beta = atoms == 1 ? 0.5 * (a + b) : a + (b - a) * i / (atoms - 1);
        prior.beta[i] = beta;
        prior.point[i] = curve(beta);
        prior.mean[i] = prior.point[i].mu_a + prior.point[i].mu_b;
    }
    return prior;
}

std::vector<Obs> TwoSampleSpec::enumerate_support() const {
    if (kind_ != BaseKind::Bernoulli)
        throw domain_error("enumerate_support: only the bernoulli base is enumerable");
    return {pair_obs(0, 0), pair_obs(0, 1), pair_obs(1, 0), pair_obs(1, 1)};
}

bool TwoSampleSpec::lattice() const {
    return kind_ == BaseKind::Bernoulli || kind_ == BaseKind::Poisson;
}

}  // namespace evar
