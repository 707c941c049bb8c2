#pragma once

#include <optional>
#include <utility>

#include "evarkit/family.hpp"
#include "evarkit/zlaw.hpp"

namespace evar {

struct CurvePoint {
    double mu_a;
    double mu_b;
};

/// Discretized prior over the generated-alternative curve: tilt values beta,
/// member parameters, their X-means and weights.
struct CurvePrior {
    std::vector<double> beta;
    std::vector<CurvePoint> point;
    std::vector<double> mean;
    std::vector<double> weight;
    std::size_t size() const { return beta.size(); }
};

/// Two-sample testing structure over a 1-d base family: U = (Ya, Yb),
/// X = Ya + Yb. The null has Ya, Yb i.i.d. with common mean mu/2; the
/// alternatives are product members Q_{mu_a, mu_b}, organized into the
/// constant-effect-size curve generated by tilting the anchor with e^{beta X}.
class TwoSampleSpec {
  public:
    /// Canonical anchor for the effect size (component canonical parameters
    /// placed symmetrically around the null's).
    TwoSampleSpec(std::string base_name, double delta_star);
    TwoSampleSpec(std::string base_name, double delta_star, CurvePoint anchor);

    // the null/gen family objects point back at this spec
    TwoSampleSpec(const TwoSampleSpec&) = delete;
    TwoSampleSpec& operator=(const TwoSampleSpec&) = delete;

    const std::string& base_name() const { return base_name_; }
    const Family& base() const { return *base_; }
    double delta_star() const { return delta_star_; }
    CurvePoint anchor() const { return anchor_; }

    /// Effect size functional delta(mu_a, mu_b) of the base family.
    double effect_size(CurvePoint p) const;

    /// Point of the generated curve at tilt beta; throws outside the
    /// admissible tilt set.
    CurvePoint curve(double beta) const;
    /// Admissible tilt interval (open; +-inf where unconstrained).
    std::pair<double, double> beta_range() const;
    /// X-mean mu_a'(beta) + mu_b'(beta); strictly increasing in beta.
    double mean_at(double beta) const;
    CurvePoint curve_from_mean(double mu) const;
    std::pair<double, double> mean_range() const;

    /// Null family over pairs in the X-mean parameterization (d = 1).
    FamilyPtr null_family() const { return null_family_; }
    /// Generated alternative Q^gen in the X-mean parameterization (d = 1).
    FamilyPtr gen_family() const { return gen_family_; }

    double log_q(CurvePoint p, const Obs& u) const;
    double log_p(double mu, const Obs& u) const;
    Obs sample_q(CurvePoint p, std::mt19937_64& rng) const;

    /// Law of Z = sum_{i<=n} X_i under the null member with X-mean mu. For
    /// unbounded lattice laws, min_zmax extends the computed support so
    /// mixture components can dominate a wider target.
    ZLaw null_z_law(double mu, int n, int min_zmax = -1) const;
    /// Law of Z under the product alternative Q_{mu_a, mu_b}.
    ZLaw alt_z_law(CurvePoint p, int n) const;

    /// Single-outcome X-law log densities (closed forms).
    double null_x_log_density(double mu, double x) const;
    double alt_x_log_density(CurvePoint p, double x) const;

    /// D(Q_{mu_a,mu_b} || P_{mu_a+mu_b}) per observation.
    double kl_q_vs_null(CurvePoint p) const;

    /// Covariance of X under Q_{mu_a,mu_b} (scalar, d = 1).
    double alt_x_variance(CurvePoint p) const;
    double null_x_variance(double mu) const;

    /// Tilt parameter of a curve point relative to the anchor carrier.
    double tilt_of_point(CurvePoint p) const;
    /// log E_anchor[e^{beta X}]: the generated family's log partition.
    double log_mgf_anchor(double beta) const;

    /// beta drawn uniformly over [beta_lo, beta_hi] intersected with the
    /// admissible set, discretized at `atoms` points with equal weights.
    CurvePrior uniform_beta_prior(int atoms, double beta_lo = -10.0,
                                  double beta_hi = 10.0) const;

    /// All possible observations (lattice bases only; bernoulli: 4 pairs).
    std::vector<Obs> enumerate_support() const;
    bool lattice() const;

  private:
    enum class BaseKind { Bernoulli, Poisson, Exponential, GaussLoc };
    BaseKind kind_;
    std::string base_name_;
    FamilyPtr base_;
    double delta_star_ = 0.0;
    CurvePoint anchor_{};
    double gauss_var_ = 1.0;  // component variance for the gauss-loc base
    FamilyPtr null_family_;
    FamilyPtr gen_family_;

    friend class TwoSampleNullFamily;
    friend class TwoSampleGenFamily;
};

}  // namespace evar
