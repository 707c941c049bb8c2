#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "evarkit/gauss.hpp"

namespace evar {

/// Monotone-safe cubic interpolation (Fritsch-Carlson slopes) of log-density
/// samples on a strictly increasing grid.
class PchipCurve {
  public:
    PchipCurve(std::vector<double> x, std::vector<double> y);
    double operator()(double x) const;
    double lo() const { return x_.front(); }
    double hi() const { return x_.back(); }
    const std::vector<double>& grid() const { return x_; }
    const std::vector<double>& values() const { return y_; }

  private:
    std::vector<double> x_, y_, slope_;
};

/// Law of the running sufficient-statistic sum Z (scalar), either a lattice
/// pmf or a continuous density. Continuous laws are analytic closures or
/// tabulated curves; log_density is -inf off the support.
class ZLaw {
  public:
    static ZLaw lattice(double offset, double step, std::vector<double> log_mass);
    static ZLaw continuous_fn(double lo, double hi, std::function<double(double)> log_pdf);
    static ZLaw continuous_table(std::shared_ptr<const PchipCurve> curve);

    bool is_lattice() const { return lattice_; }
    double log_density(double z) const;

    double offset() const { return offset_; }
    double step() const { return step_; }
    const std::vector<double>& log_mass() const { return log_mass_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    bool hard_bounds() const { return hard_bounds_; }

    /// Total mass: exact sum for lattice laws, trapezoid integral on a fine
    /// grid for continuous laws (test support).
    double total_mass(int quad_points = 20001) const;

  private:
    bool lattice_ = true;
    double offset_ = 0.0, step_ = 1.0;
    std::vector<double> log_mass_;
    double lo_ = 0.0, hi_ = 0.0;
    bool hard_bounds_ = false;  // tables are truncated; analytic laws are not
    std::function<double(double)> log_pdf_;
};

/// Log-space convolution of two lattice laws on commensurate grids.
ZLaw convolve_lattice(const ZLaw& a, const ZLaw& b);

double logsumexp(const std::vector<double>& v);
double logsumexp2(double a, double b);

/// log C(n, k) via lgamma.
double log_choose(double n, double k);
/// log Binomial(n, p) pmf at k.
double log_binom_pmf(int n, double p, int k);
/// log Poisson(lambda) pmf at k.
double log_poisson_pmf(double lambda, int k);
/// log Gamma(shape, scale) density at x.
double log_gamma_pdf(double shape, double scale, double x);
/// log N(mean, var) density at x.
double log_normal_pdf(double mean, double var, double x);

/// Density of Gamma(shape_a, scale_a) + Gamma(shape_b, scale_b) at z, by
/// mode-centered Gauss-Legendre quadrature of the convolution integral
/// (closed forms for the degenerate cases).
double log_gamma_sum_pdf(double shape_a, double scale_a, double shape_b,
                         double scale_b, double z);

}  // namespace evar
