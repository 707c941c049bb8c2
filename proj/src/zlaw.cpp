#include "evarkit/zlaw.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace evar {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// 16-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 8> kGlNodes = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
constexpr std::array<double, 8> kGlWeights = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};
}  // namespace

double logsumexp2(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

double logsumexp(const std::vector<double>& v) {
    double m = kNegInf;
    for (double x : v) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

PchipCurve::PchipCurve(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
        throw domain_error("PchipCurve: need two or more nodes");
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        if (h[i] <= 0) throw domain_error("PchipCurve: grid must be increasing");
        delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    slope_.assign(n, 0.0);
    slope_[0] = delta[0];
    slope_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0) {
            slope_[i] = 0.0;  // local extremum: flat tangent, no overshoot
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            slope_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
}

double PchipCurve::operator()(double x) const {
    if (x < x_.front() || x > x_.back()) return kNegInf;
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = (it == x_.begin()) ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    if (i >= x_.size() - 1) i = x_.size() - 2;
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * y_[i] + h10 * h * slope_[i] + h01 * y_[i + 1] + h11 * h * slope_[i + 1];
}

ZLaw ZLaw::lattice(double offset, double step, std::vector<double> log_mass) {
    ZLaw law;
    law.lattice_ = true;
    law.offset_ = offset;
    law.step_ = step;
    law.log_mass_ = std::move(log_mass);
    return law;
}

ZLaw ZLaw::continuous_fn(double lo, double hi, std::function<double(double)> log_pdf) {
    ZLaw law;
    law.lattice_ = false;
    law.lo_ = lo;
    law.hi_ = hi;
    law.log_pdf_ = std::move(log_pdf);
    return law;
}

ZLaw ZLaw::continuous_table(std::shared_ptr<const PchipCurve> curve) {
    ZLaw law;
    law.lattice_ = false;
    law.lo_ = curve->lo();
    law.hi_ = curve->hi();
    law.hard_bounds_ = true;
    law.log_pdf_ = [curve](double z) { return (*curve)(z); };
    return law;
}

double ZLaw::log_density(double z) const {
    if (lattice_) {
        const double idx = (z - offset_) / step_;
        const long k = std::lround(idx);
        if (std::abs(idx - static_cast<double>(k)) > 1e-6)
            throw domain_error("ZLaw: z is off the lattice");
        if (k < 0 || k >= static_cast<long>(log_mass_.size()))
            throw domain_error("ZLaw: z outside the computed support grid");
        return log_mass_[static_cast<std::size_t>(k)];
    }
    if (z < lo_ || z > hi_) {
        if (hard_bounds_)
            throw domain_error("ZLaw: z outside the computed support grid");
    }
    return log_pdf_(z);
}

double ZLaw::total_mass(int quad_points) const {
    if (lattice_) {
        double m = kNegInf;
        for (double lm : log_mass_) m = logsumexp2(m, lm);
        return std::exp(m);
    }
    const double h = (hi_ - lo_) / (quad_points - 1);
    double acc = 0.0;
    for (int i = 0; i < quad_points; ++i) {
        const double w = (i == 0 || i == quad_points - 1) ? 0.5 : 1.0;
        acc += w * std::exp(log_pdf_(lo_ + i * h));
    }
    return acc * h;
}

ZLaw convolve_lattice(const ZLaw& a, const ZLaw& b) {
    if (!a.is_lattice() || !b.is_lattice() || a.step() != b.step())
        throw domain_error("convolve_lattice: incompatible lattices");
    const auto& la = a.log_mass();
    const auto& lb = b.log_mass();
    std::vector<double> out(la.size() + lb.size() - 1, kNegInf);
    for (std::size_t i = 0; i < la.size(); ++i) {
        if (la[i] == kNegInf) continue;
        for (std::size_t j = 0; j < lb.size(); ++j)
            out[i + j] = logsumexp2(out[i + j], la[i] + lb[j]);
    }
    return ZLaw::lattice(a.offset() + b.offset(), a.step(), std::move(out));
}

double log_choose(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double log_binom_pmf(int n, double p, int k) {
    if (k < 0 || k > n) return kNegInf;
    double acc = log_choose(n, k);
    if (k > 0) acc += k * std::log(p);
    if (k < n) acc += (n - k) * std::log1p(-p);
    return acc;
}

double log_poisson_pmf(double lambda, int k) {
    if (k < 0) return kNegInf;
    return k * std::log(lambda) - lambda - std::lgamma(k + 1.0);
}

double log_gamma_pdf(double shape, double scale, double x) {
    if (x <= 0.0) return kNegInf;
    return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) -
           shape * std::log(scale);
}

double log_normal_pdf(double mean, double var, double x) {
    const double z = x - mean;
    return -0.5 * (std::log(2.0 * M_PI * var) + z * z / var);
}

namespace {

// One Gauss-Legendre panel of the log integrand, accumulated in log space.
double log_gl_panel(double a, double b, const std::function<double(double)>& logf) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double best = kNegInf;
    std::array<double, 16> vals{};
    std::array<double, 16> wts{};
    for (int i = 0; i < 8; ++i) {
        vals[2 * i] = logf(c - h * kGlNodes[i]);
        vals[2 * i + 1] = logf(c + h * kGlNodes[i]);
        wts[2 * i] = wts[2 * i + 1] = kGlWeights[i] * h;
        best = std::max({best, vals[2 * i], vals[2 * i + 1]});
    }
    if (best == kNegInf) return kNegInf;
    double s = 0.0;
    for (int i = 0; i < 16; ++i) s += wts[i] * std::exp(vals[i] - best);
    return best + std::log(s);
}

}  // namespace

double log_gamma_sum_pdf(double shape_a, double scale_a, double shape_b,
                         double scale_b, double z) {
    if (z <= 0.0) return kNegInf;
    if (std::abs(scale_a - scale_b) < 1e-12 * (scale_a + scale_b))
        return log_gamma_pdf(shape_a + shape_b, 0.5 * (scale_a + scale_b), z);
    if (shape_a == 1.0 && shape_b == 1.0) {
        // two exponentials: (e^{-z/sa} - e^{-z/sb})/(sa - sb) for sa > sb
        const double sa = std::max(scale_a, scale_b), sb = std::min(scale_a, scale_b);
        return -z / sa + std::log1p(-std::exp(-z * (1.0 / sb - 1.0 / sa))) -
               std::log(sa - sb);
    }
    auto logf = [&](double s) {
        if (s <= 0.0 || s >= z) return kNegInf;
        return log_gamma_pdf(shape_a, scale_a, s) + log_gamma_pdf(shape_b, scale_b, z - s);
    };
    // Integrand is log-concave for shapes > 1; find the interior mode.
    double s_lo = 0.0, s_hi = z;
    if (shape_a > 1.0 && shape_b > 1.0) {
        const double c = 1.0 / scale_b - 1.0 / scale_a;
        const double ka = shape_a - 1.0, kb = shape_b - 1.0;
        // stationarity: ka/s - 1/scale_a - kb/(z-s) + 1/scale_b = 0, i.e.
        // c s^2 + (ka + kb - c z) s - ka z = 0
        const double qa = c, qb = ka + kb - c * z, qc = -ka * z;
        double mode;
        if (std::abs(qa) * z < 1e-12 * std::abs(qb)) {
            mode = -qc / qb;
        } else {
            const double disc = std::sqrt(std::max(0.0, qb * qb - 4 * qa * qc));
            const double r1 = (-qb + disc) / (2 * qa), r2 = (-qb - disc) / (2 * qa);
            mode = (r1 > 0 && r1 < z) ? r1 : r2;
        }
        if (mode > 0 && mode < z) {
            const double curv = ka / (mode * mode) + kb / ((z - mode) * (z - mode));
            const double sigma = 1.0 / std::sqrt(curv);
            s_lo = std::max(0.0, mode - 12.0 * sigma);
            s_hi = std::min(z, mode + 12.0 * sigma);
        }
    }
    const int panels = 8;
    double acc = kNegInf;
    for (int p = 0; p < panels; ++p) {
        const double a = s_lo + (s_hi - s_lo) * p / panels;
        const double b = s_lo + (s_hi - s_lo) * (p + 1) / panels;
        acc = logsumexp2(acc, log_gl_panel(a, b, logf));
    }
    return acc;
}

}  // namespace evar
