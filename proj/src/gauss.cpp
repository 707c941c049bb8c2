#include "evarkit/gauss.hpp"

#include <cmath>

namespace evar {

CovMatrix symmetrized(const CovMatrix& a) {
    if (a.rows() != a.cols())
        throw domain_error("matrix is not square");
    const double scale = a.cwiseAbs().maxCoeff();
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    if (scale > 0 && asym > kSymTol * scale * 100.0)
        throw domain_error("matrix is not symmetric");
    return 0.5 * (a + a.transpose());
}

Eigen::LLT<CovMatrix> spd_cholesky(const CovMatrix& a, const char* what) {
    Eigen::LLT<CovMatrix> llt(symmetrized(a));
    if (llt.info() != Eigen::Success)
        throw domain_error(std::string(what) + " is not symmetric positive definite");
    return llt;
}

double spd_log_det(const CovMatrix& a) {
    auto llt = spd_cholesky(a);
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

bool is_spd(const CovMatrix& a) {
    if (a.rows() != a.cols()) return false;
    Eigen::LLT<CovMatrix> llt(0.5 * (a + a.transpose()));
    return llt.info() == Eigen::Success;
}

double d_gauss(const Eigen::MatrixXd& b) {
    if (b.rows() != b.cols())
        throw domain_error("d_gauss: B must be square");
    const auto d = static_cast<double>(b.rows());
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
    // det from LU; reject singular or negative-determinant inputs
    const Eigen::MatrixXd& u = lu.matrixLU();
    double log_abs_det = 0.0;
    double sign = lu.permutationP().determinant();
    for (int i = 0; i < u.rows(); ++i) {
        const double piv = u(i, i);
        if (piv == 0.0 || !std::isfinite(piv))
            throw domain_error("d_gauss: B is singular");
        sign *= (piv < 0 ? -1.0 : 1.0);
        log_abs_det += std::log(std::abs(piv));
    }
    if (sign <= 0)
        throw domain_error("d_gauss: det(B) is not positive");
    return 0.5 * (-log_abs_det - (d - b.trace()));
}

double d_gauss_pair(const CovMatrix& sigma_q, const CovMatrix& sigma_p) {
    if (sigma_q.rows() != sigma_p.rows())
        throw domain_error("d_gauss_pair: dimension mismatch");
    auto lltp = spd_cholesky(sigma_p, "Sigma_p");
    const double d = static_cast<double>(sigma_q.rows());
    const double tr = lltp.solve(symmetrized(sigma_q)).trace();
    const double log_det = spd_log_det(sigma_q) - spd_log_det(sigma_p);
    return 0.5 * (-log_det - (d - tr));
}

double trace_ratio(const CovMatrix& sigma_a, const CovMatrix& sigma_b) {
    if (sigma_a.rows() != sigma_b.rows() || sigma_a.cols() != sigma_b.cols())
        throw domain_error("trace_ratio: dimension mismatch");
    auto llt = spd_cholesky(sigma_b, "Sigma_b");
    return llt.solve(symmetrized(sigma_a)).trace();
}

double d_triple(const CovMatrix& sigma_r, const CovMatrix& sigma_q,
                const CovMatrix& sigma_p) {
    const double d_rp = trace_ratio(sigma_r, sigma_p);
    const double d_rq = trace_ratio(sigma_r, sigma_q);
    const double log_det = spd_log_det(sigma_q) - spd_log_det(sigma_p);
    return -0.5 * log_det + 0.5 * (d_rp - d_rq);
}

double gaussian_kl(const MeanVec& mu_r, const CovMatrix& sigma_r,
                   const MeanVec& mu_0, const CovMatrix& sigma_p) {
    return gaussian_kl(mu_r, sigma_r, sigma_r, mu_0, sigma_p);
}

double gaussian_kl(const MeanVec& mu_r, const CovMatrix& sigma_r,
                   const CovMatrix& sigma_q, const MeanVec& mu_0,
                   const CovMatrix& sigma_p) {
    if (mu_r.size() != mu_0.size() || mu_r.size() != sigma_p.rows())
        throw domain_error("gaussian_kl: dimension mismatch");
    const MeanVec diff = mu_r - mu_0;
    return d_triple(sigma_r, sigma_q, sigma_p) + 0.5 * spd_quad_form(sigma_p, diff);
}

GaussLaw mle_marginal(const GaussLaw& prior, const CovMatrix& sigma_p, int n) {
    if (n <= 0)
        throw domain_error("mle_marginal: n must be positive");
    if (prior.mean.size() != sigma_p.rows() || prior.cov.rows() != sigma_p.rows())
        throw domain_error("mle_marginal: dimension mismatch");
    spd_cholesky(sigma_p, "Sigma_p");
    CovMatrix cov = symmetrized(prior.cov) + sigma_p / static_cast<double>(n);
    return {prior.mean, std::move(cov)};
}

double spd_quad_form(const CovMatrix& sigma, const MeanVec& x) {
    auto llt = spd_cholesky(sigma);
    return x.dot(llt.solve(x));
}

double gauss_log_density(const MeanVec& x, const MeanVec& mu, const CovMatrix& sigma) {
    static const double kLog2Pi = std::log(2.0 * M_PI);
    const double d = static_cast<double>(x.size());
    auto llt = spd_cholesky(sigma, "Sigma");
    const MeanVec diff = x - mu;
    const double quad = diff.dot(llt.solve(diff));
    const double log_det =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * (d * kLog2Pi + log_det + quad);
}

}  // namespace evar
