#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>

// Exact multivariate-Gaussian KL calculus: the scalar quantities behind the
// closed-form e-power identities (D_gauss, trace ratios, the triple
// divergence, Bayes marginals of the sample mean).

namespace evar {

using MeanVec = Eigen::VectorXd;
using CovMatrix = Eigen::MatrixXd;

struct domain_error : std::runtime_error {
    explicit domain_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Relative tolerance for accepting a matrix as symmetric.
inline constexpr double kSymTol = 1e-12;

/// Symmetrize as (A + A^T)/2 after checking A is symmetric to within
/// kSymTol relative; throws domain_error otherwise.
CovMatrix symmetrized(const CovMatrix& a);

/// Cholesky factor of an SPD matrix (input symmetrized first).
/// Throws domain_error if the matrix is not SPD.
Eigen::LLT<CovMatrix> spd_cholesky(const CovMatrix& a, const char* what = "matrix");

/// log det of an SPD matrix via Cholesky diagonals.
double spd_log_det(const CovMatrix& a);

bool is_spd(const CovMatrix& a);

/// D_gauss(B) = (1/2)(-log det B - (d - tr B)) for invertible B with
/// positive determinant. For B = Sigma_q Sigma_p^{-1} with both SPD this is
/// the KL divergence between equal-mean Gaussians with those covariances.
double d_gauss(const Eigen::MatrixXd& b);

/// d_gauss evaluated at Sigma_q Sigma_p^{-1} through Cholesky factors,
/// avoiding the explicit (possibly ill-conditioned) product.
double d_gauss_pair(const CovMatrix& sigma_q, const CovMatrix& sigma_p);

/// d_ab = tr(Sigma_a Sigma_b^{-1}).
double trace_ratio(const CovMatrix& sigma_a, const CovMatrix& sigma_b);

/// D_{Sigma_r}(Sigma_q || Sigma_p)
///   = d_gauss(Sigma_r Sigma_p^{-1}) - d_gauss(Sigma_r Sigma_q^{-1})
///   = -(1/2) log det(Sigma_q Sigma_p^{-1}) + (d_rp - d_rq)/2.
double d_triple(const CovMatrix& sigma_r, const CovMatrix& sigma_q,
                const CovMatrix& sigma_p);

/// KL divergence D(N(mu_r, Sigma_r) || N(mu_0, Sigma_p)).
double gaussian_kl(const MeanVec& mu_r, const CovMatrix& sigma_r,
                   const MeanVec& mu_0, const CovMatrix& sigma_p);

/// Generalized KL divergence E_R[log q/p_0] for R with mean mu_r and
/// covariance Sigma_r, q = N(mu_r, Sigma_q), p_0 = N(mu_0, Sigma_p):
///   D_{Sigma_r}(Sigma_q||Sigma_p) + (1/2)(mu_r-mu_0)^T Sigma_p^{-1} (mu_r-mu_0).
double gaussian_kl(const MeanVec& mu_r, const CovMatrix& sigma_r,
                   const CovMatrix& sigma_q, const MeanVec& mu_0,
                   const CovMatrix& sigma_p);

struct GaussLaw {
    MeanVec mean;
    CovMatrix cov;
};

/// Law of the sample mean of n draws under the Bayes marginal with Gaussian
/// prior W = (mean, cov): N(mean, cov + Sigma_p/n). The prior covariance may
/// be degenerate (PSD), Sigma_p must be SPD.
GaussLaw mle_marginal(const GaussLaw& prior, const CovMatrix& sigma_p, int n);

/// log N(x; mu, Sigma), Sigma SPD.
double gauss_log_density(const MeanVec& x, const MeanVec& mu, const CovMatrix& sigma);

/// Quadratic form x^T Sigma^{-1} x via Cholesky solve.
double spd_quad_form(const CovMatrix& sigma, const MeanVec& x);

}  // namespace evar
