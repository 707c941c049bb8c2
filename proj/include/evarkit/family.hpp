#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "evarkit/gauss.hpp"

namespace evar {

using Obs = Eigen::VectorXd;
using ObsSeq = std::vector<Obs>;

enum class ObsKind { Lattice, Continuous };

/// Sample mean of the sufficient statistic, with a flag telling whether it
/// lies in the open mean-value space. Boundary values are only accepted by
/// the boundary-extended operations.
struct ExtendedMean {
    MeanVec value;
    bool interior = true;
};

/// A regular exponential family in mean-value parameterization. The mean
/// space is open and convex; the canonical parameterization is internal.
class Family {
  public:
    virtual ~Family() = default;

    virtual std::string name() const = 0;
    /// Dimension of the sufficient statistic (= of the mean-value parameter).
    virtual int dim() const = 0;
    /// Dimension of a raw observation U (may differ from dim()).
    virtual int obs_dim() const { return dim(); }
    virtual ObsKind obs_kind() const = 0;

    virtual MeanVec suffstat(const Obs& u) const = 0;
    /// log p_mu(u) relative to the family's fixed dominating measure
    /// (counting measure for lattice families, Lebesgue otherwise).
    virtual double log_density(const MeanVec& mu, const Obs& u) const = 0;
    virtual bool in_mean_space(const MeanVec& mu) const = 0;

    virtual Eigen::VectorXd mean_to_canonical(const MeanVec& mu) const = 0;
    virtual MeanVec canonical_to_mean(const Eigen::VectorXd& beta) const = 0;
    /// log Z relative to the same carrier as mean_to_canonical, so that
    /// log p_mu(u) = beta(mu).t(u) - logZ(beta(mu)) + log carrier(u).
    virtual double log_partition(const Eigen::VectorXd& beta) const = 0;

    virtual CovMatrix cov(const MeanVec& mu) const = 0;
    virtual Obs sample(const MeanVec& mu, std::mt19937_64& rng) const = 0;

    /// Closed-form KL divergence D(P_mu1 || P_mu0); falls back to the
    /// canonical-parameter identity when no closed form is registered.
    virtual double kl(const MeanVec& mu1, const MeanVec& mu0) const {
        return kl_generic(mu1, mu0);
    }

    /// Generic KL through the canonical parameterization:
    ///   (beta1 - beta0)^T mu1 - logZ(beta1) + logZ(beta0).
    double kl_generic(const MeanVec& mu1, const MeanVec& mu0) const;

    /// KL extended to attainable boundary means via the likelihood-supremum
    /// convention: n D(P_muhat || P_mu0) = log sup_mu p_mu(u^n)/p_mu0(u^n)
    /// for any u^n with sample suffstat mean muhat.
    virtual double kl_extended(const ExtendedMean& mu_hat, const MeanVec& mu0) const;

    /// Whether a sample suffstat mean lies in the closed convex hull of
    /// attainable values (boundary points included).
    virtual bool in_mean_closure(const MeanVec& mu_bar) const = 0;

    ExtendedMean classify_mean(const MeanVec& mu_bar) const;
};

using FamilyPtr = std::shared_ptr<const Family>;

/// Family registry used by the CLI configuration. Known names: "bernoulli",
/// "poisson", "exponential", "gauss-loc", "gauss-loc-scale", "gamma".
FamilyPtr make_family(const std::string& name);
std::vector<std::string> family_names();

/// n i.i.d. draws from P_mu; deterministic given seed.
ObsSeq sample_iid(const Family& f, const MeanVec& mu, int n, std::uint64_t seed);

/// MLE of the mean-value parameter: the sample mean of the sufficient
/// statistic, flagged boundary when it leaves the open mean space.
ExtendedMean mle(const Family& f, const ObsSeq& data);

/// Prequential plug-in path: entry i is (x0*n0 + sum_{j<=i} x_j)/(i+n0)
/// for i = 0..n. Every entry is interior when x0 is.
std::vector<MeanVec> prequential(const Family& f, const MeanVec& x0, double n0,
                                 const ObsSeq& data);

/// Stable replicate seeding: splitmix64 mix of (master, index).
std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index);

}  // namespace evar
