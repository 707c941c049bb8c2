#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evarkit/evariables.hpp"

namespace evar {

/// Monte-Carlo experiment: one problem, a set of e-statistics, an n grid,
/// seeded replicates. Replicate k draws its data once with a stream seeded
/// by a stable hash of (seed, k); every kind is evaluated on prefixes.
struct SimPlan {
    std::shared_ptr<TestingProblem> problem;
    std::vector<EVarSpec> evars;
    std::vector<int> n_grid;
    int replicates = 2000;
    std::uint64_t seed = 1;
    int threads = 0;  // 0: EVARKIT_THREADS env or hardware concurrency
};

struct CurveRow {
    EVarKind kind;
    int n = 0;
    double mean_log_s = 0.0;
    double se = 0.0;
    double regret = 0.0;  // n * D(Q_mu* || P_mu*) - mean
    std::optional<double> predicted;
    std::optional<double> gap;  // RIPr duality gap backing this row
};

struct EPowerCurve {
    std::vector<CurveRow> rows;
    double per_obs_kl = 0.0;
};

EPowerCurve monte_carlo(const SimPlan& plan);

int resolve_thread_count(int requested);

/// Exact alignment/sequence terms of the Gaussian composite-case identities.
double o_a_alignment(int n, double n0, const MeanVec& mu_star, const MeanVec& x0,
                     const CovMatrix& sigma_q);
double o_b_sequence(int n, double n0);
double o_c_alignment(const MeanVec& mu_star, const MeanVec& mu1, const CovMatrix& pi1,
                     const CovMatrix& sigma, int n);

struct PredictedEPower {
    double value = 0.0;
    bool exact = true;  // false: leading-order prediction, o(1) bracket
};

/// Tagged scalar closed forms used by the CLI `predict` subcommand. Cases
/// needing full covariance inputs go through the problem objects instead.
PredictedEPower predicted_epower(const std::string& case_tag, int n, double big_d,
                                 double d_rp = 0.0, double d_rq = 0.0, int d = 1);

/// Exhaustive E_P[S] over all length-n outcome sequences (lattice two-sample
/// bases with finite support; n small).
double brute_validity(TwoSampleProblem& problem, const EVarSpec& spec, double null_mu,
                      int n);

struct EprocessReport {
    bool conclusive = false;
    double expect_forward = 0.0;   // E_{P_{W_{n+1}}}[ q(U^n)/p_{W_n}(U^n) ]
    double expect_backward = 0.0;  // E_{P_{W_n}}[ q(U^n)/p_{W_{n+1}}(U^n) ]
    std::string detail;
};

/// Gaussian anti-simple scalar case: exact RIPr priors W_n transported to a
/// discretized exhaustive (tensor quadrature) check of the two
/// cross-expectations whose dichotomy certifies "not an e-process".
EprocessReport eprocess_gaussian(double mu_star, double var_q, double var_p, int n,
                                 int quad_points = 1501);

/// Same check with solver priors over a lattice two-sample problem. With
/// simple_q the target is the fixed anchor alternative, as in the settings
/// where the projection is n-independent and the check must come back
/// inconclusive.
EprocessReport eprocess_two_sample(TwoSampleProblem& problem, int n,
                                   bool simple_q = false);

}  // namespace evar
