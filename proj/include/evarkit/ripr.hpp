#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "evarkit/family.hpp"
#include "evarkit/zlaw.hpp"

namespace evar {

/// Finite-support prior {(mu_k, w_k)} on the mean-value parameter space.
struct DiscretePrior {
    std::vector<MeanVec> atoms;
    std::vector<double> weights;

    void validate() const;
    std::size_t size() const { return atoms.size(); }
};

/// Convergence certificate of the mixture-KL minimization: the achieved KL
/// upper-bounds the optimum, achieved - gap lower-bounds it.
struct RiprCertificate {
    double kl = 0.0;
    double gap = 0.0;
    int iterations = 0;
    double tol = 0.0;
    bool converged = false;
    /// Largest single-step objective increase ever accepted (certificate-
    /// driven refinements may trade <= ~1e-14 of objective for gap).
    double max_objective_increase = 0.0;
};

struct SolverOptions {
    double tol = 1e-8;
    int max_iter = 10000;
    int em_every = 5;         // SQUAREM polish period; Newton polish each 5th polish
    double prune_below = 1e-12;
};

struct MixtureSolution {
    Eigen::VectorXd weights;  // over the atom grid, pruned entries zeroed
    RiprCertificate cert;
};

/// Minimize KL(target || sum_k w_k component_k) over the weight simplex by
/// vanilla Frank-Wolfe with exact ternary line search and periodic EM
/// sweeps. Rows of comp_log_mass are the component log-masses over the shared
/// support; target_log_mass must be normalized. The FW duality gap equals
/// max_k E_target[c_k/m_w] - 1 and certifies suboptimality.
MixtureSolution solve_mixture_kl(const Eigen::VectorXd& target_log_mass,
                                 const Eigen::MatrixXd& comp_log_mass,
                                 const SolverOptions& opts = {});

/// KL(target || mixture) for an explicit weight vector (log-space stable;
/// +inf when the mixture misses target support).
double kl_to_mixture(const Eigen::VectorXd& target_log_mass,
                     const Eigen::MatrixXd& comp_log_mass,
                     const Eigen::VectorXd& weights);

/// A Z-law RIPr problem: target law plus one component law per atom of the
/// mu-grid, discretized onto a shared support.
struct ZRiprProblem {
    Eigen::VectorXd target_log_mass;
    Eigen::MatrixXd comp_log_mass;
    std::vector<MeanVec> atom_grid;
    // support bookkeeping for re-evaluation at data points
    bool lattice = true;
    double offset = 0.0, step = 1.0;
    std::vector<double> grid;  // continuous case: node positions
};

struct ZRiprResult {
    DiscretePrior prior;
    RiprCertificate cert;
    Eigen::VectorXd full_weights;  // aligned with the problem's atom grid
};

/// Discretize a target law and a mu -> ZLaw component map onto a shared
/// support and solve. Lattice laws use their exact pmfs; continuous laws are
/// binned by trapezoid mass on `quad_grid` (required in that case).
ZRiprProblem make_z_ripr_problem(const ZLaw& target,
                                 const std::function<ZLaw(const MeanVec&)>& component_map,
                                 const std::vector<MeanVec>& mu_grid,
                                 const std::vector<double>& quad_grid = {});

ZRiprResult solve_ripr_z(const ZLaw& target,
                         const std::function<ZLaw(const MeanVec&)>& component_map,
                         const std::vector<MeanVec>& mu_grid,
                         const SolverOptions& opts = {},
                         const std::vector<double>& quad_grid = {});

/// Single-outcome (local, in time) RIPr: identical solver on n = 1 laws.
ZRiprResult local_ripr(const ZLaw& q_law,
                       const std::function<ZLaw(const MeanVec&)>& component_map,
                       const std::vector<MeanVec>& mu_grid,
                       const SolverOptions& opts = {},
                       const std::vector<double>& quad_grid = {});

/// Uniform scalar atom grid over [lo, hi].
std::vector<MeanVec> linear_atom_grid(double lo, double hi, int count);

}  // namespace evar
