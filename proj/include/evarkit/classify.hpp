#pragma once

#include <string>
#include <vector>

#include "evarkit/family.hpp"

namespace evar {

enum class SimplicityVerdict {
    StrictlySimple,
    Simple,
    StrictlyAntiSimple,
    AntiSimple,
    Matching,  // covariance difference vanishes on the whole grid
    Mixed,
};

std::string to_string(SimplicityVerdict v);

struct Classification {
    SimplicityVerdict verdict = SimplicityVerdict::Mixed;
    double min_eigenvalue = 0.0;  // over all grid points
    double max_eigenvalue = 0.0;
    std::vector<MeanVec> grid;
    std::vector<double> point_min_eig;
    std::vector<double> point_max_eig;
    std::string matching_pairs_note;  // "verified" for built-ins, else "assumed"
    double zero_threshold = 0.0;
};

/// Sign classification of Sigma_q^gen(mu) - Sigma_p(mu) over a mu grid, per
/// the covariance criterion for simple / anti-simple testing problems.
/// Eigenvalues within 1e-10 * ||Sigma_p|| count as zero.
Classification classify(const Family& null_family, const Family& gen_family,
                        const std::vector<MeanVec>& mu_grid);

/// Uniform grid helper over a scalar mean window.
std::vector<MeanVec> classify_grid(double lo, double hi, int points = 101);

}  // namespace evar
