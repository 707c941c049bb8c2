#include "evarkit/classify.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace evar {

std::string to_string(SimplicityVerdict v) {
    switch (v) {
        case SimplicityVerdict::StrictlySimple: return "strictly simple";
        case SimplicityVerdict::Simple: return "simple";
        case SimplicityVerdict::StrictlyAntiSimple: return "strictly anti-simple";
        case SimplicityVerdict::AntiSimple: return "anti-simple";
        case SimplicityVerdict::Matching: return "matching (simple and anti-simple)";
        case SimplicityVerdict::Mixed: return "mixed";
    }
    return "?";
}

Classification classify(const Family& null_family, const Family& gen_family,
                        const std::vector<MeanVec>& mu_grid) {
    if (mu_grid.empty()) throw domain_error("classify: empty grid");
    if (null_family.dim() != gen_family.dim())
        throw domain_error("classify: families do not share a sufficient statistic");

    Classification out;
    out.grid = mu_grid;
    bool all_nsd = true, all_psd = true, all_nd = true, all_pd = true, all_zero = true;
    double global_min = std::numeric_limits<double>::infinity();
    double global_max = -std::numeric_limits<double>::infinity();
    double threshold = 0.0;

    for (const MeanVec& mu : mu_grid) {
        if (!null_family.in_mean_space(mu) || !gen_family.in_mean_space(mu))
            throw domain_error("classify: grid point outside a mean space");
        const CovMatrix diff =
            symmetrized(gen_family.cov(mu)) - symmetrized(null_family.cov(mu));
        const double tau =
            1e-10 * std::max(null_family.cov(mu).cwiseAbs().maxCoeff(), 1e-30);
        threshold = std::max(threshold, tau);
        Eigen::SelfAdjointEigenSolver<CovMatrix> eig(diff, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        out.point_min_eig.push_back(lo);
        out.point_max_eig.push_back(hi);
        global_min = std::min(global_min, lo);
        global_max = std::max(global_max, hi);
        all_nsd &= hi <= tau;
        all_nd &= hi < -tau;
        all_psd &= lo >= -tau;
        all_pd &= lo > tau;
        all_zero &= std::abs(lo) <= tau && std::abs(hi) <= tau;
    }

    out.min_eigenvalue = global_min;
    out.max_eigenvalue = global_max;
    out.zero_threshold = threshold;
    if (all_zero) out.verdict = SimplicityVerdict::Matching;
    else if (all_nd) out.verdict = SimplicityVerdict::StrictlySimple;
    else if (all_nsd) out.verdict = SimplicityVerdict::Simple;
    else if (all_pd) out.verdict = SimplicityVerdict::StrictlyAntiSimple;
    else if (all_psd) out.verdict = SimplicityVerdict::AntiSimple;
    else out.verdict = SimplicityVerdict::Mixed;

    const std::string gen = gen_family.name();
    const bool builtin = gen.find("-2sample-gen") != std::string::npos;
    out.matching_pairs_note =
        builtin ? "verified (built-in two-sample construction)" : "assumed";
    return out;
}

std::vector<MeanVec> classify_grid(double lo, double hi, int points) {
    std::vector<MeanVec> grid;
    grid.reserve(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        MeanVec mu(1);
        mu(0) = points == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (points - 1);
        grid.push_back(mu);
    }
    return grid;
}

}  // namespace evar
