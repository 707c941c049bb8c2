#include "evarkit/family.hpp"

namespace evar {

double Family::kl_generic(const MeanVec& mu1, const MeanVec& mu0) const {
    if (!in_mean_space(mu1) || !in_mean_space(mu0))
        throw domain_error(name() + ": KL requires interior mean parameters");
    const Eigen::VectorXd b1 = mean_to_canonical(mu1);
    const Eigen::VectorXd b0 = mean_to_canonical(mu0);
    return (b1 - b0).dot(mu1) - log_partition(b1) + log_partition(b0);
}

double Family::kl_extended(const ExtendedMean& mu_hat, const MeanVec& mu0) const {
    if (!in_mean_closure(mu_hat.value))
        throw domain_error(name() + ": mean outside the closure of the support hull");
    if (!mu_hat.interior)
        throw domain_error(name() + ": no boundary extension registered");
    return kl(mu_hat.value, mu0);
}

ExtendedMean Family::classify_mean(const MeanVec& mu_bar) const {
    return ExtendedMean{mu_bar, in_mean_space(mu_bar)};
}

ObsSeq sample_iid(const Family& f, const MeanVec& mu, int n, std::uint64_t seed) {
    if (!f.in_mean_space(mu))
        throw domain_error(f.name() + ": sampling mean must be interior");
    std::mt19937_64 rng(seed);
    ObsSeq out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(f.sample(mu, rng));
    return out;
}

ExtendedMean mle(const Family& f, const ObsSeq& data) {
    if (data.empty())
        throw domain_error("mle: empty sequence");
    MeanVec sum = MeanVec::Zero(f.dim());
    for (const Obs& u : data) sum += f.suffstat(u);
    return f.classify_mean(sum / static_cast<double>(data.size()));
}

std::vector<MeanVec> prequential(const Family& f, const MeanVec& x0, double n0,
                                 const ObsSeq& data) {
    if (n0 <= 0.0)
        throw domain_error("prequential: n0 must be positive");
    if (!f.in_mean_space(x0))
        throw domain_error("prequential: x0 must be interior");
    std::vector<MeanVec> path;
    path.reserve(data.size() + 1);
    MeanVec acc = n0 * x0;
    path.push_back(x0);
    double weight = n0;
    for (const Obs& u : data) {
        acc += f.suffstat(u);
        weight += 1.0;
        path.push_back(acc / weight);
    }
    return path;
}

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index) {
    // splitmix64 over the pair; stable across platforms and thread counts
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace evar
