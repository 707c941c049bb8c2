#include <Eigen/Eigenvalues>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "evarkit/classify.hpp"
#include "evarkit/report.hpp"

namespace fs = std::filesystem;
using namespace evar;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    long seed = -1;
    int reps = -1;
    int n_max = -1;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required = true) {
    auto* opt = cmd->add_option("--config", flags.config_path, "run configuration file");
    if (config_required) opt->required();
    cmd->add_option("--seed", flags.seed, "override sim.seed");
    cmd->add_option("--reps", flags.reps, "override sim.replicates");
    cmd->add_option("--out-dir", flags.out_dir, "override out.dir");
    cmd->add_option("--n-max", flags.n_max, "override sim.n_max");
}

RunConfig load_config(const CommonFlags& flags, const std::string& kind) {
    RunConfig cfg =
        flags.config_path.empty() ? RunConfig{} : RunConfig::from_file(flags.config_path);
    if (cfg.kind.empty()) cfg.kind = kind;
    if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);
    if (flags.reps > 0) cfg.replicates = flags.reps;
    if (flags.n_max > 0) {
        cfg.n_max = flags.n_max;
        if (!cfg.n_grid.empty()) {
            while (!cfg.n_grid.empty() && cfg.n_grid.back() > flags.n_max)
                cfg.n_grid.pop_back();
            if (cfg.n_grid.empty() || cfg.n_grid.back() != flags.n_max)
                cfg.n_grid.push_back(flags.n_max);
        }
    }
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    if (cfg.kind != kind)
        throw domain_error("config experiment kind '" + cfg.kind +
                           "' does not match subcommand '" + kind + "'");
    return cfg;
}

void require_valid(const RunConfig& cfg) {
    auto issues = validate_config(cfg);
    // warnings do not block a run
    std::vector<std::string> errors;
    for (auto& issue : issues) {
        if (issue.rfind("warning:", 0) == 0) std::cerr << issue << "\n";
        else errors.push_back(issue);
    }
    if (!errors.empty()) {
        std::string all;
        for (const auto& e : errors) all += (all.empty() ? "" : "; ") + e;
        throw domain_error("invalid configuration: " + all);
    }
}

fs::path ensure_out_dir(const RunConfig& cfg) {
    fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    return dir;
}

int run_simulate(const CommonFlags& flags) {
    RunConfig cfg = load_config(flags, "simulate");
    require_valid(cfg);
    SimPlan plan;
    plan.problem = make_problem(cfg);
    plan.evars = make_evar_specs(cfg);
    plan.n_grid = cfg.effective_n_grid();
    plan.replicates = cfg.replicates;
    plan.seed = cfg.seed;
    plan.threads = cfg.threads;
    const EPowerCurve curve = monte_carlo(plan);
    const fs::path dir = ensure_out_dir(cfg);
    write_file((dir / "results.csv").string(), curve_to_csv(curve));
    write_file((dir / "summary.json").string(), summary_json(cfg, curve));
    write_file((dir / "plot.gp").string(),
               curve_to_gnuplot(curve, plan.problem->name() + " regret"));
    std::cout << "wrote " << (dir / "results.csv").string() << "\n";
    return 0;
}

int run_classify(const CommonFlags& flags) {
    RunConfig cfg = load_config(flags, "classify");
    require_valid(cfg);
    Classification cls;
    if (cfg.model_type == "gauss-loc") {
        auto problem =
            std::dynamic_pointer_cast<GaussianLocationProblem>(make_problem(cfg));
        const int sign = problem->covariance_gap_sign();
        cls.verdict = sign == -2  ? SimplicityVerdict::StrictlySimple
                      : sign == -1 ? SimplicityVerdict::Simple
                      : sign == 0  ? SimplicityVerdict::Matching
                      : sign == 2  ? SimplicityVerdict::StrictlyAntiSimple
                      : sign == 1  ? SimplicityVerdict::AntiSimple
                                   : SimplicityVerdict::Mixed;
        CovMatrix diff = problem->setup().sigma_q - problem->setup().sigma_p;
        Eigen::SelfAdjointEigenSolver<CovMatrix> eig(symmetrized(diff),
                                                     Eigen::EigenvaluesOnly);
        cls.min_eigenvalue = eig.eigenvalues().minCoeff();
        cls.max_eigenvalue = eig.eigenvalues().maxCoeff();
        cls.matching_pairs_note = "verified (Gaussian location pair)";
        cls.grid.push_back(problem->setup().mu_star);
    } else {
        auto problem = std::dynamic_pointer_cast<TwoSampleProblem>(make_problem(cfg));
        const auto& spec = problem->spec();
        double lo, hi;
        if (cfg.classify_window.size() == 2) {
            lo = cfg.classify_window[0];
            hi = cfg.classify_window[1];
        } else {
            lo = cfg.base == "gauss-loc" ? problem->mu_star() - 2.0
                                         : problem->mu_star() * 0.25;
            hi = cfg.base == "gauss-loc" ? problem->mu_star() + 2.0
                                         : problem->mu_star() * 1.75;
        }
        cls = classify(*spec.null_family(), *spec.gen_family(),
                       classify_grid(lo, hi, cfg.classify_points));
    }
    const fs::path dir = ensure_out_dir(cfg);
    write_file((dir / "classify.json").string(), classification_json(cfg, cls));
    std::cout << "verdict: " << to_string(cls.verdict) << "\n"
              << "eigenvalue range of Sigma_q - Sigma_p over the grid: ["
              << cls.min_eigenvalue << ", " << cls.max_eigenvalue << "]\n"
              << "matching pairs: " << cls.matching_pairs_note << "\n";
    return 0;
}

int run_ripr(const CommonFlags& flags) {
    RunConfig cfg = load_config(flags, "ripr");
    require_valid(cfg);
    auto problem = std::dynamic_pointer_cast<TwoSampleProblem>(make_problem(cfg));
    if (!problem)
        throw domain_error("ripr: configure a two-sample model (the Gaussian RIPr is exact)");
    EVarSpec spec{EVarKind::RipNumeric};
    spec.simple_q = cfg.simple_q;
    problem->prepare({cfg.ripr_n}, {spec});
    const auto cert = problem->rip_certificate(cfg.ripr_n);
    const auto& prior = problem->rip_prior(cfg.ripr_n);
    const fs::path dir = ensure_out_dir(cfg);
    write_file((dir / "ripr.json").string(), ripr_json(cfg, prior, *cert));
    write_file((dir / "ripr_prior.csv").string(), prior_to_csv(prior));
    std::cout << "achieved KL " << cert->kl << ", duality gap " << cert->gap << " in "
              << cert->iterations << " iterations (" << prior.size() << " atoms)\n";
    return 0;
}

int run_validate(const CommonFlags& flags) {
    RunConfig cfg = load_config(flags, "validate");
    require_valid(cfg);
    auto problem = std::dynamic_pointer_cast<TwoSampleProblem>(make_problem(cfg));
    if (!problem) throw domain_error("validate: exhaustive checks need a two-sample model");
    std::vector<double> means = cfg.null_means;
    if (means.empty())
        means = {problem->mu_star() * 0.6, problem->mu_star(), problem->mu_star() * 1.3};
    std::ostringstream csv;
    csv << "kind,n,null_mean,expectation\n";
    bool all_ok = true;
    for (const auto& kind_name : cfg.kinds) {
        EVarSpec spec;
        spec.kind = evar_kind_from_string(kind_name);
        spec.simple_q = cfg.simple_q;
        for (int n = 1; n <= cfg.validate_n_max; ++n) {
            for (double mu : means) {
                const double e = brute_validity(*problem, spec, mu, n);
                csv << kind_name << ',' << n << ',' << mu << ',' << e << '\n';
                double slack = 1e-9;
                if (spec.kind == EVarKind::RipNumeric)
                    slack += problem->rip_certificate(n)->gap;
                if (spec.kind != EVarKind::PseudoW1 && e > 1.0 + slack) all_ok = false;
                std::cout << kind_name << " n=" << n << " mu=" << mu << ": E_P[S] = " << e
                          << "\n";
            }
        }
    }
    const fs::path dir = ensure_out_dir(cfg);
    write_file((dir / "validity.csv").string(), csv.str());
    std::cout << (all_ok ? "all expectations within the e-variable bound\n"
                         : "BOUND VIOLATION detected\n");
    return all_ok ? 0 : 3;
}

int run_predict(const CommonFlags& flags, const RunConfig& direct, bool use_direct) {
    RunConfig cfg = use_direct ? direct : load_config(flags, "predict");
    if (!use_direct) require_valid(cfg);
    const PredictedEPower p =
        predicted_epower(cfg.predict_case, cfg.predict_n, cfg.predict_value_d,
                         cfg.predict_drp, cfg.predict_drq, cfg.predict_dim);
    std::cout << p.value << (p.exact ? "" : " (asymptotic, o(1) bracket)") << "\n";
    return 0;
}

int run_eprocess(const CommonFlags& flags) {
    RunConfig cfg = load_config(flags, "eprocess");
    require_valid(cfg);
    EprocessReport report;
    if (cfg.eprocess_variant == "gaussian") {
        report = eprocess_gaussian(cfg.ep_mu_star, cfg.ep_var_q, cfg.ep_var_p,
                                   cfg.eprocess_n);
    } else if (cfg.eprocess_variant == "two-sample") {
        auto problem = std::dynamic_pointer_cast<TwoSampleProblem>(make_problem(cfg));
        if (!problem) throw domain_error("eprocess: two-sample variant needs that model");
        report = eprocess_two_sample(*problem, cfg.eprocess_n, cfg.simple_q);
    } else {
        throw domain_error("eprocess: unknown variant " + cfg.eprocess_variant);
    }
    const fs::path dir = ensure_out_dir(cfg);
    write_file((dir / "eprocess.json").string(), eprocess_json(cfg, report));
    std::cout << report.detail << "\n"
              << (report.conclusive
                      ? "conclusive: the sequence is NOT an e-process for the data filtration\n"
                      : "inconclusive\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"e-power laboratory for exponential-family e-variables"};
    app.require_subcommand(1);

    CommonFlags flags;
    RunConfig direct;
    bool predict_direct = false;

    auto* sim = app.add_subcommand("simulate", "Monte-Carlo e-power curves");
    add_common(sim, flags);
    auto* rip = app.add_subcommand("ripr", "solve the reverse information projection");
    add_common(rip, flags);
    auto* cls = app.add_subcommand("classify", "simple / anti-simple verdict");
    add_common(cls, flags);
    auto* val = app.add_subcommand("validate", "exhaustive E_P[S] <= 1 checks");
    add_common(val, flags);
    auto* epr = app.add_subcommand("eprocess", "not-an-e-process counterexample check");
    add_common(epr, flags);

    auto* pre = app.add_subcommand("predict", "closed-form predicted e-power");
    add_common(pre, flags, /*config_required=*/false);
    pre->add_option("--case", direct.predict_case, "case tag, e.g. thm2-cond");
    pre->add_option("--n", direct.predict_n, "sample size");
    pre->add_option("--D", direct.predict_value_d, "per-observation KL divergence");
    pre->add_option("--drp", direct.predict_drp, "trace ratio d_rp");
    pre->add_option("--drq", direct.predict_drq, "trace ratio d_rq");
    pre->add_option("--d", direct.predict_dim, "dimension");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return run_simulate(flags);
        if (rip->parsed()) return run_ripr(flags);
        if (cls->parsed()) return run_classify(flags);
        if (val->parsed()) return run_validate(flags);
        if (epr->parsed()) return run_eprocess(flags);
        if (pre->parsed()) {
            predict_direct = flags.config_path.empty();
            return run_predict(flags, direct, predict_direct);
        }
    } catch (const std::exception& e) {
        std::cerr << "{\"error\": \"" << e.what() << "\"}\n";
        return 2;
    }
    return 1;
}
