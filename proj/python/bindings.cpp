#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "evarkit/classify.hpp"
#include "evarkit/config.hpp"
#include "evarkit/report.hpp"

namespace py = pybind11;
using namespace evar;

namespace {

EVarSpec make_spec(const std::string& kind, bool simple_q, int n_cap) {
    EVarSpec spec;
    spec.kind = evar_kind_from_string(kind);
    spec.simple_q = simple_q;
    spec.n_cap = n_cap;
    return spec;
}

py::dict cert_dict(const RiprCertificate& cert) {
    py::dict d;
    d["kl"] = cert.kl;
    d["gap"] = cert.gap;
    d["iterations"] = cert.iterations;
    d["tol"] = cert.tol;
    d["converged"] = cert.converged;
    return d;
}

py::list curve_rows(const EPowerCurve& curve) {
    py::list rows;
    for (const auto& row : curve.rows) {
        py::dict d;
        d["kind"] = to_string(row.kind);
        d["n"] = row.n;
        d["mean_log_s"] = row.mean_log_s;
        d["se"] = row.se;
        d["regret"] = row.regret;
        d["predicted"] = row.predicted ? py::object(py::float_(*row.predicted))
                                       : py::object(py::none());
        d["gap"] = row.gap ? py::object(py::float_(*row.gap)) : py::object(py::none());
        rows.append(std::move(d));
    }
    return rows;
}

}  // namespace

PYBIND11_MODULE(_evarkit, m) {
    m.doc() = "e-power laboratory for exponential-family e-variables";

    py::register_exception<domain_error>(m, "DomainError");

    // Gaussian KL calculus
    m.def("d_gauss", &d_gauss, py::arg("b"));
    m.def("trace_ratio", &trace_ratio, py::arg("sigma_a"), py::arg("sigma_b"));
    m.def("d_triple", &d_triple, py::arg("sigma_r"), py::arg("sigma_q"),
          py::arg("sigma_p"));
    m.def(
        "gaussian_kl",
        [](const MeanVec& mu_r, const CovMatrix& sigma_r, const MeanVec& mu_0,
           const CovMatrix& sigma_p) { return gaussian_kl(mu_r, sigma_r, mu_0, sigma_p); },
        py::arg("mu_r"), py::arg("sigma_r"), py::arg("mu_0"), py::arg("sigma_p"));
    m.def(
        "mle_marginal",
        [](const MeanVec& mean, const CovMatrix& cov, const CovMatrix& sigma_p, int n) {
            const GaussLaw law = mle_marginal({mean, cov}, sigma_p, n);
            return py::make_tuple(law.mean, law.cov);
        },
        py::arg("prior_mean"), py::arg("prior_cov"), py::arg("sigma_p"), py::arg("n"));

    // exponential families (handle wrapper: the registry hands out
    // shared_ptr<const Family>, which is not a pybind holder type)
    struct FamilyHandle {
        FamilyPtr ptr;
    };
    py::class_<FamilyHandle>(m, "Family")
        .def_property_readonly("name",
                               [](const FamilyHandle& h) { return h.ptr->name(); })
        .def_property_readonly("dim",
                               [](const FamilyHandle& h) { return h.ptr->dim(); })
        .def("log_density",
             [](const FamilyHandle& h, const MeanVec& mu, const Obs& u) {
                 return h.ptr->log_density(mu, u);
             },
             py::arg("mu"), py::arg("u"))
        .def("kl",
             [](const FamilyHandle& h, const MeanVec& mu1, const MeanVec& mu0) {
                 return h.ptr->kl(mu1, mu0);
             },
             py::arg("mu1"), py::arg("mu0"))
        .def(
            "kl_extended",
            [](const FamilyHandle& h, const MeanVec& mu_hat, const MeanVec& mu0) {
                return h.ptr->kl_extended(h.ptr->classify_mean(mu_hat), mu0);
            },
            py::arg("mu_hat"), py::arg("mu0"))
        .def("cov",
             [](const FamilyHandle& h, const MeanVec& mu) { return h.ptr->cov(mu); },
             py::arg("mu"))
        .def("mean_to_canonical",
             [](const FamilyHandle& h, const MeanVec& mu) {
                 return h.ptr->mean_to_canonical(mu);
             },
             py::arg("mu"))
        .def("canonical_to_mean",
             [](const FamilyHandle& h, const Eigen::VectorXd& beta) {
                 return h.ptr->canonical_to_mean(beta);
             },
             py::arg("beta"))
        .def("in_mean_space",
             [](const FamilyHandle& h, const MeanVec& mu) {
                 return h.ptr->in_mean_space(mu);
             },
             py::arg("mu"))
        .def(
            "sample",
            [](const FamilyHandle& h, const MeanVec& mu, int n, std::uint64_t seed) {
                return sample_iid(*h.ptr, mu, n, seed);
            },
            py::arg("mu"), py::arg("n"), py::arg("seed"));
    m.def("make_family",
          [](const std::string& name) { return FamilyHandle{make_family(name)}; },
          py::arg("name"));
    m.def("family_names", &family_names);
    m.def(
        "mle",
        [](const FamilyHandle& h, const ObsSeq& data) {
            const ExtendedMean hat = mle(*h.ptr, data);
            return py::make_tuple(hat.value, hat.interior);
        },
        py::arg("family"), py::arg("data"));
    m.def(
        "prequential",
        [](const FamilyHandle& h, const MeanVec& x0, double n0, const ObsSeq& data) {
            return prequential(*h.ptr, x0, n0, data);
        },
        py::arg("family"), py::arg("x0"), py::arg("n0"), py::arg("data"));

    // two-sample construction
    py::class_<CurvePoint>(m, "CurvePoint")
        .def(py::init([](double a, double b) { return CurvePoint{a, b}; }))
        .def_readwrite("mu_a", &CurvePoint::mu_a)
        .def_readwrite("mu_b", &CurvePoint::mu_b)
        .def("__repr__", [](const CurvePoint& p) {
            return "CurvePoint(" + std::to_string(p.mu_a) + ", " +
                   std::to_string(p.mu_b) + ")";
        });
    py::class_<TwoSampleSpec, std::shared_ptr<TwoSampleSpec>>(m, "TwoSampleSpec")
        .def(py::init([](const std::string& base, double delta_star) {
                 return std::make_shared<TwoSampleSpec>(base, delta_star);
             }),
             py::arg("base"), py::arg("delta_star"))
        .def(py::init([](const std::string& base, double delta_star, CurvePoint a) {
                 return std::make_shared<TwoSampleSpec>(base, delta_star, a);
             }),
             py::arg("base"), py::arg("delta_star"), py::arg("anchor"))
        .def_property_readonly("anchor", &TwoSampleSpec::anchor)
        .def_property_readonly("delta_star", &TwoSampleSpec::delta_star)
        .def("effect_size", &TwoSampleSpec::effect_size, py::arg("point"))
        .def("curve", &TwoSampleSpec::curve, py::arg("beta"))
        .def("curve_from_mean", &TwoSampleSpec::curve_from_mean, py::arg("mu"))
        .def("kl_q_vs_null", &TwoSampleSpec::kl_q_vs_null, py::arg("point"))
        .def("log_q", &TwoSampleSpec::log_q, py::arg("point"), py::arg("u"))
        .def("log_p", &TwoSampleSpec::log_p, py::arg("mu"), py::arg("u"));

    // classify
    m.def(
        "classify_two_sample",
        [](const std::string& base, double delta, double lo, double hi, int points) {
            TwoSampleSpec spec(base, delta);
            const Classification cls = classify(*spec.null_family(), *spec.gen_family(),
                                                classify_grid(lo, hi, points));
            py::dict d;
            d["verdict"] = to_string(cls.verdict);
            d["min_eigenvalue"] = cls.min_eigenvalue;
            d["max_eigenvalue"] = cls.max_eigenvalue;
            d["matching_pairs"] = cls.matching_pairs_note;
            return d;
        },
        py::arg("base"), py::arg("delta_star"), py::arg("lo"), py::arg("hi"),
        py::arg("points") = 101);

    // RIPr solver on raw discretized laws
    m.def(
        "solve_mixture_kl",
        [](const Eigen::VectorXd& target_log_mass, const Eigen::MatrixXd& comp_log_mass,
           double tol, int max_iter) {
            SolverOptions opts;
            opts.tol = tol;
            opts.max_iter = max_iter;
            const MixtureSolution sol =
                solve_mixture_kl(target_log_mass, comp_log_mass, opts);
            return py::make_tuple(sol.weights, cert_dict(sol.cert));
        },
        py::arg("target_log_mass"), py::arg("comp_log_mass"), py::arg("tol") = 1e-8,
        py::arg("max_iter") = 10000);

    // problems and evaluation
    py::class_<TestingProblem, std::shared_ptr<TestingProblem>>(m, "TestingProblem")
        .def_property_readonly("name", &TestingProblem::name)
        .def("per_obs_kl", &TestingProblem::per_obs_kl)
        .def(
            "prepare",
            [](TestingProblem& p, const std::vector<int>& n_grid,
               const std::vector<std::string>& kinds, bool simple_q) {
                std::vector<EVarSpec> specs;
                for (const auto& k : kinds) specs.push_back(make_spec(k, simple_q, -1));
                p.prepare(n_grid, specs);
            },
            py::arg("n_grid"), py::arg("kinds"), py::arg("simple_q") = false)
        .def(
            "sample_data",
            [](const TestingProblem& p, int n, std::uint64_t seed) {
                return p.sample_data(n, seed);
            },
            py::arg("n"), py::arg("seed"))
        .def(
            "log_s",
            [](const TestingProblem& p, const std::string& kind, const ObsSeq& data,
               bool simple_q) {
                return evaluate_log_s(p, make_spec(kind, simple_q, -1), data).value;
            },
            py::arg("kind"), py::arg("data"), py::arg("simple_q") = false)
        .def(
            "predicted",
            [](const TestingProblem& p, const std::string& kind, int n, bool simple_q) {
                const auto v = p.predicted(make_spec(kind, simple_q, -1), n);
                return v ? py::object(py::float_(*v)) : py::object(py::none());
            },
            py::arg("kind"), py::arg("n"), py::arg("simple_q") = false);

    py::class_<GaussianLocationProblem, TestingProblem,
               std::shared_ptr<GaussianLocationProblem>>(m, "GaussianLocationProblem")
        .def(py::init([](const MeanVec& mu_star, const CovMatrix& sigma_q,
                         const CovMatrix& sigma_p, py::object sigma_r) {
                 GaussianSetup s;
                 s.mu_star = mu_star;
                 s.sigma_q = sigma_q;
                 s.sigma_p = sigma_p;
                 if (!sigma_r.is_none()) s.sigma_r = sigma_r.cast<CovMatrix>();
                 return std::make_shared<GaussianLocationProblem>(std::move(s));
             }),
             py::arg("mu_star"), py::arg("sigma_q"), py::arg("sigma_p"),
             py::arg("sigma_r") = py::none());

    py::class_<TwoSampleProblem, TestingProblem, std::shared_ptr<TwoSampleProblem>>(
        m, "TwoSampleProblem")
        .def(py::init([](const std::string& base, double delta_star, py::object anchor,
                         int prior_atoms, double solver_tol) {
                 TwoSampleSetup s;
                 s.base = base;
                 s.delta_star = delta_star;
                 if (!anchor.is_none()) s.anchor = anchor.cast<CurvePoint>();
                 s.prior_atoms = prior_atoms;
                 s.solver.tol = solver_tol;
                 return std::make_shared<TwoSampleProblem>(std::move(s));
             }),
             py::arg("base"), py::arg("delta_star"), py::arg("anchor") = py::none(),
             py::arg("prior_atoms") = 201, py::arg("solver_tol") = 1e-8)
        .def("brute_expectation",
             [](TwoSampleProblem& p, const std::string& kind, double mu, int n,
                bool simple_q) {
                 return p.brute_expectation(make_spec(kind, simple_q, -1), mu, n);
             },
             py::arg("kind"), py::arg("null_mean"), py::arg("n"),
             py::arg("simple_q") = false)
        .def("rip_certificate", [](const TwoSampleProblem& p, int n) -> py::object {
            const auto cert = p.rip_certificate(n);
            return cert ? py::object(cert_dict(*cert)) : py::object(py::none());
        });

    // Monte-Carlo harness
    m.def(
        "monte_carlo",
        [](std::shared_ptr<TestingProblem> problem, const std::vector<std::string>& kinds,
           const std::vector<int>& n_grid, int replicates, std::uint64_t seed,
           bool simple_q, int seqrip_cap, int threads) {
            SimPlan plan;
            plan.problem = std::move(problem);
            for (const auto& k : kinds) {
                EVarSpec spec = make_spec(k, simple_q, -1);
                if (spec.kind == EVarKind::SeqRip) spec.n_cap = seqrip_cap;
                plan.evars.push_back(std::move(spec));
            }
            plan.n_grid = n_grid;
            plan.replicates = replicates;
            plan.seed = seed;
            plan.threads = threads;
            const EPowerCurve curve = monte_carlo(plan);
            py::dict out;
            out["per_obs_kl"] = curve.per_obs_kl;
            out["rows"] = curve_rows(curve);
            return out;
        },
        py::arg("problem"), py::arg("kinds"), py::arg("n_grid"),
        py::arg("replicates") = 2000, py::arg("seed") = 1, py::arg("simple_q") = false,
        py::arg("seqrip_cap") = -1, py::arg("threads") = 0);

    m.def(
        "predicted_epower",
        [](const std::string& case_tag, int n, double big_d, double d_rp, double d_rq,
           int d) {
            const PredictedEPower p = predicted_epower(case_tag, n, big_d, d_rp, d_rq, d);
            return py::make_tuple(p.value, p.exact);
        },
        py::arg("case_tag"), py::arg("n"), py::arg("D"), py::arg("d_rp") = 0.0,
        py::arg("d_rq") = 0.0, py::arg("d") = 1);

    m.def(
        "eprocess_gaussian",
        [](double mu_star, double var_q, double var_p, int n) {
            const EprocessReport rep = eprocess_gaussian(mu_star, var_q, var_p, n);
            py::dict d;
            d["conclusive"] = rep.conclusive;
            d["expect_forward"] = rep.expect_forward;
            d["expect_backward"] = rep.expect_backward;
            d["detail"] = rep.detail;
            return d;
        },
        py::arg("mu_star"), py::arg("var_q"), py::arg("var_p"), py::arg("n"));

    m.def("evar_kinds", [] {
        return std::vector<std::string>{"ui-simple",  "ui-plugin",  "ui-mixture",
                                        "cond",       "seq-rip",    "rip-exact",
                                        "rip-numeric", "pseudo-w1", "haar"};
    });
}
