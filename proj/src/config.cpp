#include "evarkit/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace evar {

namespace {

bool looks_numeric(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace

KeyValueFile KeyValueFile::parse_text(const std::string& text) {
    KeyValueFile kv;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw config_error(lineno, static_cast<int>(t.size()),
                                   "unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) throw config_error(lineno, 1, "empty section name");
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw config_error(lineno, 1, "expected key = value");
        const std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (key.empty()) throw config_error(lineno, 1, "empty key");
        if (val.empty()) throw config_error(lineno, static_cast<int>(eq + 2), "empty value");

        Value v;
        if (val.front() == '[') {
            if (val.back() != ']')
                throw config_error(lineno, static_cast<int>(eq + 2),
                                   "unterminated array");
            v.is_array = true;
            std::string inner = val.substr(1, val.size() - 2);
            std::string item;
            std::istringstream items(inner);
            while (std::getline(items, item, ',')) {
                item = trim(item);
                if (item.empty()) continue;
                if (item.front() == '"') {
                    if (item.size() < 2 || item.back() != '"')
                        throw config_error(lineno, static_cast<int>(eq + 2),
                                           "unterminated string in array");
                    v.is_string = true;
                    v.items.push_back(item.substr(1, item.size() - 2));
                } else {
                    if (!looks_numeric(item))
                        throw config_error(lineno, static_cast<int>(eq + 2),
                                           "array item is not a number: " + item);
                    v.items.push_back(item);
                }
            }
        } else if (val.front() == '"') {
            if (val.size() < 2 || val.back() != '"')
                throw config_error(lineno, static_cast<int>(eq + 2),
                                   "unterminated string");
            v.is_string = true;
            v.items.push_back(val.substr(1, val.size() - 2));
        } else if (val == "true" || val == "false") {
            v.items.push_back(val);
        } else {
            if (!looks_numeric(val))
                throw config_error(lineno, static_cast<int>(eq + 2),
                                   "value is neither number, bool, string nor array: " + val);
            v.items.push_back(val);
        }
        const std::string full = section.empty() ? key : section + "." + key;
        kv.values_[full] = std::move(v);
        kv.raw_[full] = val;
    }
    return kv;
}

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw domain_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

bool KeyValueFile::has(const std::string& key) const { return values_.count(key) > 0; }

double KeyValueFile::num(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return std::strtod(it->second.items.at(0).c_str(), nullptr);
}

long KeyValueFile::integer(const std::string& key, long fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return std::lround(std::strtod(it->second.items.at(0).c_str(), nullptr));
}

bool KeyValueFile::boolean(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return it->second.items.at(0) == "true";
}

std::string KeyValueFile::str(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return it->second.items.at(0);
}

std::vector<double> KeyValueFile::nums(const std::string& key) const {
    std::vector<double> out;
    auto it = values_.find(key);
    if (it == values_.end()) return out;
    for (const auto& item : it->second.items)
        out.push_back(std::strtod(item.c_str(), nullptr));
    return out;
}

std::vector<std::string> KeyValueFile::strs(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return {};
    return it->second.items;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw domain_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

RunConfig RunConfig::from_text(const std::string& text) {
    const KeyValueFile kv = KeyValueFile::parse_text(text);
    RunConfig c;
    c.kind = kv.str("experiment.kind", "");

    c.model_type = kv.str("model.type", c.model_type);
    c.base = kv.str("model.base", c.base);
    c.delta = kv.num("model.delta", c.delta);
    c.anchor = kv.nums("model.anchor");
    c.sampling = kv.nums("model.sampling");
    c.dim = static_cast<int>(kv.integer("model.dim", c.dim));
    c.mu_star = kv.nums("model.mu_star");
    c.sigma_q = kv.nums("model.sigma_q");
    c.sigma_p = kv.nums("model.sigma_p");
    c.sigma_r = kv.nums("model.sigma_r");
    c.w1_mean = kv.nums("model.w1_mean");
    c.w1_cov = kv.nums("model.w1_cov");

    if (kv.has("evars.kinds")) c.kinds = kv.strs("evars.kinds");
    c.x0 = kv.nums("evars.x0");
    if (kv.has("evars.x0") && c.x0.empty()) c.x0 = {kv.num("evars.x0", 0.0)};
    c.n0 = kv.num("evars.n0", c.n0);
    c.prior_atoms = static_cast<int>(kv.integer("evars.prior_atoms", c.prior_atoms));
    c.prior_beta_lo = kv.num("evars.prior_beta_lo", c.prior_beta_lo);
    c.prior_beta_hi = kv.num("evars.prior_beta_hi", c.prior_beta_hi);
    c.seqrip_cap = static_cast<int>(kv.integer("evars.seqrip_cap", c.seqrip_cap));
    c.simple_q = kv.boolean("evars.simple_q", c.simple_q);

    for (double v : kv.nums("sim.n_grid")) c.n_grid.push_back(static_cast<int>(v));
    c.n_max = static_cast<int>(kv.integer("sim.n_max", c.n_max));
    c.n_step = static_cast<int>(kv.integer("sim.n_step", c.n_step));
    c.replicates = static_cast<int>(kv.integer("sim.replicates", c.replicates));
    c.seed = static_cast<std::uint64_t>(kv.integer("sim.seed", static_cast<long>(c.seed)));
    c.threads = static_cast<int>(kv.integer("sim.threads", c.threads));

    c.solver_tol = kv.num("solver.tol", c.solver_tol);
    c.solver_max_iter = static_cast<int>(kv.integer("solver.max_iter", c.solver_max_iter));
    c.solver_atoms = static_cast<int>(kv.integer("solver.atoms", c.solver_atoms));

    c.classify_points = static_cast<int>(kv.integer("classify.grid_points", c.classify_points));
    c.classify_window = kv.nums("classify.window");

    c.validate_n_max = static_cast<int>(kv.integer("validate.n_max", c.validate_n_max));
    c.null_means = kv.nums("validate.null_means");

    c.eprocess_variant = kv.str("eprocess.variant", c.eprocess_variant);
    c.eprocess_n = static_cast<int>(kv.integer("eprocess.n", c.eprocess_n));
    c.ep_mu_star = kv.num("eprocess.mu_star", c.ep_mu_star);
    c.ep_var_q = kv.num("eprocess.var_q", c.ep_var_q);
    c.ep_var_p = kv.num("eprocess.var_p", c.ep_var_p);

    c.predict_case = kv.str("predict.case", c.predict_case);
    c.predict_n = static_cast<int>(kv.integer("predict.n", c.predict_n));
    c.predict_value_d = kv.num("predict.D", c.predict_value_d);
    c.predict_drp = kv.num("predict.d_rp", c.predict_drp);
    c.predict_drq = kv.num("predict.d_rq", c.predict_drq);
    c.predict_dim = static_cast<int>(kv.integer("predict.d", c.predict_dim));

    c.ripr_n = static_cast<int>(kv.integer("ripr.n", c.ripr_n));
    c.out_dir = kv.str("out.dir", c.out_dir);
    return c;
}

namespace {
std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_arr(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += fmt_num(v[i]);
    }
    return s + "]";
}
}  // namespace

std::string RunConfig::to_text() const {
    std::ostringstream out;
    out << "[experiment]\nkind = \"" << kind << "\"\n\n";
    out << "[model]\ntype = \"" << model_type << "\"\nbase = \"" << base << "\"\n";
    out << "delta = " << fmt_num(delta) << "\n";
    if (!anchor.empty()) out << "anchor = " << fmt_arr(anchor) << "\n";
    if (!sampling.empty()) out << "sampling = " << fmt_arr(sampling) << "\n";
    out << "dim = " << dim << "\n";
    if (!mu_star.empty()) out << "mu_star = " << fmt_arr(mu_star) << "\n";
    if (!sigma_q.empty()) out << "sigma_q = " << fmt_arr(sigma_q) << "\n";
    if (!sigma_p.empty()) out << "sigma_p = " << fmt_arr(sigma_p) << "\n";
    if (!sigma_r.empty()) out << "sigma_r = " << fmt_arr(sigma_r) << "\n";
    if (!w1_mean.empty()) out << "w1_mean = " << fmt_arr(w1_mean) << "\n";
    if (!w1_cov.empty()) out << "w1_cov = " << fmt_arr(w1_cov) << "\n";
    out << "\n[evars]\nkinds = [";
    for (std::size_t i = 0; i < kinds.size(); ++i)
        out << (i ? ", " : "") << '"' << kinds[i] << '"';
    out << "]\n";
    if (!x0.empty()) out << "x0 = " << fmt_arr(x0) << "\n";
    out << "n0 = " << fmt_num(n0) << "\nprior_atoms = " << prior_atoms << "\n";
    out << "prior_beta_lo = " << fmt_num(prior_beta_lo)
        << "\nprior_beta_hi = " << fmt_num(prior_beta_hi) << "\n";
    out << "seqrip_cap = " << seqrip_cap << "\n";
    out << "simple_q = " << (simple_q ? "true" : "false") << "\n";
    out << "\n[sim]\n";
    if (!n_grid.empty()) {
        out << "n_grid = [";
        for (std::size_t i = 0; i < n_grid.size(); ++i) out << (i ? ", " : "") << n_grid[i];
        out << "]\n";
    }
    out << "n_max = " << n_max << "\nn_step = " << n_step << "\n";
    out << "replicates = " << replicates << "\nseed = " << seed
        << "\nthreads = " << threads << "\n";
    out << "\n[solver]\ntol = " << fmt_num(solver_tol)
        << "\nmax_iter = " << solver_max_iter << "\natoms = " << solver_atoms << "\n";
    out << "\n[classify]\ngrid_points = " << classify_points << "\n";
    if (!classify_window.empty()) out << "window = " << fmt_arr(classify_window) << "\n";
    out << "\n[validate]\nn_max = " << validate_n_max << "\n";
    if (!null_means.empty()) out << "null_means = " << fmt_arr(null_means) << "\n";
    out << "\n[eprocess]\nvariant = \"" << eprocess_variant << "\"\nn = " << eprocess_n
        << "\nmu_star = " << fmt_num(ep_mu_star) << "\nvar_q = " << fmt_num(ep_var_q)
        << "\nvar_p = " << fmt_num(ep_var_p) << "\n";
    out << "\n[predict]\ncase = \"" << predict_case << "\"\nn = " << predict_n
        << "\nD = " << fmt_num(predict_value_d) << "\nd_rp = " << fmt_num(predict_drp)
        << "\nd_rq = " << fmt_num(predict_drq) << "\nd = " << predict_dim << "\n";
    out << "\n[ripr]\nn = " << ripr_n << "\n";
    out << "\n[out]\ndir = \"" << out_dir << "\"\n";
    return out.str();
}

std::vector<int> RunConfig::effective_n_grid() const {
    if (!n_grid.empty()) return n_grid;
    std::vector<int> grid;
    for (int n = n_step; n <= n_max; n += n_step) grid.push_back(n);
    if (grid.empty() || grid.back() != n_max) grid.push_back(n_max);
    return grid;
}

std::vector<std::string> validate_config(const RunConfig& cfg) {
    std::vector<std::string> issues;
    const std::vector<std::string> kinds_known{"simulate", "ripr",    "classify",
                                              "validate", "predict", "eprocess"};
    if (cfg.kind.empty()) {
        issues.push_back("experiment kind required");
    } else if (std::find(kinds_known.begin(), kinds_known.end(), cfg.kind) ==
               kinds_known.end()) {
        issues.push_back("unknown experiment kind: " + cfg.kind);
    }

    if (cfg.model_type != "two-sample" && cfg.model_type != "gauss-loc")
        issues.push_back("unknown model type: " + cfg.model_type);

    if (cfg.model_type == "two-sample") {
        const auto known = family_names();
        if (std::find(known.begin(), known.end(), cfg.base) == known.end())
            issues.push_back("unknown family: " + cfg.base);
        else if (cfg.base != "bernoulli" && cfg.base != "poisson" &&
                 cfg.base != "exponential" && cfg.base != "gauss-loc")
            issues.push_back("family not usable as a two-sample base: " + cfg.base);
        if (!cfg.anchor.empty() && cfg.anchor.size() != 2)
            issues.push_back("model.anchor must have two entries");
        if (!cfg.sampling.empty() && cfg.sampling.size() != 2)
            issues.push_back("model.sampling must have two entries");
    } else {
        const auto d = static_cast<std::size_t>(cfg.dim);
        if (cfg.dim < 1) issues.push_back("model.dim must be positive");
        if (cfg.mu_star.size() != d) issues.push_back("model.mu_star must have dim entries");
        if (cfg.sigma_q.size() != d * d) issues.push_back("model.sigma_q must be dim*dim");
        if (cfg.sigma_p.size() != d * d) issues.push_back("model.sigma_p must be dim*dim");
        if (!cfg.sigma_r.empty() && cfg.sigma_r.size() != d * d)
            issues.push_back("model.sigma_r must be dim*dim");
        if (!cfg.w1_mean.empty() && cfg.w1_mean.size() != d)
            issues.push_back("model.w1_mean must have dim entries");
        if (!cfg.w1_cov.empty() && cfg.w1_cov.size() != d * d)
            issues.push_back("model.w1_cov must be dim*dim");
    }

    for (const auto& k : cfg.kinds) {
        try {
            const EVarKind kind = evar_kind_from_string(k);
            if (cfg.model_type == "two-sample" &&
                (kind == EVarKind::RipExact || kind == EVarKind::Haar))
                issues.push_back(k + " is only available for gauss-loc models");
            if (cfg.model_type == "gauss-loc" && kind == EVarKind::RipNumeric)
                issues.push_back("rip-numeric is only available for two-sample models");
        } catch (const std::exception&) {
            issues.push_back("unknown e-variable kind: " + k);
        }
    }

    if (cfg.replicates < 1) issues.push_back("sim.replicates must be >= 1");
    if (cfg.n_max < 1) issues.push_back("sim.n_max must be >= 1");
    if (cfg.n_step < 1) issues.push_back("sim.n_step must be >= 1");
    for (std::size_t i = 1; i < cfg.n_grid.size(); ++i)
        if (cfg.n_grid[i] <= cfg.n_grid[i - 1]) {
            issues.push_back("sim.n_grid must be strictly increasing");
            break;
        }
    if (!cfg.n_grid.empty() && cfg.n_grid.front() < 1)
        issues.push_back("sim.n_grid entries must be >= 1");

    if (cfg.solver_tol <= 0) issues.push_back("solver.tol must be positive");
    if (cfg.solver_max_iter < 1) issues.push_back("solver.max_iter must be >= 1");
    if (cfg.solver_atoms < 1) issues.push_back("solver.atoms must be >= 1");
    if (cfg.prior_atoms < 1) issues.push_back("evars.prior_atoms must be >= 1");
    if (cfg.n0 <= 0) issues.push_back("evars.n0 must be positive");

    if (cfg.kind == "validate" && cfg.validate_n_max > 8)
        issues.push_back("validate.n_max above 8 is not exhaustively enumerable");

    const bool has_rip_numeric =
        std::find(cfg.kinds.begin(), cfg.kinds.end(), "rip-numeric") != cfg.kinds.end();
    if (cfg.model_type == "two-sample" && cfg.delta == 0.0 && has_rip_numeric)
        issues.push_back("warning: delta* = 0 makes the alternative coincide with the null");

    return issues;
}

std::shared_ptr<TestingProblem> make_problem(const RunConfig& cfg) {
    if (cfg.model_type == "two-sample") {
        TwoSampleSetup s;
        s.base = cfg.base;
        s.delta_star = cfg.delta;
        if (!cfg.anchor.empty()) s.anchor = CurvePoint{cfg.anchor[0], cfg.anchor[1]};
        if (!cfg.sampling.empty())
            s.sampling_r = CurvePoint{cfg.sampling[0], cfg.sampling[1]};
        if (!cfg.x0.empty()) {
            MeanVec x0(1);
            x0(0) = cfg.x0[0];
            s.x0 = x0;
        }
        s.n0 = cfg.n0;
        s.prior_atoms = cfg.prior_atoms;
        s.prior_beta_lo = cfg.prior_beta_lo;
        s.prior_beta_hi = cfg.prior_beta_hi;
        s.solver.tol = cfg.solver_tol;
        s.solver.max_iter = cfg.solver_max_iter;
        s.solver_atoms = cfg.solver_atoms;
        return std::make_shared<TwoSampleProblem>(std::move(s));
    }
    const auto d = cfg.dim;
    auto mat = [d](const std::vector<double>& v) {
        CovMatrix m(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = v[static_cast<std::size_t>(i * d + j)];
        return m;
    };
    GaussianSetup s;
    s.mu_star = MeanVec(d);
    for (int i = 0; i < d; ++i) s.mu_star(i) = cfg.mu_star[static_cast<std::size_t>(i)];
    s.sigma_q = mat(cfg.sigma_q);
    s.sigma_p = mat(cfg.sigma_p);
    if (!cfg.sigma_r.empty()) s.sigma_r = mat(cfg.sigma_r);
    if (!cfg.w1_mean.empty() && !cfg.w1_cov.empty()) {
        GaussLaw w1;
        w1.mean = MeanVec(d);
        for (int i = 0; i < d; ++i) w1.mean(i) = cfg.w1_mean[static_cast<std::size_t>(i)];
        w1.cov = mat(cfg.w1_cov);
        s.w1 = w1;
    }
    if (!cfg.x0.empty()) {
        MeanVec x0(d);
        for (int i = 0; i < d; ++i) x0(i) = cfg.x0[static_cast<std::size_t>(i)];
        s.x0 = x0;
    }
    s.n0 = cfg.n0;
    return std::make_shared<GaussianLocationProblem>(std::move(s));
}

std::vector<EVarSpec> make_evar_specs(const RunConfig& cfg) {
    std::vector<EVarSpec> specs;
    for (const auto& name : cfg.kinds) {
        EVarSpec spec;
        spec.kind = evar_kind_from_string(name);
        spec.simple_q = cfg.simple_q;
        if (spec.kind == EVarKind::SeqRip) spec.n_cap = cfg.seqrip_cap;
        specs.push_back(std::move(spec));
    }
    return specs;
}

}  // namespace evar
