#include "evarkit/report.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace evar {

namespace {
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}
}  // namespace

std::string curve_to_csv(const EPowerCurve& curve) {
    std::ostringstream out;
    out << "n,kind,mean_log_s,se,regret,predicted,gap\n";
    for (const auto& row : curve.rows) {
        out << row.n << ',' << to_string(row.kind) << ',' << fmt(row.mean_log_s) << ','
            << fmt(row.se) << ',' << fmt(row.regret) << ',';
        if (row.predicted) out << fmt(*row.predicted);
        out << ',';
        if (row.gap) out << fmt(*row.gap);
        out << '\n';
    }
    return out.str();
}

std::string curve_to_gnuplot(const EPowerCurve& curve, const std::string& title) {
    std::map<std::string, std::vector<const CurveRow*>> by_kind;
    for (const auto& row : curve.rows) by_kind[to_string(row.kind)].push_back(&row);
    std::ostringstream out;
    out << "# regret curves: n*D - E[log S] per e-statistic\n";
    out << "set title '" << title << "'\n";
    out << "set xlabel 'n'\nset ylabel 'n D - E[log S]'\n";
    out << "set key top left\nset grid\n";
    int idx = 0;
    for (const auto& [kind, rows] : by_kind) {
        out << "$data" << idx << " << EOD\n";
        for (const CurveRow* row : rows)
            out << row->n << ' ' << fmt(row->regret) << ' ' << fmt(row->se) << '\n';
        out << "EOD\n";
        ++idx;
    }
    out << "plot ";
    idx = 0;
    for (const auto& [kind, rows] : by_kind) {
        if (idx) out << ", \\\n     ";
        out << "$data" << idx << " using 1:2 with linespoints title '" << kind << "'";
        ++idx;
    }
    out << "\n";
    return out.str();
}

std::string summary_json(const RunConfig& cfg, const EPowerCurve& curve) {
    nlohmann::json j;
    j["config"] = cfg.to_text();
    j["per_obs_kl"] = curve.per_obs_kl;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : curve.rows) {
        nlohmann::json r;
        r["n"] = row.n;
        r["kind"] = to_string(row.kind);
        r["mean_log_s"] = row.mean_log_s;
        r["se"] = row.se;
        r["regret"] = row.regret;
        if (row.predicted) r["predicted"] = *row.predicted;
        if (row.gap) r["gap"] = *row.gap;
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j.dump(2) + "\n";
}

std::string classification_json(const RunConfig& cfg, const Classification& cls) {
    nlohmann::json j;
    j["config"] = cfg.to_text();
    j["verdict"] = to_string(cls.verdict);
    j["min_eigenvalue"] = cls.min_eigenvalue;
    j["max_eigenvalue"] = cls.max_eigenvalue;
    j["zero_threshold"] = cls.zero_threshold;
    j["grid_points"] = cls.grid.size();
    j["matching_pairs"] = cls.matching_pairs_note;
    return j.dump(2) + "\n";
}

std::string ripr_json(const RunConfig& cfg, const DiscretePrior& prior,
                      const RiprCertificate& cert) {
    nlohmann::json j;
    j["config"] = cfg.to_text();
    j["kl"] = cert.kl;
    j["gap"] = cert.gap;
    j["iters"] = cert.iterations;
    j["tol"] = cert.tol;
    j["converged"] = cert.converged;
    nlohmann::json atoms = nlohmann::json::array();
    nlohmann::json weights = nlohmann::json::array();
    for (std::size_t k = 0; k < prior.size(); ++k) {
        if (prior.atoms[k].size() == 1) atoms.push_back(prior.atoms[k](0));
        else {
            nlohmann::json a = nlohmann::json::array();
            for (Eigen::Index i = 0; i < prior.atoms[k].size(); ++i)
                a.push_back(prior.atoms[k](i));
            atoms.push_back(std::move(a));
        }
        weights.push_back(prior.weights[k]);
    }
    j["atoms"] = std::move(atoms);
    j["weights"] = std::move(weights);
    return j.dump(2) + "\n";
}

std::string prior_to_csv(const DiscretePrior& prior) {
    std::ostringstream out;
    out << "atom,weight\n";
    for (std::size_t k = 0; k < prior.size(); ++k) {
        if (prior.atoms[k].size() == 1) {
            out << fmt(prior.atoms[k](0));
        } else {
            for (Eigen::Index i = 0; i < prior.atoms[k].size(); ++i)
                out << (i ? ";" : "") << fmt(prior.atoms[k](i));
        }
        out << ',' << fmt(prior.weights[k]) << '\n';
    }
    return out.str();
}

std::string eprocess_json(const RunConfig& cfg, const EprocessReport& report) {
    nlohmann::json j;
    j["config"] = cfg.to_text();
    j["conclusive"] = report.conclusive;
    j["expect_forward"] = report.expect_forward;
    j["expect_backward"] = report.expect_backward;
    j["detail"] = report.detail;
    return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw domain_error("cannot write file: " + path);
    out << content;
}

}  // namespace evar
