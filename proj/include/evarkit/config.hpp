#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evarkit/epower.hpp"

namespace evar {

struct config_error : domain_error {
    config_error(int line, int col, const std::string& msg)
        : domain_error("config:" + std::to_string(line) + ":" + std::to_string(col) +
                       ": " + msg),
          line(line),
          col(col) {}
    int line;
    int col;
};

/// Minimal TOML-style key-value store: [sections], scalars, strings,
/// booleans and flat arrays. Keys are addressed as "section.key".
class KeyValueFile {
  public:
    static KeyValueFile parse_text(const std::string& text);
    static KeyValueFile parse_file(const std::string& path);

    bool has(const std::string& key) const;
    double num(const std::string& key, double fallback) const;
    long integer(const std::string& key, long fallback) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::string str(const std::string& key, const std::string& fallback) const;
    std::vector<double> nums(const std::string& key) const;
    std::vector<std::string> strs(const std::string& key) const;

    const std::map<std::string, std::string>& raw() const { return raw_; }

  private:
    struct Value {
        bool is_string = false;
        bool is_array = false;
        std::vector<std::string> items;  // scalars hold one item
    };
    std::map<std::string, Value> values_;
    std::map<std::string, std::string> raw_;
};

/// Effective configuration of one CLI run, with every default materialized
/// so that serializing and reparsing reproduces the same run.
struct RunConfig {
    std::string kind;  // simulate | ripr | classify | validate | predict | eprocess

    // model
    std::string model_type = "two-sample";  // two-sample | gauss-loc
    std::string base = "bernoulli";
    double delta = 1.0;
    std::vector<double> anchor;    // empty: canonical
    std::vector<double> sampling;  // empty: anchor
    int dim = 1;
    std::vector<double> mu_star, sigma_q, sigma_p, sigma_r;  // row-major matrices
    std::vector<double> w1_mean, w1_cov;

    // e-variables
    std::vector<std::string> kinds{"cond"};
    std::vector<double> x0;
    double n0 = 1.0;
    int prior_atoms = 201;
    double prior_beta_lo = -10.0, prior_beta_hi = 10.0;
    int seqrip_cap = -1;
    bool simple_q = false;

    // simulation
    std::vector<int> n_grid;  // explicit grid wins over n_max/n_step
    int n_max = 100, n_step = 10;
    int replicates = 2000;
    std::uint64_t seed = 1;
    int threads = 0;

    // solver
    double solver_tol = 1e-8;
    int solver_max_iter = 10000;
    int solver_atoms = 512;

    // classify
    int classify_points = 101;
    std::vector<double> classify_window;

    // validate
    int validate_n_max = 5;
    std::vector<double> null_means;

    // eprocess
    std::string eprocess_variant = "gaussian";
    int eprocess_n = 2;
    double ep_mu_star = 0.0, ep_var_q = 2.0, ep_var_p = 1.0;

    // predict
    std::string predict_case = "thm2-cond";
    int predict_n = 1;
    double predict_value_d = 0.0, predict_drp = 0.0, predict_drq = 0.0;
    int predict_dim = 1;

    // ripr
    int ripr_n = 1;

    std::string out_dir = ".";

    static RunConfig from_file(const std::string& path);
    static RunConfig from_text(const std::string& text);
    std::string to_text() const;

    std::vector<int> effective_n_grid() const;
};

/// Complete list of violations; empty iff the configuration is runnable.
std::vector<std::string> validate_config(const RunConfig& cfg);

std::shared_ptr<TestingProblem> make_problem(const RunConfig& cfg);
std::vector<EVarSpec> make_evar_specs(const RunConfig& cfg);

}  // namespace evar
