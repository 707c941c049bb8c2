#pragma once

#include <string>

#include "evarkit/classify.hpp"
#include "evarkit/config.hpp"

namespace evar {

/// CSV with the fixed column order n,kind,mean_log_s,se,regret,predicted,gap
/// (empty strings for missing values); byte-stable for a fixed run.
std::string curve_to_csv(const EPowerCurve& curve);

/// Self-contained gnuplot script (inline data blocks) rendering the regret
/// curves, one series per kind, log-x.
std::string curve_to_gnuplot(const EPowerCurve& curve, const std::string& title);

/// Summary JSON: effective config text, per-row results, certificates.
std::string summary_json(const RunConfig& cfg, const EPowerCurve& curve);

std::string classification_json(const RunConfig& cfg, const Classification& cls);
std::string ripr_json(const RunConfig& cfg, const DiscretePrior& prior,
                      const RiprCertificate& cert);
std::string prior_to_csv(const DiscretePrior& prior);
std::string eprocess_json(const RunConfig& cfg, const EprocessReport& report);

void write_file(const std::string& path, const std::string& content);

}  // namespace evar
