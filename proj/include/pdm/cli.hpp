#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdm/models.hpp"

namespace pdm {

enum ExitCode : int {
    exit_pass = 0,
    exit_config = 2,
    exit_threshold = 3,
    exit_nonconvergence = 4,
    exit_certificate = 5,
};

/// Stage names, in execution order.
inline const std::vector<std::string> kStages{"constants", "gaps", "pdm", "oracle", "thresholds", "campaign", "simulate"};

struct RunConfig {
    ModelSpec model;
    std::string source;  ///< config path, echoed in the report
    std::set<std::string> stages{"gaps", "pdm", "oracle", "thresholds", "simulate"};
    /// Stopping tolerance of the iteration relative to Delta E.
    double tol = 1e-12;
    /// Truncations for the sensitivity runs; empty means {N, 2N}.
    std::vector<int> ladder;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool unsafe = false;
    std::optional<double> omega0;
    double periods = 100.0;
    /// Number of random perturbations drawn on the model space by the campaign stage.
    int campaign = 20;
    double edge_weight = 1e-10;

    /// Throws UsageError on nonpositive tolerances or a ladder that is not increasing.
    void validate() const;
};

/// Model file plus run keys: stages, tol, ladder, out, seed, unsafe_thresholds,
/// omega0, periods, campaign, edge_weight.
RunConfig read_config(const std::string& path);
RunConfig parse_config(std::istream& in, const std::string& source = "<stream>");

struct RunOutcome {
    int exit_code = exit_pass;
    nlohmann::json report;
    /// Stage and reason of the first failure; empty on success.
    std::string failed_stage;
    std::string failure;
};

/// Runs the enabled stages in order and, when out_dir is set, writes report.json and
/// the plot tables there. Never throws for model or numerical failures; they map to
/// the exit code and the report.
RunOutcome run(const RunConfig& config);

/// Default output directory: $PDM_OUT_DIR, else "pdm_out".
std::string default_out_dir();

}  // namespace pdm
