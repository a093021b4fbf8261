#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spstop/simulation.hpp"

namespace spstop::cli {

inline constexpr const char* kToolVersion = "1.0.0";

/// Significant digits kept for every number written to a report.
inline constexpr int kReportDigits = 12;

/// Round to kReportDigits significant digits so serialized values are stable.
double report_number(double v);

/// Simulation config document. Missing keys take the SimConfig defaults;
/// to_json writes every key so an echoed config reruns identically.
///
///   {"mode": "converging" | "population" | "learner",
///    "stop_set_size": 2000, "iterations": 30, "seed": 1, "regrow_stop_set": true,
///    "converging": {"base_accuracy", "flip_rate_initial", "flip_decay", "positive_rate"},
///    "population": {"joint": [8 probabilities]},
///    "learner": {"feature_dim", "pool_size", "batch_size", "selection": "uncertainty" | "random"},
///    "stopping": {"threshold", "window", "comparison": "strict" | "non_strict",
///                 "variance_cap", "min_stop_set", "assumed_precision"}}
SimConfig sim_config_from_json(const nlohmann::json& doc);
nlohmann::ordered_json sim_config_to_json(const SimConfig& cfg);

struct RunResult {
    int exit_code = 0;
    nlohmann::ordered_json report;  // empty on usage errors
};

/// Dispatch one command line (without the program name). The report is
/// written to `out` as JSON, diagnostics to `err`.
///
///   stats    --table a,b,c,d | --matrix FILE
///   bound    --threshold T [--precision p]
///   verify   --n-max N [--threads K] [--random-splits M --max-cell C --seed S]
///   stop     --matrix FILE [--threshold T] [--window k] [--non-strict]
///            [--variance-cap v] [--min-stop-set n] [--precision p]
///   simulate --config FILE [--seed S] [--full-trace]
///
/// Exit status: 0 success, 1 verification violations, 2 usage or input error.
RunResult run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spstop::cli
