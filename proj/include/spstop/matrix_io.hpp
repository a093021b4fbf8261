#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "spstop/contingency.hpp"

namespace spstop {

/// Delimiter-separated prediction matrix: one row per stop-set example, one
/// column per iteration, and optionally a column headed `truth`.
struct PredictionMatrix {
    std::vector<std::string> iteration_names;
    std::vector<PredictionVector> iterations;  // header order
    std::optional<PredictionVector> truth;
};

/// The delimiter is ',' when the header contains one, tab otherwise, and
/// runs of whitespace as a last resort. Blank lines and lines starting with
/// '#' are ignored. Cells are "+1", "1" or "-1".
/// Raises ParseError / RaggedMatrix / InvalidLabel with 1-based line and column.
PredictionMatrix parse_prediction_matrix(std::istream& in);
PredictionMatrix parse_prediction_matrix(const std::filesystem::path& path);

/// Inverse of parse_prediction_matrix (comma separated).
std::string format_prediction_matrix(const PredictionMatrix& m);

}  // namespace spstop
