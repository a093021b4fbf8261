#pragma once

#include <optional>

#include "spstop/contingency.hpp"

namespace spstop {

/// Which Kappa-to-F-measure bound a result came from.
enum class BoundKind {
    WorstCase,         // 4(1-T)/T, no assumption on the models
    PerfectPrecision,  // 2(1-T)/T, positive conjunction has precision 1
    PrecisionP,        // 4(1-T)/((p+1)T), positive conjunction has precision p
};

struct BoundResult {
    BoundKind kind;
    double threshold;
    std::optional<double> precision;
    double bound;
    /// |dF| <= 1 always, so a bound above 1 says nothing.
    bool vacuous() const { return bound > 1.0; }
};

// Thresholds must lie in (0, 1]; T = 1 gives a zero bound. Violations raise
// InvalidThreshold. Precisions must lie in [0, 1] (InvalidPrecision).

double worst_case_bound(double threshold);
double perfect_precision_bound(double threshold);
double precision_bound(double threshold, double precision);
/// 1 / (p + 1)
double scaling_factor(double precision);

BoundResult bound_result(BoundKind kind, double threshold, std::optional<double> precision = {});

/// Outcome of checking F >= K on one table.
struct LemmaReport {
    bool applicable;  // ad - bc >= 0
    double f;
    double k;
    bool holds;       // exact comparison of F >= K; meaningful only when applicable
};

/// F and K are compared exactly on integer cross-products.
/// Raises DegenerateMarginals or NoPositivePredictions when either is undefined.
LemmaReport check_f_geq_k(const ContingencyTable& t);

}  // namespace spstop
