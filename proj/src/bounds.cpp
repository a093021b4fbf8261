#include "spstop/bounds.hpp"

#include <cmath>
#include <string>

#include "spstop/agreement.hpp"
#include "spstop/error.hpp"

namespace spstop {
namespace {

void require_threshold(double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidThreshold, "threshold " + std::to_string(threshold) + " is outside (0, 1]");
    }
}

void require_precision(double precision) {
    if (!(precision >= 0.0 && precision <= 1.0)) {
        throw Error(ErrorCode::InvalidPrecision, "precision " + std::to_string(precision) + " is outside [0, 1]");
    }
}

}  // namespace

double worst_case_bound(double threshold) {
    require_threshold(threshold);
    return 4.0 * (1.0 - threshold) / threshold;
}

double perfect_precision_bound(double threshold) {
    require_threshold(threshold);
    return 2.0 * (1.0 - threshold) / threshold;
}

double precision_bound(double threshold, double precision) {
    require_threshold(threshold);
    require_precision(precision);
    return 4.0 * (1.0 - threshold) / ((precision + 1.0) * threshold);
}

double scaling_factor(double precision) {
    require_precision(precision);
    return 1.0 / (precision + 1.0);
}

BoundResult bound_result(BoundKind kind, double threshold, std::optional<double> precision) {
    switch (kind) {
        case BoundKind::WorstCase:
            return {kind, threshold, std::nullopt, worst_case_bound(threshold)};
        case BoundKind::PerfectPrecision:
            return {kind, threshold, 1.0, perfect_precision_bound(threshold)};
        case BoundKind::PrecisionP:
            if (!precision) {
                throw Error(ErrorCode::InvalidPrecision, "precision bound needs a precision");
            }
            return {kind, threshold, precision, precision_bound(threshold, *precision)};
    }
    throw Error(ErrorCode::Internal, "unknown bound kind");
}

LemmaReport check_f_geq_k(const ContingencyTable& t) {
    LemmaReport r{};
    r.k = kappa(t);
    r.f = f_measure(t);

    using Wide = __int128;
    const Wide a = t.a(), b = t.b(), c = t.c(), d = t.d();
    const Wide k_num = 2 * (a * d - b * c);
    const Wide k_den = (a + b) * (b + d) + (a + c) * (c + d);
    const Wide f_num = 2 * a;
    const Wide f_den = 2 * a + b + c;
    r.applicable = a * d - b * c >= 0;
    // Both denominators are positive once K and F are defined.
    r.holds = f_num * k_den >= k_num * f_den;
    return r;
}

}  // namespace spstop
