#pragma once

#include "spstop/contingency.hpp"

namespace spstop {

struct AgreementStats {
    double p_o;
    double p_e;
    double kappa;
    double f_measure;
    std::int64_t n;
};

struct VarianceWorksheet {
    double pbar_plus;   // (p_{+.} + p_{.+}) / 2
    double pbar_minus;  // (p_{-.} + p_{.-}) / 2
    double variance;
};

/// (a + d) / n
double observed_agreement(const ContingencyTable& t);

/// Chance agreement from the two marginal distributions.
double expected_agreement(const ContingencyTable& t);

/// True when both models put every example on the same single label, which
/// makes chance agreement 1 and Kappa 0/0. Decided on integer counts.
bool has_degenerate_marginals(const ContingencyTable& t);

/// Cohen's Kappa, evaluated as 2(ad - bc) / ((a+b)(b+d) + (a+c)(c+d)).
/// Raises DegenerateMarginals when p_e = 1.
double kappa(const ContingencyTable& t);

/// Cohen's Kappa evaluated as (p_o - p_e) / (1 - p_e). Same domain as kappa().
double kappa_from_proportions(const ContingencyTable& t);

/// F-measure between the two models, 2a / (2a + b + c).
/// Raises NoPositivePredictions when a = b = c = 0.
double f_measure(const ContingencyTable& t);

/// Large-sample variance of the sample Kappa, written in the simplified
/// two-sum form whose last sum runs over all four cells. The result is
/// cross-checked against kappa_variance_fleiss() on every call; a mismatch
/// raises Internal. Small negative round-off (>= -1e-12) is clamped to 0;
/// anything lower raises NegativeVariance.
VarianceWorksheet kappa_variance(const ContingencyTable& t);

/// Classical three-term large-sample variance (diagonal, off-diagonal,
/// centring term). Unclamped.
double kappa_variance_fleiss(const ContingencyTable& t);

/// All of the above in one pass. Raises DegenerateMarginals when p_e = 1.
AgreementStats agreement_stats(const ContingencyTable& t);

}  // namespace spstop
