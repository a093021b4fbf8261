#include "spstop/agreement.hpp"

#include <array>
#include <cmath>
#include <string>

#include "spstop/error.hpp"

namespace spstop {
namespace {

// Proportions of a table indexed [i][j] with 0 = '+', 1 = '-'.
struct Proportions {
    std::array<std::array<double, 2>, 2> cell;
    std::array<double, 2> row;  // p_{i.}, previous model
    std::array<double, 2> col;  // p_{.j}, current model
};

Proportions proportions(const ContingencyTable& t) {
    const auto n = static_cast<double>(t.n());
    Proportions p{};
    p.cell = {{{t.a() / n, t.b() / n}, {t.c() / n, t.d() / n}}};
    p.row = {(t.a() + t.b()) / n, (t.c() + t.d()) / n};
    p.col = {(t.a() + t.c()) / n, (t.b() + t.d()) / n};
    return p;
}

// Numerator of p_e scaled by n^2.
std::int64_t chance_numerator(const ContingencyTable& t) {
    return (t.a() + t.b()) * (t.a() + t.c()) + (t.c() + t.d()) * (t.b() + t.d());
}

void require_kappa_defined(const ContingencyTable& t) {
    if (has_degenerate_marginals(t)) {
        throw Error(ErrorCode::DegenerateMarginals, "chance agreement is 1; Kappa is undefined");
    }
}

constexpr double kClampTolerance = 1e-12;
constexpr double kSelfCheckTolerance = 1e-12;

}  // namespace

double observed_agreement(const ContingencyTable& t) {
    return static_cast<double>(t.a() + t.d()) / static_cast<double>(t.n());
}

double expected_agreement(const ContingencyTable& t) {
    const auto n = static_cast<double>(t.n());
    return static_cast<double>(chance_numerator(t)) / (n * n);
}

bool has_degenerate_marginals(const ContingencyTable& t) {
    return chance_numerator(t) == t.n() * t.n();
}

double kappa(const ContingencyTable& t) {
    require_kappa_defined(t);
    const std::int64_t num = 2 * (t.a() * t.d() - t.b() * t.c());
    const std::int64_t den = (t.a() + t.b()) * (t.b() + t.d()) + (t.a() + t.c()) * (t.c() + t.d());
    return static_cast<double>(num) / static_cast<double>(den);
}

double kappa_from_proportions(const ContingencyTable& t) {
    require_kappa_defined(t);
    const double po = observed_agreement(t);
    const double pe = expected_agreement(t);
    return (po - pe) / (1.0 - pe);
}

double f_measure(const ContingencyTable& t) {
    const std::int64_t den = 2 * t.a() + t.b() + t.c();
    if (den == 0) {
        throw Error(ErrorCode::NoPositivePredictions, "neither model predicts a positive");
    }
    return static_cast<double>(2 * t.a()) / static_cast<double>(den);
}

double kappa_variance_fleiss(const ContingencyTable& t) {
    const double k = kappa(t);
    const double pe = expected_agreement(t);
    const Proportions p = proportions(t);

    double diagonal = 0.0;
    double off_diagonal = 0.0;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            if (i == j) {
                const double w = 1.0 - (p.row[i] + p.col[i]) * (1.0 - k);
                diagonal += p.cell[i][i] * w * w;
            } else {
                const double w = p.col[i] + p.row[j];
                off_diagonal += p.cell[i][j] * w * w;
            }
        }
    }
    const double centre = k - pe * (1.0 - k);
    const double one_minus_pe = 1.0 - pe;
    return (diagonal + (1.0 - k) * (1.0 - k) * off_diagonal - centre * centre) /
           (static_cast<double>(t.n()) * one_minus_pe * one_minus_pe);
}

VarianceWorksheet kappa_variance(const ContingencyTable& t) {
    const double k = kappa(t);
    const double pe = expected_agreement(t);
    const Proportions p = proportions(t);
    const std::array<double, 2> pbar = {(p.row[0] + p.col[0]) / 2.0, (p.row[1] + p.col[1]) / 2.0};

    double diagonal = 0.0;
    for (int i = 0; i < 2; ++i) {
        diagonal += p.cell[i][i] * (1.0 - 4.0 * pbar[i] * (1.0 - k));
    }
    double all_cells = 0.0;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const double w = 2.0 * (pbar[i] + pbar[j]) - (p.row[i] + p.col[j]);
            all_cells += p.cell[i][j] * w * w;
        }
    }
    const double centre = k - pe * (1.0 - k);
    const double brace = diagonal - centre * centre + (1.0 - k) * (1.0 - k) * all_cells;
    const double one_minus_pe = 1.0 - pe;
    double variance = brace / (static_cast<double>(t.n()) * one_minus_pe * one_minus_pe);

    const double classical = kappa_variance_fleiss(t);
    if (std::abs(variance - classical) > kSelfCheckTolerance * std::max(1.0, std::abs(classical))) {
        throw Error(ErrorCode::Internal, "variance forms disagree: " + std::to_string(variance) + " vs " +
                                             std::to_string(classical));
    }
    if (variance < 0.0) {
        if (variance < -kClampTolerance) {
            throw Error(ErrorCode::NegativeVariance, "variance " + std::to_string(variance) + " is negative");
        }
        variance = 0.0;
    }
    return {pbar[0], pbar[1], variance};
}

AgreementStats agreement_stats(const ContingencyTable& t) {
    require_kappa_defined(t);
    return {observed_agreement(t), expected_agreement(t), kappa(t), f_measure(t), t.n()};
}

}  // namespace spstop
