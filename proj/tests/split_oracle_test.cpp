#include "spstop/split_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "spstop/agreement.hpp"
#include "spstop/bounds.hpp"
#include "spstop/error.hpp"

namespace spstop {
namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no spstop::Error thrown";
    return ErrorCode::Internal;
}

const SplitTables kExample{{2, 1, 0, 0}, {0, 0, 0, 3}};

TEST(Merge, Examples) {
    EXPECT_EQ(merge(kExample), ContingencyTable(2, 1, 0, 3));
    EXPECT_EQ(merge({{0, 0, 0, 0}, {1, 1, 1, 1}}), ContingencyTable(1, 1, 1, 1));
    EXPECT_EQ(merge({{1, 0, 0, 0}, {1, 0, 0, 0}}), ContingencyTable(2, 0, 0, 0));
    EXPECT_EQ(code_of([] { merge({}); }), ErrorCode::InvalidTable);
}

TEST(TruthFMeasures, Examples) {
    const auto f = truth_f_measures(kExample);
    EXPECT_DOUBLE_EQ(f.f_curr, 0.8);
    EXPECT_DOUBLE_EQ(f.f_prev, 1.0);
    EXPECT_NEAR(f.delta_f, -0.2, 1e-15);

    const auto same = truth_f_measures({{3, 0, 0, 2}, {1, 0, 0, 4}});
    EXPECT_EQ(same.delta_f, 0.0);

    EXPECT_EQ(code_of([] { truth_f_measures({{0, 0, 0, 0}, {0, 0, 0, 5}}); }), ErrorCode::UndefinedF);
}

TEST(ProofQuantities, Examples) {
    const auto q = proof_quantities(kExample);
    EXPECT_EQ(q.g, 5);
    EXPECT_EQ(q.h, 6);
    EXPECT_EQ(q.d_a, -1);
    EXPECT_EQ(q.d_b, 0);
    EXPECT_DOUBLE_EQ(q.ratio, 0.4);

    const auto sym = proof_quantities({{1, 2, 2, 1}, {3, 1, 1, 0}});
    EXPECT_EQ(sym.d_a, 0);
    EXPECT_EQ(sym.d_b, 0);
    EXPECT_EQ(sym.g, sym.h);

    EXPECT_EQ(code_of([] { proof_quantities({{0, 0, 0, 0}, {0, 0, 0, 4}}); }), ErrorCode::DegenerateDenominator);
}

TEST(ProofQuantities, HelperLemmaWithIntegerRatio) {
    // a1 = x a_-1 for integer x: ratio <= (x+1)/(2x+1).
    for (std::int64_t x = 0; x <= 5; ++x) {
        for (std::int64_t an = 1; an <= 3; ++an) {
            for (std::int64_t b1 = 0; b1 <= 2; ++b1) {
                for (std::int64_t c1 = 0; c1 <= 2; ++c1) {
                    for (std::int64_t cn = 0; cn <= 2; ++cn) {
                        const SplitTables s{{x * an, b1, c1, 1}, {an, 1, cn, 2}};
                        const auto q = proof_quantities(s);
                        EXPECT_LE(q.ratio, double(x + 1) / double(2 * x + 1) + 1e-15);
                    }
                }
            }
        }
    }
}

TEST(SplitCount, StarsAndBars) {
    EXPECT_EQ(split_count(1), 8u);
    EXPECT_EQ(split_count(2), 36u);
    EXPECT_EQ(split_count(12), 50388u);
}

TEST(EnumerateSplits, CountsOrderAndCoverage) {
    {
        auto stream = enumerate_splits(1);
        std::set<std::array<std::int64_t, 8>> seen;
        while (auto s = stream.next()) {
            seen.insert(s->cells());
        }
        EXPECT_EQ(seen.size(), 8u);
    }
    auto stream = enumerate_splits(12);
    std::uint64_t total = 0;
    std::optional<SplitTables> last;
    std::int64_t last_n = 0;
    while (auto s = stream.next()) {
        ++total;
        ASSERT_GE(s->n(), last_n);
        if (last && s->n() == last_n) {
            ASSERT_LT(*last, *s);
        }
        last_n = s->n();
        last = s;
    }
    std::uint64_t expected = 0;
    for (int n = 1; n <= 12; ++n) {
        expected += split_count(n);
    }
    EXPECT_EQ(total, expected);
}

TEST(EnumerateSplits, PartitionedVisitMatchesStream) {
    SplitStream stream(5, 5);
    std::vector<SplitTables> from_stream;
    while (auto s = stream.next()) {
        from_stream.push_back(*s);
    }
    std::vector<SplitTables> from_partitions;
    for (std::int64_t a1 = 0; a1 <= 5; ++a1) {
        for_each_split_with_leading(5, a1, [&](const SplitTables& s) { from_partitions.push_back(s); });
    }
    EXPECT_EQ(from_stream, from_partitions);
}

TEST(Stratification, MergeIsLeftInverse) {
    const ContingencyTable t(3, 2, 1, 2);
    std::size_t count = 0;
    for_each_stratification(t, [&](const SplitTables& s) {
        EXPECT_EQ(merge(s), t);
        ++count;
    });
    EXPECT_EQ(count, 4u * 3u * 2u * 3u);
}

TEST(VerifyTheorems, HandCheckedCase) {
    // K = 2(2*3 - 0)/(3*4 + 2*3) = 2/3, |dF| = 0.2 <= 4(1/3)/(2/3) = 2.
    EXPECT_NEAR(kappa(merge(kExample)), 2.0 / 3.0, 1e-15);
    EXPECT_LE(std::abs(truth_f_measures(kExample).delta_f), worst_case_bound(2.0 / 3.0));
    VerificationReport report;
    verify_split(kExample, report);
    EXPECT_TRUE(report.ok());
    EXPECT_EQ(report.theorem_cases, 1u);
}

TEST(VerifyTheorems, ExhaustiveUpTo12) {
    const auto report = verify_theorems(12);
    EXPECT_TRUE(report.ok()) << report.violations.front().detail;
    std::uint64_t expected = 0;
    for (int n = 1; n <= 12; ++n) {
        expected += split_count(n);
    }
    EXPECT_EQ(report.checked, expected);
    EXPECT_EQ(report.checked, report.theorem_cases + report.skipped_undefined_kappa + report.skipped_undefined_f +
                                  report.skipped_nonpositive_kappa);
    EXPECT_GT(report.theorem_cases, 0u);
}

TEST(VerifyTheorems, ThreadCountDoesNotChangeReport) {
    const auto one = verify_theorems(8, 1);
    const auto four = verify_theorems(8, 4);
    EXPECT_EQ(one.checked, four.checked);
    EXPECT_EQ(one.theorem_cases, four.theorem_cases);
    EXPECT_EQ(one.skipped_nonpositive_kappa, four.skipped_nonpositive_kappa);
    EXPECT_EQ(one.lemma_cases, four.lemma_cases);
}

// Independent rational recomputation of the three bounds for small splits.
TEST(VerifyTheorems, RationalOracleUpTo7) {
    using oracle::Rational;
    auto stream = enumerate_splits(7);
    std::uint64_t compared = 0;
    while (auto s = stream.next()) {
        const auto c = s->cells();
        const std::int64_t cells[8] = {c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]};
        const oracle::Cells merged{c[0] + c[4], c[1] + c[5], c[2] + c[6], c[3] + c[7]};
        const std::int64_t n = merged.n();
        const std::int64_t chance = (merged.a + merged.b) * (merged.a + merged.c) + (merged.c + merged.d) * (merged.b + merged.d);
        Rational df;
        if (chance == n * n || !oracle::delta_f_exact(cells, df)) {
            continue;
        }
        const Rational k = oracle::kappa_exact(merged);
        if (k <= 0) {
            continue;
        }
        const Rational abs_df = df < 0 ? -df : df;
        ASSERT_LE(abs_df, Rational(4) * (Rational(1) - k) / k);
        if (c[4] == 0) {
            ASSERT_LE(abs_df, Rational(2) * (Rational(1) - k) / k);
        }
        const Rational p(c[0], merged.a);
        ASSERT_LE(abs_df, Rational(4) * (Rational(1) - k) / ((p + 1) * k));
        ++compared;
    }
    EXPECT_GT(compared, 1000u);
}

TEST(VerifyRandomSplits, NoViolationsAndDeterministic) {
    const auto r1 = verify_random_splits(100000, 10000, 7, 2);
    const auto r2 = verify_random_splits(100000, 10000, 7, 1);
    EXPECT_TRUE(r1.ok());
    EXPECT_EQ(r1.checked, 100000u);
    EXPECT_EQ(r1.theorem_cases, r2.theorem_cases);
    EXPECT_EQ(r1.skipped_nonpositive_kappa, r2.skipped_nonpositive_kappa);
}

TEST(VerifySplit, DetectsViolations) {
    // A split whose cells break nothing still must report nothing; a forged
    // report shows violations are collected and ordered.
    VerificationReport report;
    report.violations.push_back({kExample, Check::WorstCaseBound, "x"});
    EXPECT_FALSE(report.ok());
    EXPECT_EQ(to_string(Check::WorstCaseBound), "worst_case_bound");
}

TEST(WorstCaseDeltaF, Examples) {
    const auto identical = worst_case_delta_f({50, 0, 0, 50});
    EXPECT_EQ(identical.max_abs_delta_f, 0.0);

    // Values frozen from an independent rational brute force.
    const auto small = worst_case_delta_f({2, 1, 1, 2});
    EXPECT_DOUBLE_EQ(small.max_abs_delta_f, 0.5);
    EXPECT_EQ(small.witness, (SplitTables{{0, 0, 1, 0}, {2, 1, 0, 2}}));
    EXPECT_LE(small.max_abs_delta_f, worst_case_bound(1.0 / 3.0));

    const auto big = worst_case_delta_f({40, 5, 10, 45});
    EXPECT_DOUBLE_EQ(big.max_abs_delta_f, 1.0 / 3.0);
    EXPECT_EQ(big.witness, (SplitTables{{0, 0, 10, 0}, {40, 5, 0, 45}}));
    EXPECT_GE(worst_case_bound(0.7) - big.max_abs_delta_f, 0.0);
}

TEST(WorstCaseDeltaF, AllNegativeTableStillHasDefinedSplit) {
    // Making every example truly positive defines both F-measures for any
    // nonempty table, so NoDefinedSplit cannot arise from a valid table.
    const auto r = worst_case_delta_f({0, 0, 0, 3});
    EXPECT_EQ(r.max_abs_delta_f, 0.0);
    EXPECT_EQ(r.witness.n(), 3);
}

TEST(WorstCaseDeltaF, LoosenessNonnegative) {
    for (std::int64_t a = 1; a <= 6; ++a) {
        for (std::int64_t b = 0; b <= 4; ++b) {
            for (std::int64_t c = 0; c <= 4; ++c) {
                for (std::int64_t d = 0; d <= 6; ++d) {
                    const ContingencyTable t(a, b, c, d);
                    if (has_degenerate_marginals(t) || kappa(t) <= 0.0) {
                        continue;
                    }
                    const double k = kappa(t);
                    EXPECT_GE(worst_case_bound(std::min(k, 1.0)) - worst_case_delta_f(t).max_abs_delta_f, -1e-12);
                }
            }
        }
    }
}

}  // namespace
}  // namespace spstop
