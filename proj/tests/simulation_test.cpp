#include "spstop/simulation.hpp"

#include <gtest/gtest.h>

#include <cmath>

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

// Kappa about 0.99 between the two models; symmetric disagreement.
SplitPopulationModel high_agreement() {
    return SplitPopulationModel({0.282, 0.001, 0.001, 0.016, 0.016, 0.001, 0.001, 0.682});
}

TEST(Rng, KnownOutputAndConversions) {
    // std::mt19937_64 is fully specified: the 10000th output of the default seed is fixed.
    std::mt19937_64 reference;
    reference.discard(9999);
    EXPECT_EQ(reference(), 9981545732273789042ULL);

    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        ASSERT_EQ(a.uniform01(), b.uniform01());
    }
    Rng c(1);
    for (int i = 0; i < 1000; ++i) {
        const double u = c.uniform01();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        ASSERT_LT(c.below(7), 7u);
    }
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(SplitPopulationModel, Validation) {
    EXPECT_EQ(code_of([] { SplitPopulationModel({0.5, 0.5, 0.1, 0, 0, 0, 0, 0}); }), ErrorCode::InvalidModel);
    EXPECT_EQ(code_of([] { SplitPopulationModel({1.5, -0.5, 0, 0, 0, 0, 0, 0}); }), ErrorCode::InvalidModel);
}

TEST(SplitPopulationModel, MarginalizesToAgreementTable) {
    const auto pop = high_agreement();
    const auto cells = pop.agreement_cells();
    EXPECT_NEAR(cells[0], 0.298, 1e-15);
    EXPECT_NEAR(cells[1] + cells[2], 0.004, 1e-15);
    EXPECT_NEAR(pop.observed_agreement(), 0.996, 1e-12);
    EXPECT_NEAR(pop.expected_agreement(), 0.3 * 0.3 + 0.7 * 0.7, 1e-12);
    EXPECT_NEAR(pop.kappa(), (0.996 - 0.58) / 0.42, 1e-12);
    EXPECT_EQ(code_of([] { SplitPopulationModel::point_mass(0).kappa(); }), ErrorCode::DegenerateMarginals);
}

TEST(SampleStopSet, PointMass) {
    const auto s = sample_stop_set(SplitPopulationModel::point_mass(0), 500, 3);
    for (std::size_t i = 0; i < s.size(); ++i) {
        ASSERT_EQ(s.truth[i], Label::Positive);
        ASSERT_EQ(s.prev[i], Label::Positive);
        ASSERT_EQ(s.curr[i], Label::Positive);
    }
    // Last cell alone must not leak into others through round-off.
    const auto last = split_counts(sample_stop_set(SplitPopulationModel::point_mass(7), 1000, 3));
    EXPECT_EQ(last.neg.d, 1000);
}

TEST(SampleStopSet, UniformCellFrequencies) {
    const std::size_t n = 1'000'000;
    const auto split = split_counts(sample_stop_set(SplitPopulationModel::uniform(), n, 2024));
    for (auto count : split.cells()) {
        EXPECT_NEAR(static_cast<double>(count) / n, 0.125, 0.002);
    }
}

TEST(SampleStopSet, Deterministic) {
    const auto a = sample_stop_set(high_agreement(), 1000, 9);
    const auto b = sample_stop_set(high_agreement(), 1000, 9);
    EXPECT_EQ(a.truth, b.truth);
    EXPECT_EQ(a.prev, b.prev);
    EXPECT_EQ(a.curr, b.curr);
    const auto c = sample_stop_set(high_agreement(), 1000, 10);
    EXPECT_NE(split_counts(a), split_counts(c));
    EXPECT_EQ(code_of([] { sample_stop_set(high_agreement(), 0, 1); }), ErrorCode::InvalidModel);
}

TEST(ConvergingSequence, ZeroFlipRateIsConstant) {
    ConvergingSequenceSpec spec;
    spec.flip_rate_initial = 0.0;
    const auto truth = sample_stop_set(SplitPopulationModel::uniform(), 300, 1).truth;
    const auto seq = converging_model_sequence(spec, truth, 6, 4);
    for (std::size_t t = 1; t < seq.size(); ++t) {
        EXPECT_EQ(seq[t], seq[0]);
        EXPECT_EQ(kappa(table_from_predictions(seq[t - 1], seq[t])), 1.0);
    }
}

TEST(ConvergingSequence, AgreementTracksFlipRate) {
    ConvergingSequenceSpec spec;
    spec.flip_rate_initial = 0.5;
    spec.flip_decay = 0.5;
    const std::size_t n = 2000;
    const int seeds = 100;
    const std::size_t iterations = 8;
    std::vector<double> mean_po(iterations, 0.0);
    for (int s = 0; s < seeds; ++s) {
        const auto truth = sample_stop_set(SplitPopulationModel::uniform(), n, 1000 + s).truth;
        const auto seq = converging_model_sequence(spec, truth, iterations, s);
        for (std::size_t t = 1; t < iterations; ++t) {
            mean_po[t] += observed_agreement(table_from_predictions(seq[t - 1], seq[t])) / seeds;
        }
    }
    for (std::size_t t = 1; t < iterations; ++t) {
        const double r = spec.flip_rate(t);
        const double sigma = std::sqrt(r * (1 - r) / (double(n) * seeds));
        EXPECT_NEAR(mean_po[t], 1.0 - r, 3 * sigma + 1e-12) << "t=" << t;
        if (t > 1) {
            EXPECT_GT(mean_po[t], mean_po[t - 1]);
        }
    }
}

TEST(ConvergingSequence, ConstantFlipsPlateauBelowThreshold) {
    SimConfig cfg;
    ConvergingSequenceSpec spec;
    spec.flip_rate_initial = 0.05;
    spec.flip_decay = 1.0;
    cfg.source = spec;
    cfg.iterations = 40;
    const auto trace = run_active_learning(cfg);
    EXPECT_FALSE(trace.report.stopped);
    for (const auto& rec : trace.records) {
        if (rec.estimate) {
            EXPECT_LT(*rec.estimate->value, 0.95);
        }
    }
}

TEST(RunActiveLearning, ConvergingStopsAtSeededGolden) {
    SimConfig cfg;  // converging, flip_decay 0.5, T = 0.99, k = 3
    const auto trace = run_active_learning(cfg);
    ASSERT_TRUE(trace.report.stopped);
    EXPECT_EQ(trace.report.stopped_at_iteration, 9u);
    EXPECT_EQ(trace.records.size(), 9u);
    ASSERT_TRUE(trace.final_delta_f.has_value());
    EXPECT_LE(std::abs(*trace.final_delta_f), worst_case_bound(0.99));
}

TEST(RunActiveLearning, NoFlipsStopsAfterWindow) {
    SimConfig cfg;
    ConvergingSequenceSpec spec;
    spec.flip_rate_initial = 0.0;
    cfg.source = spec;
    const auto trace = run_active_learning(cfg);
    ASSERT_TRUE(trace.report.stopped);
    EXPECT_EQ(trace.report.stopped_at_iteration, cfg.stopping.window + 1);
}

TEST(RunActiveLearning, Deterministic) {
    SimConfig cfg;
    cfg.seed = 77;
    const auto a = run_active_learning(cfg);
    const auto b = run_active_learning(cfg);
    EXPECT_EQ(a.predictions, b.predictions);
    EXPECT_EQ(a.report.kappa_history, b.report.kappa_history);
    EXPECT_EQ(a.report.stopped_at_iteration, b.report.stopped_at_iteration);
}

TEST(RunActiveLearning, LearnerSelectionsBothTerminate) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        for (Selection sel : {Selection::UncertaintyNearBoundary, Selection::Random}) {
            SimConfig cfg;
            LearnerSpec spec;
            spec.selection = sel;
            cfg.source = spec;
            cfg.iterations = 300;
            cfg.seed = seed;
            const auto trace = run_active_learning(cfg);
            EXPECT_TRUE(trace.report.stopped) << "seed " << seed;
            if (trace.final_delta_f) {
                EXPECT_LE(std::abs(*trace.final_delta_f), trace.report.delta_f_bound_worst_case);
            }
        }
    }
}

TEST(RunActiveLearning, LearnerSelectionChangesTrace) {
    SimConfig cfg;
    LearnerSpec spec;
    cfg.source = spec;
    cfg.iterations = 300;
    const auto uncertain = run_active_learning(cfg);
    spec.selection = Selection::Random;
    cfg.source = spec;
    const auto random = run_active_learning(cfg);
    EXPECT_EQ(uncertain.truth, random.truth);  // same stop set
    EXPECT_NE(uncertain.predictions, random.predictions);
}

TEST(RunActiveLearning, PopulationModeKeepsPopulationKappa) {
    SimConfig cfg;
    cfg.source = SplitPopulationModel({0.25, 0.05, 0.05, 0.15, 0.05, 0.05, 0.05, 0.35});
    cfg.iterations = 10;
    const auto trace = run_active_learning(cfg);
    EXPECT_FALSE(trace.report.stopped);
    for (const auto& rec : trace.records) {
        if (rec.estimate) {
            EXPECT_LT(*rec.estimate->value, 0.9);
        }
    }
}

TEST(RunActiveLearning, GrowsStopSetWhenVarianceCapped) {
    SimConfig cfg;
    cfg.stop_set_size = 300;
    cfg.iterations = 40;
    cfg.stopping.variance_cap = 1e-6;
    cfg.stopping.min_stop_set = 0;
    ConvergingSequenceSpec spec;
    spec.flip_decay = 0.8;
    cfg.source = spec;
    const auto trace = run_active_learning(cfg);
    bool grew = false;
    for (const auto& rec : trace.records) {
        grew = grew || rec.decision.kind == Decision::Kind::GrowStopSet;
        if (rec.decision.kind == Decision::Kind::Stop) {
            EXPECT_LE(*rec.estimate->variance, 1e-6);
        }
    }
    EXPECT_TRUE(grew);
    EXPECT_GT(trace.truth.size(), 300u);
}

TEST(SimConfig, Validation) {
    SimConfig cfg;
    cfg.iterations = 1;
    EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::InvalidConfig);
    cfg.iterations = 100;
    LearnerSpec spec;
    spec.pool_size = 50;
    cfg.source = spec;
    EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::InvalidConfig);
    ConvergingSequenceSpec bad;
    bad.flip_decay = 0.0;
    cfg.source = bad;
    EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::InvalidConfig);
}

TEST(TransferGap, Examples) {
    const auto point = transfer_gap(SplitPopulationModel::point_mass(0), 100, 1000, 5);
    EXPECT_EQ(point.gap, 0.0);
    EXPECT_EQ(point.delta_f_stop, 0.0);

    const auto same = transfer_gap(high_agreement(), 5000, 5000, 12, 12);
    EXPECT_EQ(same.gap, 0.0);

    const auto diff = transfer_gap(high_agreement(), 5000, 5000, 12);
    EXPECT_GE(diff.gap, 0.0);
    EXPECT_EQ(diff.gap, std::abs(diff.delta_f_stop - diff.delta_f_stream));

    EXPECT_EQ(code_of([] { transfer_gap(SplitPopulationModel::point_mass(7), 10, 10, 1); }), ErrorCode::UndefinedF);
}

}  // namespace
}  // namespace spstop
