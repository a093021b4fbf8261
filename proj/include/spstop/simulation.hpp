#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "spstop/contingency.hpp"
#include "spstop/rng.hpp"
#include "spstop/split_oracle.hpp"
#include "spstop/stopping.hpp"

namespace spstop {

/// Joint distribution over (truth, previous-model label, current-model label).
/// Cell order matches SplitTables::cells(): truth +1 block (++, +-, -+, --)
/// then truth -1 block, where each pair is (prev, curr).
class SplitPopulationModel {
public:
    /// Raises InvalidModel if a probability is negative or the sum is off by more than 1e-12.
    explicit SplitPopulationModel(const std::array<double, 8>& joint);

    static SplitPopulationModel point_mass(std::size_t cell);
    static SplitPopulationModel uniform();

    const std::array<double, 8>& joint() const { return joint_; }

    /// Truth marginalized away: (pi_{++}, pi_{+-}, pi_{-+}, pi_{--}).
    std::array<double, 4> agreement_cells() const;
    double observed_agreement() const;
    double expected_agreement() const;
    /// Population Kappa; raises DegenerateMarginals when pi_e = 1.
    double kappa() const;

private:
    std::array<double, 8> joint_;
};

/// Labels drawn for one sample of examples.
struct LabeledSample {
    std::vector<Label> truth;
    std::vector<Label> prev;
    std::vector<Label> curr;

    std::size_t size() const { return truth.size(); }
};

/// Tabulate (truth, prev, curr) triples into split counts.
SplitTables split_counts(std::span<const Label> truth, std::span<const Label> prev, std::span<const Label> curr);
SplitTables split_counts(const LabeledSample& sample);

/// `n` independent draws from the joint. Raises InvalidModel for n = 0.
LabeledSample sample_stop_set(const SplitPopulationModel& pop, std::size_t n, std::uint64_t seed);

struct ConvergingSequenceSpec {
    double base_accuracy = 0.8;      // chance the first model agrees with truth
    double flip_rate_initial = 0.2;
    double flip_decay = 0.5;         // in (0, 1]; 1 keeps the flip rate constant
    double positive_rate = 0.3;      // truth prior when truth is generated

    double flip_rate(std::size_t iteration) const;
    /// Raises InvalidConfig.
    void validate() const;
};

/// Iteration 0 labels each example correctly with probability base_accuracy;
/// iteration t flips each of iteration t-1's labels independently with
/// probability flip_rate(t).
std::vector<PredictionVector> converging_model_sequence(const ConvergingSequenceSpec& spec,
                                                        std::span<const Label> truth, std::size_t iterations,
                                                        std::uint64_t seed);

enum class Selection { UncertaintyNearBoundary, Random };

struct LearnerSpec {
    std::size_t feature_dim = 10;
    std::size_t pool_size = 5000;
    std::size_t batch_size = 10;
    Selection selection = Selection::UncertaintyNearBoundary;
};

/// Where the per-iteration predictions come from.
///  - ConvergingSequenceSpec: random flips with a decaying rate.
///  - SplitPopulationModel: each iteration redraws the current label from
///    the joint's conditional given (truth, previous label).
///  - LearnerSpec: a linear mistake-driven learner trained by pool-based
///    active learning on a synthetic linearly separable concept.
using PredictionSource = std::variant<ConvergingSequenceSpec, SplitPopulationModel, LearnerSpec>;

struct SimConfig {
    PredictionSource source = ConvergingSequenceSpec{};
    std::size_t stop_set_size = 2000;
    std::size_t iterations = 30;
    std::uint64_t seed = 1;
    StoppingConfig stopping;
    /// Act on GrowStopSet by drawing extra stop-set examples.
    bool regrow_stop_set = true;

    /// Raises InvalidConfig.
    void validate() const;
};

struct IterationRecord {
    std::size_t iteration;
    std::size_t stop_set_size;
    std::optional<KappaEstimate> estimate;
    Decision decision;
    std::optional<double> f_vs_truth;  // empty when undefined
};

struct SimulationTrace {
    std::vector<Label> truth;                  // final stop set
    std::vector<PredictionVector> predictions; // one per iteration run
    std::vector<IterationRecord> records;
    StopReport report;
    /// Truth-conditioned split of the final two models at a stop.
    std::optional<SplitTables> final_split;
    std::optional<double> final_delta_f;
    /// Precision of the positive conjunction of the final two models.
    std::optional<double> final_conjunction_precision;
};

/// Drive a StoppingEngine until it stops or the iteration budget runs out.
SimulationTrace run_active_learning(const SimConfig& cfg);

struct TransferGap {
    double delta_f_stop;
    double delta_f_stream;
    double gap;
};

/// dF of the two models on a stop set and on an independent stream drawn from
/// the same joint. Equal seeds and sizes give identical samples.
TransferGap transfer_gap(const SplitPopulationModel& pop, std::size_t n_stop, std::size_t n_stream,
                         std::uint64_t seed_stop, std::uint64_t seed_stream);
/// Single-seed form; the two samples use independent sub-streams.
TransferGap transfer_gap(const SplitPopulationModel& pop, std::size_t n_stop, std::size_t n_stream,
                         std::uint64_t seed);

}  // namespace spstop
