#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "spstop/contingency.hpp"

namespace spstop {

enum class Comparison { Strict, NonStrict };

struct StoppingConfig {
    double threshold = 0.99;
    std::size_t window = 3;
    Comparison comparison = Comparison::Strict;
    /// When set, a would-be stop whose window holds a variance above the cap
    /// becomes GrowStopSet.
    std::optional<double> variance_cap;
    /// Floor applied to GrowStopSet recommendations.
    std::size_t min_stop_set = 2000;
    /// Precision assumed for the positive conjunction of the last two models;
    /// adds the tightened bound to the stop report.
    std::optional<double> assumed_precision;

    /// Raises InvalidConfig.
    void validate() const;
};

/// Kappa between the models of iterations `iteration - 1` and `iteration`.
/// `value` and `variance` are empty when the marginals are degenerate.
struct KappaEstimate {
    std::size_t iteration;
    ContingencyTable table;
    std::optional<double> value;
    std::optional<double> variance;

    std::int64_t n() const { return table.n(); }
    bool degenerate() const { return !value.has_value(); }
};

/// Estimate for a table; degenerate marginals give an empty value.
KappaEstimate make_estimate(std::size_t iteration, const ContingencyTable& table);

struct Decision {
    enum class Kind { Continue, Stop, GrowStopSet };
    Kind kind = Kind::Continue;
    std::size_t iteration = 0;       // iteration of the latest estimate (Stop)
    std::size_t recommended_n = 0;   // GrowStopSet only

    friend bool operator==(const Decision&, const Decision&) = default;
};

struct StoppingState {
    std::optional<PredictionVector> last_predictions;
    std::size_t iterations_seen = 0;
    std::vector<KappaEstimate> kappa_history;
    std::size_t consecutive_above = 0;
    Decision decision;
};

/// True when the estimate clears the threshold under the configured comparison.
/// Degenerate estimates never do.
bool meets_threshold(const KappaEstimate& est, const StoppingConfig& config);

/// Length of the maximal suffix of `history` that meets the threshold.
std::size_t trailing_run(std::span<const KappaEstimate> history, const StoppingConfig& config);

/// Stopping decision from the trailing window of `history` alone.
Decision decide(std::span<const KappaEstimate> history, const StoppingConfig& config);

/// Pure transition: the first call only records the predictions; later calls
/// tabulate against the previous iteration and append an estimate.
/// Raises StopSetSizeChanged if the prediction length changes.
std::pair<StoppingState, std::optional<KappaEstimate>> ingest(StoppingState state, const PredictionVector& predictions,
                                                              const StoppingConfig& config);

/// Stop-set size that brings `est`'s variance down to `variance_target`, using
/// the 1/n scaling of the variance at fixed proportions. Returns est.n() when
/// the target is already met. Raises DegenerateEstimate when the variance is
/// undefined, InvalidConfig for a nonpositive target.
std::size_t recommend_stop_set_size(const KappaEstimate& est, double variance_target);

struct StopReport {
    bool stopped = false;
    std::size_t stopped_at_iteration = 0;
    std::vector<std::optional<double>> kappa_history;
    std::optional<double> final_variance;
    double threshold = 0;
    std::size_t window = 0;
    double delta_f_bound_worst_case = 0;
    std::optional<double> delta_f_bound_precision_p;
};

/// Owns the state of one stopping run.
class StoppingEngine {
public:
    explicit StoppingEngine(StoppingConfig config);

    std::optional<KappaEstimate> ingest(const PredictionVector& predictions);
    /// Drop the history and take `predictions` as the new baseline, e.g. after
    /// the stop set has been regrown.
    void reset_stop_set(const PredictionVector& predictions);

    const Decision& decision() const { return state_.decision; }
    const StoppingState& state() const { return state_; }
    const StoppingConfig& config() const { return config_; }
    StopReport report() const;

private:
    StoppingConfig config_;
    StoppingState state_;
};

}  // namespace spstop
