#include "spstop/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spstop/agreement.hpp"
#include "spstop/bounds.hpp"
#include "spstop/error.hpp"

namespace spstop {

void StoppingConfig::validate() const {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "threshold must lie in (0, 1)");
    }
    if (window < 1) {
        throw Error(ErrorCode::InvalidConfig, "window must be >= 1");
    }
    if (variance_cap && !(*variance_cap >= 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "variance cap must be nonnegative");
    }
    if (assumed_precision && !(*assumed_precision >= 0.0 && *assumed_precision <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "assumed precision must lie in [0, 1]");
    }
}

KappaEstimate make_estimate(std::size_t iteration, const ContingencyTable& table) {
    KappaEstimate est{iteration, table, std::nullopt, std::nullopt};
    if (!has_degenerate_marginals(table)) {
        est.value = kappa(table);
        est.variance = kappa_variance(table).variance;
    }
    return est;
}

bool meets_threshold(const KappaEstimate& est, const StoppingConfig& config) {
    if (!est.value) {
        return false;
    }
    return config.comparison == Comparison::Strict ? *est.value > config.threshold : *est.value >= config.threshold;
}

std::size_t trailing_run(std::span<const KappaEstimate> history, const StoppingConfig& config) {
    std::size_t run = 0;
    for (auto it = history.rbegin(); it != history.rend() && meets_threshold(*it, config); ++it) {
        ++run;
    }
    return run;
}

Decision decide(std::span<const KappaEstimate> history, const StoppingConfig& config) {
    if (history.empty() || trailing_run(history, config) < config.window) {
        return {};
    }
    const auto window = history.last(config.window);
    if (config.variance_cap) {
        std::size_t recommended = 0;
        for (const auto& est : window) {
            if (*est.variance > *config.variance_cap) {
                recommended = std::max(recommended, recommend_stop_set_size(est, *config.variance_cap));
            }
        }
        if (recommended > 0) {
            return {Decision::Kind::GrowStopSet, history.back().iteration,
                    std::max(recommended, config.min_stop_set)};
        }
    }
    return {Decision::Kind::Stop, history.back().iteration, 0};
}

std::pair<StoppingState, std::optional<KappaEstimate>> ingest(StoppingState state, const PredictionVector& predictions,
                                                              const StoppingConfig& config) {
    config.validate();
    if (state.last_predictions && state.last_predictions->size() != predictions.size()) {
        throw Error(ErrorCode::StopSetSizeChanged, "stop set had " + std::to_string(state.last_predictions->size()) +
                                                       " examples, got " + std::to_string(predictions.size()));
    }
    ++state.iterations_seen;
    std::optional<KappaEstimate> estimate;
    if (state.last_predictions) {
        estimate = make_estimate(state.iterations_seen, table_from_predictions(*state.last_predictions, predictions));
        state.kappa_history.push_back(*estimate);
        state.consecutive_above = meets_threshold(*estimate, config) ? state.consecutive_above + 1 : 0;
    }
    state.last_predictions = predictions;
    state.decision = decide(state.kappa_history, config);
    return {std::move(state), std::move(estimate)};
}

std::size_t recommend_stop_set_size(const KappaEstimate& est, double variance_target) {
    if (!est.variance) {
        throw Error(ErrorCode::DegenerateEstimate, "estimate has no variance");
    }
    if (!(variance_target > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "variance target must be positive");
    }
    const auto n = static_cast<std::size_t>(est.n());
    if (*est.variance <= variance_target) {
        return n;
    }
    const double exact = static_cast<double>(n) * *est.variance / variance_target;
    // Ratios of decimal inputs land a few ulps off whole numbers; do not round those up.
    const double nearest = std::round(exact);
    if (std::abs(exact - nearest) <= 1e-9 * exact) {
        return static_cast<std::size_t>(nearest);
    }
    return static_cast<std::size_t>(std::ceil(exact));
}

StoppingEngine::StoppingEngine(StoppingConfig config) : config_(std::move(config)) { config_.validate(); }

std::optional<KappaEstimate> StoppingEngine::ingest(const PredictionVector& predictions) {
    auto [next, estimate] = spstop::ingest(std::move(state_), predictions, config_);
    state_ = std::move(next);
    return estimate;
}

void StoppingEngine::reset_stop_set(const PredictionVector& predictions) {
    state_.kappa_history.clear();
    state_.consecutive_above = 0;
    state_.decision = {};
    state_.last_predictions = predictions;
}

StopReport StoppingEngine::report() const {
    StopReport r;
    r.stopped = state_.decision.kind == Decision::Kind::Stop;
    r.stopped_at_iteration = r.stopped ? state_.decision.iteration : 0;
    for (const auto& est : state_.kappa_history) {
        r.kappa_history.push_back(est.value);
    }
    if (!state_.kappa_history.empty()) {
        r.final_variance = state_.kappa_history.back().variance;
    }
    r.threshold = config_.threshold;
    r.window = config_.window;
    r.delta_f_bound_worst_case = worst_case_bound(config_.threshold);
    if (config_.assumed_precision) {
        r.delta_f_bound_precision_p = precision_bound(config_.threshold, *config_.assumed_precision);
    }
    return r;
}

}  // namespace spstop
