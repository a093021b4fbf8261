#include "spstop/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "spstop/error.hpp"

namespace spstop {
namespace {

// Sub-stream ids under the run seed.
constexpr std::uint64_t kTruthStream = 0;
constexpr std::uint64_t kModelStream = 1;
constexpr std::uint64_t kGrowStream = 2;
constexpr std::uint64_t kPoolStream = 3;
constexpr std::uint64_t kSelectStream = 4;

Label to_label(bool positive) { return positive ? Label::Positive : Label::Negative; }

struct Triple {
    Label truth, prev, curr;
};

Triple decode_cell(std::size_t cell) {
    const std::size_t j = cell % 4;
    return {to_label(cell < 4), to_label(j < 2), to_label(j % 2 == 0)};
}

std::size_t encode_cell(Label truth, Label prev, Label curr) {
    return (truth == Label::Positive ? 0 : 4) + (prev == Label::Positive ? 0 : 2) + (curr == Label::Positive ? 0 : 1);
}

std::size_t draw_cell(Rng& rng, const std::array<double, 8>& cumulative) {
    const double u = rng.uniform01();
    for (std::size_t k = 0; k < 7; ++k) {
        if (u < cumulative[k]) {
            return k;
        }
    }
    return 7;
}

std::array<double, 8> cumulative_of(const std::array<double, 8>& joint) {
    std::array<double, 8> cum{};
    std::partial_sum(joint.begin(), joint.end(), cum.begin());
    // Round-off must not leak draws into zero-probability tail cells.
    std::size_t last = 7;
    while (last > 0 && joint[last] == 0.0) {
        --last;
    }
    std::fill(cum.begin() + static_cast<std::ptrdiff_t>(last), cum.end(), 2.0);
    return cum;
}

std::optional<double> f_against_truth(std::span<const Label> truth, const PredictionVector& pred) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = truth[i] == Label::Positive;
        const bool p = pred[i] == Label::Positive;
        tp += t && p;
        fp += !t && p;
        fn += t && !p;
    }
    const std::int64_t den = 2 * tp + fp + fn;
    if (den == 0) {
        return std::nullopt;
    }
    return static_cast<double>(2 * tp) / static_cast<double>(den);
}

// A model sequence evaluated on a (growable) stop set.
class PredictionProcess {
public:
    virtual ~PredictionProcess() = default;
    virtual void advance() = 0;
    virtual PredictionVector predict() const = 0;
    virtual void grow(std::size_t new_size) = 0;
    virtual const std::vector<Label>& truth() const = 0;
};

class ConvergingProcess final : public PredictionProcess {
public:
    ConvergingProcess(ConvergingSequenceSpec spec, std::vector<Label> truth, std::uint64_t seed)
        : spec_(spec), truth_(std::move(truth)), seed_(seed) {
        Rng rng(derive_seed(seed_, 0));
        labels_.reserve(truth_.size());
        for (Label t : truth_) {
            labels_.push_back(initial_label(rng, t));
        }
    }

    void advance() override {
        ++iteration_;
        Rng rng(derive_seed(seed_, iteration_));
        const double rate = spec_.flip_rate(iteration_);
        for (auto& label : labels_) {
            if (rng.bernoulli(rate)) {
                label = label == Label::Positive ? Label::Negative : Label::Positive;
            }
        }
    }

    PredictionVector predict() const override { return PredictionVector(labels_); }

    void grow(std::size_t new_size) override {
        Rng rng(derive_seed(derive_seed(seed_, kGrowStream), ++growths_));
        while (truth_.size() < new_size) {
            const Label t = to_label(rng.bernoulli(spec_.positive_rate));
            truth_.push_back(t);
            labels_.push_back(initial_label(rng, t));
        }
    }

    const std::vector<Label>& truth() const override { return truth_; }

private:
    Label initial_label(Rng& rng, Label t) const {
        if (rng.bernoulli(spec_.base_accuracy)) {
            return t;
        }
        return t == Label::Positive ? Label::Negative : Label::Positive;
    }

    ConvergingSequenceSpec spec_;
    std::vector<Label> truth_;
    std::vector<Label> labels_;
    std::uint64_t seed_;
    std::size_t iteration_ = 0;
    std::uint64_t growths_ = 0;
};

// Each iteration redraws every label from pi(curr | truth, prev).
class PopulationProcess final : public PredictionProcess {
public:
    PopulationProcess(const SplitPopulationModel& pop, std::size_t n, std::uint64_t seed)
        : pop_(pop), seed_(seed) {
        append(n, derive_seed(seed_, 0));
    }

    void advance() override {
        ++iteration_;
        Rng rng(derive_seed(seed_, iteration_));
        const auto& joint = pop_.joint();
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            const double stay = joint[encode_cell(truth_[i], labels_[i], labels_[i])];
            const double flip = joint[encode_cell(truth_[i], labels_[i],
                                                  labels_[i] == Label::Positive ? Label::Negative : Label::Positive)];
            const double u = rng.uniform01();
            if (stay + flip > 0.0 && u * (stay + flip) >= stay) {
                labels_[i] = labels_[i] == Label::Positive ? Label::Negative : Label::Positive;
            }
        }
    }

    PredictionVector predict() const override { return PredictionVector(labels_); }

    void grow(std::size_t new_size) override {
        if (new_size > truth_.size()) {
            append(new_size - truth_.size(), derive_seed(derive_seed(seed_, kGrowStream), ++growths_));
        }
    }

    const std::vector<Label>& truth() const override { return truth_; }

private:
    void append(std::size_t count, std::uint64_t seed) {
        const LabeledSample s = sample_stop_set(pop_, count, seed);
        truth_.insert(truth_.end(), s.truth.begin(), s.truth.end());
        labels_.insert(labels_.end(), s.curr.begin(), s.curr.end());
    }

    SplitPopulationModel pop_;
    std::vector<Label> truth_;
    std::vector<Label> labels_;
    std::uint64_t seed_;
    std::size_t iteration_ = 0;
    std::uint64_t growths_ = 0;
};

// Linear classifier trained with additive mistake-driven updates on batches
// picked from an unlabeled pool. Data: x uniform in [-1, 1]^dim labeled by the
// sign of a hidden weight vector.
class LearnerProcess final : public PredictionProcess {
public:
    LearnerProcess(const LearnerSpec& spec, std::size_t stop_set_size, std::uint64_t seed)
        : spec_(spec), seed_(seed), select_rng_(derive_seed(seed, kSelectStream)) {
        Rng concept_rng(derive_seed(seed, kTruthStream));
        target_.resize(spec_.feature_dim);
        for (auto& w : target_) {
            w = concept_rng.uniform(-1.0, 1.0);
        }
        weights_.assign(spec_.feature_dim, 0.0);

        Rng pool_rng(derive_seed(seed, kPoolStream));
        pool_ = draw_points(pool_rng, spec_.pool_size);
        labeled_.assign(spec_.pool_size, false);
        append_stop_set(stop_set_size, derive_seed(seed, kModelStream));
        train_on_next_batch();
    }

    void advance() override { train_on_next_batch(); }

    PredictionVector predict() const override {
        std::vector<Label> out;
        out.reserve(stop_points_.size());
        for (const auto& x : stop_points_) {
            out.push_back(to_label(score(weights_, x) >= 0.0));
        }
        return PredictionVector(std::move(out));
    }

    void grow(std::size_t new_size) override {
        if (new_size > stop_points_.size()) {
            append_stop_set(new_size - stop_points_.size(), derive_seed(derive_seed(seed_, kGrowStream), ++growths_));
        }
    }

    const std::vector<Label>& truth() const override { return stop_truth_; }

private:
    using Point = std::vector<double>;

    static double score(const std::vector<double>& w, const Point& x) {
        return std::inner_product(w.begin(), w.end(), x.begin(), 0.0);
    }

    std::vector<Point> draw_points(Rng& rng, std::size_t count) const {
        std::vector<Point> points(count, Point(spec_.feature_dim));
        for (auto& p : points) {
            for (auto& v : p) {
                v = rng.uniform(-1.0, 1.0);
            }
        }
        return points;
    }

    Label true_label(const Point& x) const { return to_label(score(target_, x) >= 0.0); }

    void append_stop_set(std::size_t count, std::uint64_t seed) {
        Rng rng(seed);
        for (auto& p : draw_points(rng, count)) {
            stop_truth_.push_back(true_label(p));
            stop_points_.push_back(std::move(p));
        }
    }

    std::vector<std::size_t> select_batch() {
        std::vector<std::size_t> unlabeled;
        for (std::size_t i = 0; i < pool_.size(); ++i) {
            if (!labeled_[i]) {
                unlabeled.push_back(i);
            }
        }
        const std::size_t k = std::min(spec_.batch_size, unlabeled.size());
        if (spec_.selection == Selection::Random) {
            // Partial Fisher-Yates.
            for (std::size_t i = 0; i < k; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(select_rng_.below(unlabeled.size() - i));
                std::swap(unlabeled[i], unlabeled[j]);
            }
        } else {
            std::vector<double> margin(pool_.size());
            for (std::size_t i : unlabeled) {
                margin[i] = std::abs(score(weights_, pool_[i]));
            }
            std::partial_sort(unlabeled.begin(), unlabeled.begin() + static_cast<std::ptrdiff_t>(k), unlabeled.end(),
                              [&](std::size_t x, std::size_t y) {
                                  return margin[x] != margin[y] ? margin[x] < margin[y] : x < y;
                              });
        }
        unlabeled.resize(k);
        return unlabeled;
    }

    void train_on_next_batch() {
        for (std::size_t i : select_batch()) {
            labeled_[i] = true;
            const double y = true_label(pool_[i]) == Label::Positive ? 1.0 : -1.0;
            if (y * score(weights_, pool_[i]) <= 0.0) {
                for (std::size_t j = 0; j < weights_.size(); ++j) {
                    weights_[j] += y * pool_[i][j];
                }
            }
        }
    }

    LearnerSpec spec_;
    std::uint64_t seed_;
    Rng select_rng_;
    std::vector<double> target_;
    std::vector<double> weights_;
    std::vector<Point> pool_;
    std::vector<bool> labeled_;
    std::vector<Point> stop_points_;
    std::vector<Label> stop_truth_;
    std::uint64_t growths_ = 0;
};

std::vector<Label> draw_truth(std::size_t n, double positive_rate, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Label> truth(n);
    for (auto& t : truth) {
        t = to_label(rng.bernoulli(positive_rate));
    }
    return truth;
}

std::unique_ptr<PredictionProcess> make_process(const SimConfig& cfg) {
    if (const auto* spec = std::get_if<ConvergingSequenceSpec>(&cfg.source)) {
        return std::make_unique<ConvergingProcess>(
            *spec, draw_truth(cfg.stop_set_size, spec->positive_rate, derive_seed(cfg.seed, kTruthStream)),
            derive_seed(cfg.seed, kModelStream));
    }
    if (const auto* pop = std::get_if<SplitPopulationModel>(&cfg.source)) {
        return std::make_unique<PopulationProcess>(*pop, cfg.stop_set_size, derive_seed(cfg.seed, kModelStream));
    }
    return std::make_unique<LearnerProcess>(std::get<LearnerSpec>(cfg.source), cfg.stop_set_size, cfg.seed);
}

}  // namespace

SplitPopulationModel::SplitPopulationModel(const std::array<double, 8>& joint) : joint_(joint) {
    double sum = 0.0;
    for (double p : joint_) {
        if (!(p >= 0.0)) {
            throw Error(ErrorCode::InvalidModel, "joint probabilities must be nonnegative");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw Error(ErrorCode::InvalidModel, "joint probabilities sum to " + std::to_string(sum));
    }
}

SplitPopulationModel SplitPopulationModel::point_mass(std::size_t cell) {
    if (cell >= 8) {
        throw Error(ErrorCode::InvalidModel, "cell index out of range");
    }
    std::array<double, 8> joint{};
    joint[cell] = 1.0;
    return SplitPopulationModel(joint);
}

SplitPopulationModel SplitPopulationModel::uniform() {
    std::array<double, 8> joint;
    joint.fill(0.125);
    return SplitPopulationModel(joint);
}

std::array<double, 4> SplitPopulationModel::agreement_cells() const {
    return {joint_[0] + joint_[4], joint_[1] + joint_[5], joint_[2] + joint_[6], joint_[3] + joint_[7]};
}

double SplitPopulationModel::observed_agreement() const {
    const auto p = agreement_cells();
    return p[0] + p[3];
}

double SplitPopulationModel::expected_agreement() const {
    const auto p = agreement_cells();
    return (p[0] + p[1]) * (p[0] + p[2]) + (p[2] + p[3]) * (p[1] + p[3]);
}

double SplitPopulationModel::kappa() const {
    const double pe = expected_agreement();
    if (1.0 - pe <= 1e-15) {
        throw Error(ErrorCode::DegenerateMarginals, "population chance agreement is 1");
    }
    return (observed_agreement() - pe) / (1.0 - pe);
}

SplitTables split_counts(std::span<const Label> truth, std::span<const Label> prev, std::span<const Label> curr) {
    if (truth.size() != prev.size() || truth.size() != curr.size()) {
        throw Error(ErrorCode::LengthMismatch, "truth and prediction lengths differ");
    }
    std::array<std::int64_t, 8> cells{};
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++cells[encode_cell(truth[i], prev[i], curr[i])];
    }
    return SplitTables::from_cells(cells);
}

SplitTables split_counts(const LabeledSample& sample) { return split_counts(sample.truth, sample.prev, sample.curr); }

LabeledSample sample_stop_set(const SplitPopulationModel& pop, std::size_t n, std::uint64_t seed) {
    if (n == 0) {
        throw Error(ErrorCode::InvalidModel, "sample size must be >= 1");
    }
    const auto cumulative = cumulative_of(pop.joint());
    Rng rng(seed);
    LabeledSample s;
    s.truth.reserve(n);
    s.prev.reserve(n);
    s.curr.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Triple t = decode_cell(draw_cell(rng, cumulative));
        s.truth.push_back(t.truth);
        s.prev.push_back(t.prev);
        s.curr.push_back(t.curr);
    }
    return s;
}

double ConvergingSequenceSpec::flip_rate(std::size_t iteration) const {
    return flip_rate_initial * std::pow(flip_decay, static_cast<double>(iteration));
}

void ConvergingSequenceSpec::validate() const {
    auto fraction = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!fraction(base_accuracy) || !fraction(flip_rate_initial) || !fraction(positive_rate)) {
        throw Error(ErrorCode::InvalidConfig, "accuracy, flip rate and positive rate must lie in [0, 1]");
    }
    if (!(flip_decay > 0.0 && flip_decay <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "flip decay must lie in (0, 1]");
    }
}

std::vector<PredictionVector> converging_model_sequence(const ConvergingSequenceSpec& spec,
                                                        std::span<const Label> truth, std::size_t iterations,
                                                        std::uint64_t seed) {
    spec.validate();
    if (iterations < 2) {
        throw Error(ErrorCode::InvalidConfig, "need at least two iterations");
    }
    if (truth.empty()) {
        throw Error(ErrorCode::InvalidConfig, "truth must not be empty");
    }
    ConvergingProcess process(spec, std::vector<Label>(truth.begin(), truth.end()), seed);
    std::vector<PredictionVector> out;
    out.reserve(iterations);
    out.push_back(process.predict());
    for (std::size_t t = 1; t < iterations; ++t) {
        process.advance();
        out.push_back(process.predict());
    }
    return out;
}

void SimConfig::validate() const {
    if (stop_set_size < 1) {
        throw Error(ErrorCode::InvalidConfig, "stop set size must be >= 1");
    }
    if (iterations < 2) {
        throw Error(ErrorCode::InvalidConfig, "need at least two iterations");
    }
    stopping.validate();
    if (const auto* spec = std::get_if<ConvergingSequenceSpec>(&source)) {
        spec->validate();
    } else if (const auto* learner = std::get_if<LearnerSpec>(&source)) {
        if (learner->feature_dim < 1 || learner->batch_size < 1) {
            throw Error(ErrorCode::InvalidConfig, "feature_dim and batch_size must be >= 1");
        }
        if (learner->pool_size < learner->batch_size * iterations) {
            throw Error(ErrorCode::InvalidConfig, "pool_size must be >= batch_size * iterations");
        }
    }
}

SimulationTrace run_active_learning(const SimConfig& cfg) {
    cfg.validate();
    auto process = make_process(cfg);
    StoppingEngine engine(cfg.stopping);
    SimulationTrace trace;
    std::optional<PredictionVector> previous;

    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
        if (it > 1) {
            process->advance();
        }
        PredictionVector current = process->predict();
        auto estimate = engine.ingest(current);
        const Decision decision = engine.decision();
        trace.records.push_back(
            {it, current.size(), estimate, decision, f_against_truth(process->truth(), current)});
        trace.predictions.push_back(current);

        if (decision.kind == Decision::Kind::Stop) {
            const SplitTables split = split_counts(process->truth(), previous->labels(), current.labels());
            trace.final_split = split;
            try {
                trace.final_delta_f = truth_f_measures(split).delta_f;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::UndefinedF) {
                    throw;
                }
            }
            const std::int64_t a = split.pos.a + split.neg.a;
            if (a > 0) {
                trace.final_conjunction_precision = static_cast<double>(split.pos.a) / static_cast<double>(a);
            }
            break;
        }
        if (decision.kind == Decision::Kind::GrowStopSet && cfg.regrow_stop_set) {
            process->grow(decision.recommended_n);
            current = process->predict();
            engine.reset_stop_set(current);
        }
        previous = std::move(current);
    }
    trace.truth = process->truth();
    trace.report = engine.report();
    return trace;
}

TransferGap transfer_gap(const SplitPopulationModel& pop, std::size_t n_stop, std::size_t n_stream,
                         std::uint64_t seed_stop, std::uint64_t seed_stream) {
    const double stop = truth_f_measures(split_counts(sample_stop_set(pop, n_stop, seed_stop))).delta_f;
    const double stream = truth_f_measures(split_counts(sample_stop_set(pop, n_stream, seed_stream))).delta_f;
    return {stop, stream, std::abs(stop - stream)};
}

TransferGap transfer_gap(const SplitPopulationModel& pop, std::size_t n_stop, std::size_t n_stream,
                         std::uint64_t seed) {
    return transfer_gap(pop, n_stop, n_stream, derive_seed(seed, 0), derive_seed(seed, 1));
}

}  // namespace spstop
