#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace spstop {

/// Binary class label as produced by a classifier on one stop-set example.
enum class Label : std::int8_t { Negative = -1, Positive = 1 };

/// Label stream of one model over a fixed stop set. Never empty.
class PredictionVector {
public:
    explicit PredictionVector(std::vector<Label> labels);

    /// Accepts raw integers; anything other than +1/-1 raises InvalidLabel.
    static PredictionVector from_ints(std::span<const int> values);
    static PredictionVector from_ints(std::initializer_list<int> values);

    std::size_t size() const noexcept { return labels_.size(); }
    Label operator[](std::size_t i) const { return labels_[i]; }
    std::span<const Label> labels() const noexcept { return labels_; }

    friend bool operator==(const PredictionVector&, const PredictionVector&) = default;

private:
    std::vector<Label> labels_;
};

/// 2x2 agreement counts between a previous model (rows) and a current model (columns).
///
///                    curr +   curr -
///     prev +           a        b
///     prev -           c        d
class ContingencyTable {
public:
    /// Raises InvalidTable on negative counts or an empty table.
    ContingencyTable(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d);

    std::int64_t a() const noexcept { return a_; }
    std::int64_t b() const noexcept { return b_; }
    std::int64_t c() const noexcept { return c_; }
    std::int64_t d() const noexcept { return d_; }
    std::int64_t n() const noexcept { return a_ + b_ + c_ + d_; }

    /// Every count multiplied by `factor` (>= 1).
    ContingencyTable scaled(std::int64_t factor) const;
    /// Swap the roles of the two models (b <-> c).
    ContingencyTable transposed() const { return {a_, c_, b_, d_}; }

    friend bool operator==(const ContingencyTable&, const ContingencyTable&) = default;

private:
    std::int64_t a_, b_, c_, d_;
};

ContingencyTable table_from_predictions(const PredictionVector& prev, const PredictionVector& curr);

}  // namespace spstop
