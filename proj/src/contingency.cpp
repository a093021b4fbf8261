#include "spstop/contingency.hpp"

#include <string>

#include "spstop/error.hpp"

namespace spstop {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::InvalidLabel: return "InvalidLabel";
        case ErrorCode::InvalidTable: return "InvalidTable";
        case ErrorCode::DegenerateMarginals: return "DegenerateMarginals";
        case ErrorCode::NoPositivePredictions: return "NoPositivePredictions";
        case ErrorCode::NegativeVariance: return "NegativeVariance";
        case ErrorCode::InvalidThreshold: return "InvalidThreshold";
        case ErrorCode::InvalidPrecision: return "InvalidPrecision";
        case ErrorCode::UndefinedF: return "UndefinedF";
        case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
        case ErrorCode::NoDefinedSplit: return "NoDefinedSplit";
        case ErrorCode::StopSetSizeChanged: return "StopSetSizeChanged";
        case ErrorCode::DegenerateEstimate: return "DegenerateEstimate";
        case ErrorCode::InvalidModel: return "InvalidModel";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::RaggedMatrix: return "RaggedMatrix";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

PredictionVector::PredictionVector(std::vector<Label> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) {
        throw Error(ErrorCode::InvalidLabel, "prediction vector must not be empty");
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] != Label::Positive && labels_[i] != Label::Negative) {
            throw Error(ErrorCode::InvalidLabel, "label at position " + std::to_string(i) + " is not +1/-1");
        }
    }
}

PredictionVector PredictionVector::from_ints(std::span<const int> values) {
    std::vector<Label> labels;
    labels.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] == 1) {
            labels.push_back(Label::Positive);
        } else if (values[i] == -1) {
            labels.push_back(Label::Negative);
        } else {
            throw Error(ErrorCode::InvalidLabel,
                        "value " + std::to_string(values[i]) + " at position " + std::to_string(i) + " is not +1/-1");
        }
    }
    return PredictionVector(std::move(labels));
}

PredictionVector PredictionVector::from_ints(std::initializer_list<int> values) {
    return from_ints(std::span<const int>(values.begin(), values.size()));
}

ContingencyTable::ContingencyTable(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d)
    : a_(a), b_(b), c_(c), d_(d) {
    if (a < 0 || b < 0 || c < 0 || d < 0) {
        throw Error(ErrorCode::InvalidTable, "counts must be nonnegative");
    }
    if (n() < 1) {
        throw Error(ErrorCode::InvalidTable, "table must contain at least one example");
    }
}

ContingencyTable ContingencyTable::scaled(std::int64_t factor) const {
    if (factor < 1) {
        throw Error(ErrorCode::InvalidTable, "scale factor must be >= 1");
    }
    return {a_ * factor, b_ * factor, c_ * factor, d_ * factor};
}

ContingencyTable table_from_predictions(const PredictionVector& prev, const PredictionVector& curr) {
    if (prev.size() != curr.size()) {
        throw Error(ErrorCode::LengthMismatch, "previous has " + std::to_string(prev.size()) +
                                                   " predictions, current has " + std::to_string(curr.size()));
    }
    std::int64_t a = 0, b = 0, c = 0, d = 0;
    for (std::size_t i = 0; i < prev.size(); ++i) {
        const bool p = prev[i] == Label::Positive;
        const bool q = curr[i] == Label::Positive;
        if (p && q) {
            ++a;
        } else if (p) {
            ++b;
        } else if (q) {
            ++c;
        } else {
            ++d;
        }
    }
    return {a, b, c, d};
}

}  // namespace spstop
