#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spstop/contingency.hpp"

namespace spstop {

/// Counts of one truth stratum, laid out like ContingencyTable but allowed to be empty.
struct StratumCounts {
    std::int64_t a = 0;
    std::int64_t b = 0;
    std::int64_t c = 0;
    std::int64_t d = 0;

    std::int64_t n() const { return a + b + c + d; }
    friend bool operator==(const StratumCounts&, const StratumCounts&) = default;
};

/// A model-vs-model table split by the (unknown) true label of each example.
struct SplitTables {
    StratumCounts pos;  // truth = +1
    StratumCounts neg;  // truth = -1

    std::int64_t n() const { return pos.n() + neg.n(); }
    /// (a1, b1, c1, d1, a_-1, b_-1, c_-1, d_-1)
    std::array<std::int64_t, 8> cells() const;
    static SplitTables from_cells(const std::array<std::int64_t, 8>& cells);

    friend bool operator==(const SplitTables&, const SplitTables&) = default;
    friend auto operator<=>(const SplitTables& x, const SplitTables& y) { return x.cells() <=> y.cells(); }
};

/// Componentwise sum of the two strata. Raises InvalidTable if the split is empty.
ContingencyTable merge(const SplitTables& s);

/// F-measures of each model against truth on the split's examples.
struct TruthFMeasures {
    double f_curr;   // M_t vs truth
    double f_prev;   // M_{t-1} vs truth
    double delta_f;  // f_curr - f_prev
};

/// Raises UndefinedF when either model has an empty F-measure denominator.
TruthFMeasures truth_f_measures(const SplitTables& s);

/// Integer quantities used to bound |dF| in terms of the merged table.
struct ProofQuantities {
    std::int64_t g;    // F-measure denominator of M_t vs truth
    std::int64_t h;    // F-measure denominator of M_{t-1} vs truth
    std::int64_t d_a;  // c1 - b1
    std::int64_t d_b;  // c_-1 - b_-1
    double ratio;      // a / (h + d_a + d_b)
};

/// Raises DegenerateDenominator when h + d_a + d_b = 0; raises Internal if
/// g != h + d_a + d_b.
ProofQuantities proof_quantities(const SplitTables& s);

/// C(n + 7, 7): number of splits whose eight counts sum to n.
std::uint64_t split_count(std::int64_t n);

/// Splits with total in [1, n_max], n ascending, each total's splits in
/// lexicographic order of cells().
class SplitStream {
public:
    explicit SplitStream(std::int64_t n_max);
    SplitStream(std::int64_t n_min, std::int64_t n_max);

    std::optional<SplitTables> next();

private:
    std::int64_t n_;
    std::int64_t n_max_;
    std::array<std::int64_t, 8> cells_{};
    bool started_ = false;
};

SplitStream enumerate_splits(std::int64_t n_max);

/// Visit every split that sums to `n` and whose leading cell a1 equals `a1`,
/// in lexicographic order.
void for_each_split_with_leading(std::int64_t n, std::int64_t a1, const std::function<void(const SplitTables&)>& fn);

/// Visit every assignment of truth to the examples of `t`: a1 in [0,a] x b1 in [0,b]
/// x c1 in [0,c] x d1 in [0,d], lexicographic.
void for_each_stratification(const ContingencyTable& t, const std::function<void(const SplitTables&)>& fn);

/// Names of the checks performed by verify_split().
enum class Check {
    LemmaFGeqK,          // F >= K on the merged table when ad - bc >= 0
    DenominatorIdentity, // g = h + d_A + d_B
    RatioAtMostOne,      // a / (h + d_A + d_B) <= 1
    HelperLemma,         // a / (h + d_A + d_B) <= (x+1)/(2x+1), x = a1 / a_-1
    DisagreementBound,   // F > T  =>  b + c < 2a(1-T)/T, with T = K
    WorstCaseBound,      // |dF| <= 4(1-K)/K
    PerfectPrecisionBound, // a_-1 = 0  =>  |dF| <= 2(1-K)/K
    PrecisionBound,      // |dF| <= 4(1-K)/((p+1)K), p = a1 / a
};

std::string to_string(Check check);

struct Violation {
    SplitTables split;
    Check check;
    std::string detail;
};

struct VerificationReport {
    std::uint64_t checked = 0;                   // splits visited
    std::uint64_t theorem_cases = 0;             // splits with K > 0 and both F defined
    std::uint64_t skipped_undefined_kappa = 0;   // p_e = 1
    std::uint64_t skipped_undefined_f = 0;       // a truth F-measure denominator is 0
    std::uint64_t skipped_nonpositive_kappa = 0; // K <= 0, bounds not applicable
    std::uint64_t lemma_cases = 0;               // merged tables where F >= K was checked
    std::uint64_t helper_lemma_cases = 0;
    std::vector<Violation> violations;           // sorted by split order

    bool ok() const { return violations.empty(); }
    void merge_from(VerificationReport&& other);
};

/// Run every check on one split, accumulating into `report`. Comparisons are
/// exact on 128-bit integer cross-products.
void verify_split(const SplitTables& s, VerificationReport& report);

/// Exhaustive check over every split with total in [1, n_max]. Work is
/// partitioned by (n, a1) across `threads` workers; the result does not depend
/// on the thread count.
VerificationReport verify_theorems(std::int64_t n_max, unsigned threads = 1);

/// Randomized extension: `count` splits with each cell uniform in [0, max_cell].
VerificationReport verify_random_splits(std::uint64_t count, std::int64_t max_cell, std::uint64_t seed,
                                        unsigned threads = 1);

struct WorstCaseDeltaF {
    double max_abs_delta_f;
    SplitTables witness;  // first maximizer in lexicographic order
};

/// Largest |dF| over all truth assignments consistent with `t`.
/// Raises NoDefinedSplit when no assignment has both F-measures defined.
WorstCaseDeltaF worst_case_delta_f(const ContingencyTable& t);

}  // namespace spstop
