#include "spstop/split_oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "spstop/agreement.hpp"
#include "spstop/error.hpp"
#include "spstop/rng.hpp"

namespace spstop {
namespace {

using Wide = __int128;

Wide wabs(Wide v) { return v < 0 ? -v : v; }

std::string wide_to_string(Wide v) {
    if (v == 0) {
        return "0";
    }
    const bool negative = v < 0;
    std::string digits;
    for (Wide u = negative ? -v : v; u > 0; u /= 10) {
        digits.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    }
    if (negative) {
        digits.push_back('-');
    }
    std::reverse(digits.begin(), digits.end());
    return digits;
}

// g and h: F-measure denominators of M_t and M_{t-1} against truth.
std::int64_t denominator_curr(const SplitTables& s) {
    return 2 * (s.pos.a + s.pos.c) + s.pos.b + s.pos.d + s.neg.a + s.neg.c;
}

std::int64_t denominator_prev(const SplitTables& s) {
    return 2 * (s.pos.a + s.pos.b) + s.pos.c + s.pos.d + s.neg.a + s.neg.b;
}

std::string describe(const SplitTables& s) {
    std::ostringstream os;
    os << "pos=(" << s.pos.a << ',' << s.pos.b << ',' << s.pos.c << ',' << s.pos.d << ") neg=(" << s.neg.a << ','
       << s.neg.b << ',' << s.neg.c << ',' << s.neg.d << ')';
    return os.str();
}

void add_violation(VerificationReport& report, const SplitTables& s, Check check, const std::string& detail) {
    report.violations.push_back({s, check, describe(s) + ": " + detail});
}

// Visit all weak compositions of `total` into cells[first..7], lexicographically.
void compose(std::array<std::int64_t, 8>& cells, std::size_t first, std::int64_t total,
             const std::function<void(const SplitTables&)>& fn) {
    if (first == 7) {
        cells[7] = total;
        fn(SplitTables::from_cells(cells));
        return;
    }
    for (std::int64_t v = 0; v <= total; ++v) {
        cells[first] = v;
        compose(cells, first + 1, total - v, fn);
    }
}

}  // namespace

std::array<std::int64_t, 8> SplitTables::cells() const {
    return {pos.a, pos.b, pos.c, pos.d, neg.a, neg.b, neg.c, neg.d};
}

SplitTables SplitTables::from_cells(const std::array<std::int64_t, 8>& c) {
    return {{c[0], c[1], c[2], c[3]}, {c[4], c[5], c[6], c[7]}};
}

ContingencyTable merge(const SplitTables& s) {
    return {s.pos.a + s.neg.a, s.pos.b + s.neg.b, s.pos.c + s.neg.c, s.pos.d + s.neg.d};
}

TruthFMeasures truth_f_measures(const SplitTables& s) {
    const std::int64_t g = denominator_curr(s);
    const std::int64_t h = denominator_prev(s);
    if (g == 0 || h == 0) {
        throw Error(ErrorCode::UndefinedF, describe(s) + " has no positives for one model");
    }
    const double f_curr = static_cast<double>(2 * (s.pos.a + s.pos.c)) / static_cast<double>(g);
    const double f_prev = static_cast<double>(2 * (s.pos.a + s.pos.b)) / static_cast<double>(h);
    return {f_curr, f_prev, f_curr - f_prev};
}

ProofQuantities proof_quantities(const SplitTables& s) {
    ProofQuantities q{};
    q.g = denominator_curr(s);
    q.h = denominator_prev(s);
    q.d_a = s.pos.c - s.pos.b;
    q.d_b = s.neg.c - s.neg.b;
    const std::int64_t sum = q.h + q.d_a + q.d_b;
    if (q.g != sum) {
        throw Error(ErrorCode::Internal, describe(s) + ": g != h + d_A + d_B");
    }
    if (sum == 0) {
        throw Error(ErrorCode::DegenerateDenominator, describe(s) + ": h + d_A + d_B = 0");
    }
    q.ratio = static_cast<double>(s.pos.a + s.neg.a) / static_cast<double>(sum);
    return q;
}

std::uint64_t split_count(std::int64_t n) {
    if (n < 0) {
        return 0;
    }
    // C(n+7, 7), built incrementally so every intermediate is an exact binomial.
    std::uint64_t r = 1;
    for (std::uint64_t k = 1; k <= 7; ++k) {
        r = r * (static_cast<std::uint64_t>(n) + k) / k;
    }
    return r;
}

SplitStream::SplitStream(std::int64_t n_max) : SplitStream(1, n_max) {}

SplitStream::SplitStream(std::int64_t n_min, std::int64_t n_max) : n_(std::max<std::int64_t>(n_min, 1)), n_max_(n_max) {}

std::optional<SplitTables> SplitStream::next() {
    if (n_ > n_max_) {
        return std::nullopt;
    }
    if (!started_) {
        cells_ = {};
        cells_[7] = n_;
        started_ = true;
        return SplitTables::from_cells(cells_);
    }
    // Rightmost position that can take one unit from the cells after it.
    int pivot = -1;
    if (cells_[7] > 0) {
        pivot = 6;
    } else {
        for (int j = 6; j >= 0; --j) {
            if (cells_[j] > 0) {
                pivot = j - 1;
                break;
            }
        }
    }
    if (pivot < 0) {
        ++n_;
        started_ = false;
        return next();
    }
    std::int64_t tail = 0;
    for (int j = pivot + 1; j < 8; ++j) {
        tail += cells_[j];
        cells_[j] = 0;
    }
    ++cells_[pivot];
    cells_[7] = tail - 1;
    return SplitTables::from_cells(cells_);
}

SplitStream enumerate_splits(std::int64_t n_max) { return SplitStream(n_max); }

void for_each_split_with_leading(std::int64_t n, std::int64_t a1, const std::function<void(const SplitTables&)>& fn) {
    if (a1 < 0 || a1 > n) {
        return;
    }
    std::array<std::int64_t, 8> cells{};
    cells[0] = a1;
    compose(cells, 1, n - a1, fn);
}

void for_each_stratification(const ContingencyTable& t, const std::function<void(const SplitTables&)>& fn) {
    for (std::int64_t a1 = 0; a1 <= t.a(); ++a1) {
        for (std::int64_t b1 = 0; b1 <= t.b(); ++b1) {
            for (std::int64_t c1 = 0; c1 <= t.c(); ++c1) {
                for (std::int64_t d1 = 0; d1 <= t.d(); ++d1) {
                    fn({{a1, b1, c1, d1}, {t.a() - a1, t.b() - b1, t.c() - c1, t.d() - d1}});
                }
            }
        }
    }
}

std::string to_string(Check check) {
    switch (check) {
        case Check::LemmaFGeqK: return "lemma_f_geq_k";
        case Check::DenominatorIdentity: return "denominator_identity";
        case Check::RatioAtMostOne: return "ratio_at_most_one";
        case Check::HelperLemma: return "helper_lemma";
        case Check::DisagreementBound: return "disagreement_bound";
        case Check::WorstCaseBound: return "worst_case_bound";
        case Check::PerfectPrecisionBound: return "perfect_precision_bound";
        case Check::PrecisionBound: return "precision_bound";
    }
    return "unknown";
}

void VerificationReport::merge_from(VerificationReport&& other) {
    checked += other.checked;
    theorem_cases += other.theorem_cases;
    skipped_undefined_kappa += other.skipped_undefined_kappa;
    skipped_undefined_f += other.skipped_undefined_f;
    skipped_nonpositive_kappa += other.skipped_nonpositive_kappa;
    lemma_cases += other.lemma_cases;
    helper_lemma_cases += other.helper_lemma_cases;
    violations.insert(violations.end(), std::make_move_iterator(other.violations.begin()),
                      std::make_move_iterator(other.violations.end()));
}

void verify_split(const SplitTables& s, VerificationReport& report) {
    ++report.checked;
    const ContingencyTable t = merge(s);

    const Wide a1 = s.pos.a, b1 = s.pos.b, c1 = s.pos.c;
    const Wide a_neg = s.neg.a;
    const Wide a = t.a(), b = t.b(), c = t.c(), d = t.d();
    const Wide g = denominator_curr(s);
    const Wide h = denominator_prev(s);
    const Wide d_a = s.pos.c - s.pos.b;
    const Wide d_b = s.neg.c - s.neg.b;

    if (g != h + d_a + d_b) {
        add_violation(report, s, Check::DenominatorIdentity,
                      "g=" + wide_to_string(g) + " h+d_A+d_B=" + wide_to_string(h + d_a + d_b));
    }
    if (g > 0 && a > g) {
        add_violation(report, s, Check::RatioAtMostOne, "a=" + wide_to_string(a) + " > g=" + wide_to_string(g));
    }
    if (a_neg > 0 && g > 0) {
        ++report.helper_lemma_cases;
        // a/g <= (x+1)/(2x+1) with x = a1/a_-1, i.e. a/g <= a/(2 a1 + a_-1).
        if (a * (2 * a1 + a_neg) > a * g) {
            add_violation(report, s, Check::HelperLemma, "a/g exceeds (x+1)/(2x+1)");
        }
    }

    if (has_degenerate_marginals(t)) {
        ++report.skipped_undefined_kappa;
        return;
    }
    const Wide k_num = 2 * (a * d - b * c);
    const Wide k_den = (a + b) * (b + d) + (a + c) * (c + d);
    const Wide f_num = 2 * a;
    const Wide f_den = 2 * a + b + c;

    if (a * d - b * c >= 0 && f_den > 0) {
        ++report.lemma_cases;
        if (f_num * k_den < k_num * f_den) {
            add_violation(report, s, Check::LemmaFGeqK, "F < K with ad - bc >= 0");
        }
    }

    if (g == 0 || h == 0) {
        ++report.skipped_undefined_f;
        return;
    }
    if (k_num <= 0) {
        ++report.skipped_nonpositive_kappa;
        return;
    }
    ++report.theorem_cases;

    // With T = K: F > T implies b + c < 2a(1-T)/T; at F = T the inequality is tight.
    const Wide slack_num = k_den - k_num;  // (1 - K) * k_den
    const Wide lhs = (b + c) * k_num;
    const Wide rhs = 2 * a * slack_num;
    if (f_num * k_den > k_num * f_den) {
        if (!(lhs < rhs)) {
            add_violation(report, s, Check::DisagreementBound, "b + c >= 2a(1-K)/K while F > K");
        }
    } else if (lhs > rhs) {
        add_violation(report, s, Check::DisagreementBound, "b + c > 2a(1-K)/K while F = K");
    }

    // |dF| = |delta| / (g h)
    const Wide delta = wabs(2 * (a1 + c1) * h - 2 * (a1 + b1) * g);
    const Wide gh = g * h;
    if (delta * k_num > 4 * slack_num * gh) {
        add_violation(report, s, Check::WorstCaseBound,
                      "|dF|=" + wide_to_string(delta) + "/" + wide_to_string(gh) + " exceeds 4(1-K)/K, K=" +
                          wide_to_string(k_num) + "/" + wide_to_string(k_den));
    }
    if (a_neg == 0 && delta * k_num > 2 * slack_num * gh) {
        add_violation(report, s, Check::PerfectPrecisionBound, "|dF| exceeds 2(1-K)/K with a_-1 = 0");
    }
    // p = a1 / a, so (p + 1) = (2 a1 + a_-1) / a.
    if (delta * k_num * (2 * a1 + a_neg) > 4 * slack_num * a * gh) {
        add_violation(report, s, Check::PrecisionBound, "|dF| exceeds 4(1-K)/((p+1)K)");
    }
}

namespace {

template <typename Task>
VerificationReport run_partitioned(std::size_t task_count, unsigned threads, Task task) {
    std::vector<VerificationReport> parts(task_count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < task_count; i = next++) {
            task(i, parts[i]);
        }
    };
    threads = std::max(1u, threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) {
            pool.emplace_back(worker);
        }
    }
    VerificationReport total;
    for (auto& part : parts) {
        total.merge_from(std::move(part));
    }
    return total;
}

}  // namespace

VerificationReport verify_theorems(std::int64_t n_max, unsigned threads) {
    std::vector<std::pair<std::int64_t, std::int64_t>> tasks;  // (n, a1)
    for (std::int64_t n = 1; n <= n_max; ++n) {
        for (std::int64_t a1 = 0; a1 <= n; ++a1) {
            tasks.emplace_back(n, a1);
        }
    }
    // (n, a1) order is the enumeration order, so concatenation stays sorted.
    return run_partitioned(tasks.size(), threads, [&](std::size_t i, VerificationReport& part) {
        for_each_split_with_leading(tasks[i].first, tasks[i].second,
                                    [&](const SplitTables& s) { verify_split(s, part); });
    });
}

VerificationReport verify_random_splits(std::uint64_t count, std::int64_t max_cell, std::uint64_t seed,
                                        unsigned threads) {
    if (max_cell < 1) {
        throw Error(ErrorCode::InvalidConfig, "max_cell must be >= 1");
    }
    constexpr std::uint64_t kChunk = 1u << 15;
    const std::size_t chunks = static_cast<std::size_t>((count + kChunk - 1) / kChunk);
    VerificationReport report = run_partitioned(chunks, threads, [&](std::size_t i, VerificationReport& part) {
        Rng rng(derive_seed(seed, i));
        const std::uint64_t begin = i * kChunk;
        const std::uint64_t end = std::min(count, begin + kChunk);
        for (std::uint64_t k = begin; k < end; ++k) {
            std::array<std::int64_t, 8> cells{};
            do {
                for (auto& cell : cells) {
                    cell = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(max_cell) + 1));
                }
            } while (SplitTables::from_cells(cells).n() == 0);
            verify_split(SplitTables::from_cells(cells), part);
        }
    });
    std::stable_sort(report.violations.begin(), report.violations.end(),
                     [](const Violation& x, const Violation& y) { return x.split < y.split; });
    return report;
}

WorstCaseDeltaF worst_case_delta_f(const ContingencyTable& t) {
    bool found = false;
    Wide best_num = 0;
    Wide best_den = 1;
    SplitTables witness{};
    for_each_stratification(t, [&](const SplitTables& s) {
        const Wide g = denominator_curr(s);
        const Wide h = denominator_prev(s);
        if (g == 0 || h == 0) {
            return;
        }
        const Wide num = wabs(2 * Wide(s.pos.a + s.pos.c) * h - 2 * Wide(s.pos.a + s.pos.b) * g);
        const Wide den = g * h;
        if (!found || num * best_den > best_num * den) {
            found = true;
            best_num = num;
            best_den = den;
            witness = s;
        }
    });
    if (!found) {
        throw Error(ErrorCode::NoDefinedSplit, "no truth assignment leaves both F-measures defined");
    }
    return {std::abs(truth_f_measures(witness).delta_f), witness};
}

}  // namespace spstop
