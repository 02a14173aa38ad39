#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace fanflow {

struct StatsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class StatTest : uint8_t { ShapiroWilk, WelchT, MannWhitneyU, PairedT, WilcoxonSignedRank };
enum class EffectKind : uint8_t { None, RankBiserial, CohensD };

const char* to_string(StatTest t);
const char* to_string(EffectKind k);

struct TestResult {
    StatTest test = StatTest::WelchT;
    double statistic = 0.0;
    double p_value = 1.0;
    EffectKind effect_kind = EffectKind::None;
    double effect_size = 0.0;
    size_t n_a = 0;
    size_t n_b = 0;
    bool exact = false;  // exact enumeration (Mann-Whitney / Wilcoxon small-n branch)
    std::optional<double> sw_p_a;     // unpaired normality gate
    std::optional<double> sw_p_b;
    std::optional<double> sw_p_diff;  // paired normality gate
};

struct ShapiroWilkResult {
    double w = 0.0;
    double p = 1.0;
};

// Royston (1995) approximation, valid for 3 <= n <= 5000. Throws StatsError
// for out-of-range n or a constant sample.
ShapiroWilkResult shapiro_wilk(std::span<const double> sample);
bool shapiro_wilk_applicable(std::span<const double> sample);

// Two-sided Welch t with Welch-Satterthwaite degrees of freedom.
TestResult welch_t(std::span<const double> a, std::span<const double> b);

// U for group a (pair wins plus half ties). Exact two-sided p by full
// enumeration when n_a*n_b <= kMwuExactMaxPairs, otherwise normal
// approximation with tie and continuity corrections. Effect size is the
// absolute rank-biserial correlation.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);
inline constexpr size_t kMwuExactMaxPairs = 64;

// One-sample t on paired differences; Cohen's d = mean/sd, so t = d*sqrt(n).
TestResult paired_t(std::span<const double> diffs);

// W = min(W+, W-) after zero exclusion and midranking of tied |d|. Exact p
// by sign enumeration when the effective n <= kWilcoxonExactMaxN.
TestResult wilcoxon_signed_rank(std::span<const double> diffs);
inline constexpr size_t kWilcoxonExactMaxN = 15;

// Shapiro-Wilk gate at `alpha` on both samples; Welch t when both pass,
// Mann-Whitney otherwise (also when the gate is not applicable).
TestResult compare_unpaired(std::span<const double> a, std::span<const double> b,
                            double alpha = 0.05);

// Shapiro-Wilk gate on the paired differences; paired t when p >= alpha,
// Wilcoxon signed rank otherwise.
TestResult compare_paired(std::span<const double> a, std::span<const double> b,
                          double alpha = 0.05);

// The pure selection rules behind the two compare_* gates.
StatTest select_paired_test(double sw_p_diff, double alpha = 0.05);
StatTest select_unpaired_test(std::optional<double> sw_p_a, std::optional<double> sw_p_b,
                              double alpha = 0.05);

}  // namespace fanflow
