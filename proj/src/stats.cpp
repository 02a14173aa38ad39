#include "fanflow/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace fanflow {

const char* to_string(StatTest t) {
    switch (t) {
        case StatTest::ShapiroWilk: return "shapiro_wilk";
        case StatTest::WelchT: return "welch_t";
        case StatTest::MannWhitneyU: return "mann_whitney_u";
        case StatTest::PairedT: return "paired_t";
        default: return "wilcoxon_signed_rank";
    }
}

const char* to_string(EffectKind k) {
    switch (k) {
        case EffectKind::RankBiserial: return "rank_biserial";
        case EffectKind::CohensD: return "cohens_d";
        default: return "none";
    }
}

namespace {

double clamp_p(double p) { return std::min(1.0, std::max(0.0, p)); }

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double mean_of(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_var(std::span<const double> x, double mean) {
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(x.size() - 1);
}

double student_t_two_sided(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    boost::math::students_t_distribution<double> dist(df);
    return clamp_p(2.0 * boost::math::cdf(dist, -std::fabs(t)));
}

// Midranks (1-based) of the pooled values, plus the tie-group sizes.
std::vector<double> midranks(std::span<const double> values, std::vector<uint64_t>* tie_sizes) {
    const size_t n = values.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (size_t t = i; t < j; ++t) ranks[order[t]] = r;
        if (tie_sizes && j - i > 1) tie_sizes->push_back(j - i);
        i = j;
    }
    return ranks;
}

}  // namespace

// ---- Shapiro-Wilk (Royston 1995) -------------------------------------------

bool shapiro_wilk_applicable(std::span<const double> sample) {
    if (sample.size() < 3 || sample.size() > 5000) return false;
    for (double v : sample)
        if (v != sample[0]) return true;
    return false;
}

ShapiroWilkResult shapiro_wilk(std::span<const double> sample) {
    const size_t n = sample.size();
    if (n < 3) throw StatsError("shapiro_wilk: need at least 3 observations");
    if (n > 5000) throw StatsError("shapiro_wilk: n > 5000 outside approximation range");

    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    if (x.front() == x.back()) throw StatsError("shapiro_wilk: constant sample");

    boost::math::normal_distribution<double> N01;
    const double dn = static_cast<double>(n);

    // Expected normal order statistics via the Blom-type plotting positions.
    std::vector<double> m(n);
    double summ2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        m[i] = boost::math::quantile(N01, (static_cast<double>(i + 1) - 0.375) / (dn + 0.25));
        summ2 += m[i] * m[i];
    }

    std::vector<double> a(n, 0.0);
    if (n == 3) {
        a[0] = -std::sqrt(0.5);
        a[2] = std::sqrt(0.5);
    } else {
        const double rsn = 1.0 / std::sqrt(dn);
        auto poly5 = [&](double c1, double c2, double c3, double c4, double c5) {
            return ((((c5 * rsn + c4) * rsn + c3) * rsn + c2) * rsn + c1) * rsn;
        };
        const double an =
            poly5(0.221157, -0.147981, -2.071190, 4.434685, -2.706056) + m[n - 1] / std::sqrt(summ2);
        if (n > 5) {
            const double an1 = poly5(0.042981, -0.293762, -1.752461, 5.682633, -3.582633) +
                               m[n - 2] / std::sqrt(summ2);
            const double phi = (summ2 - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
                               (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
            a[n - 1] = an;
            a[0] = -an;
            a[n - 2] = an1;
            a[1] = -an1;
            for (size_t i = 2; i + 2 < n; ++i) a[i] = m[i] / std::sqrt(phi);
        } else {
            const double phi = (summ2 - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an * an);
            a[n - 1] = an;
            a[0] = -an;
            for (size_t i = 1; i + 1 < n; ++i) a[i] = m[i] / std::sqrt(phi);
        }
    }

    const double xbar = mean_of(x);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < n; ++i) {
        num += a[i] * x[i];
        den += (x[i] - xbar) * (x[i] - xbar);
    }
    double w = num * num / den;
    w = std::min(w, 1.0);

    ShapiroWilkResult res;
    res.w = w;
    if (n == 3) {
        const double stqr = std::asin(std::sqrt(0.75));
        res.p = clamp_p(6.0 / std::numbers::pi * (std::asin(std::sqrt(w)) - stqr));
        return res;
    }

    const double one_minus_w = std::max(1.0 - w, 1e-99);
    double z;
    if (n <= 11) {
        const double g = -2.273 + 0.459 * dn;
        const double wt = -std::log(g - std::log(one_minus_w));
        const double mu = 0.5440 - 0.39978 * dn + 0.025054 * dn * dn - 6.714e-4 * dn * dn * dn;
        const double sigma =
            std::exp(1.3822 - 0.77857 * dn + 0.062767 * dn * dn - 0.0020322 * dn * dn * dn);
        z = (wt - mu) / sigma;
    } else {
        const double u = std::log(dn);
        const double wt = std::log(one_minus_w);
        const double mu = -1.5861 - 0.31082 * u - 0.083751 * u * u + 0.0038915 * u * u * u;
        const double sigma = std::exp(-0.4803 - 0.082676 * u + 0.0030302 * u * u);
        z = (wt - mu) / sigma;
    }
    res.p = clamp_p(normal_sf(z));
    return res;
}

// ---- Welch t ----------------------------------------------------------------

TestResult welch_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw StatsError("welch_t: each sample needs n >= 2");
    const double ma = mean_of(a), mb = mean_of(b);
    const double va = sample_var(a, ma), vb = sample_var(b, mb);
    if (va <= 0.0 || vb <= 0.0) throw StatsError("welch_t: sample with zero variance");

    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double se2 = va / na + vb / nb;
    const double t = (ma - mb) / std::sqrt(se2);
    const double df = se2 * se2 / (va * va / (na * na * (na - 1)) + vb * vb / (nb * nb * (nb - 1)));

    TestResult res;
    res.test = StatTest::WelchT;
    res.statistic = t;
    res.p_value = student_t_two_sided(t, df);
    res.n_a = a.size();
    res.n_b = b.size();
    return res;
}

// ---- Mann-Whitney U ----------------------------------------------------------

namespace {

// 2*U for group A over an explicit pair sweep (wins count 2, ties count 1).
uint64_t u2_by_pairs(std::span<const double> a, std::span<const double> b) {
    uint64_t u2 = 0;
    for (double x : a)
        for (double y : b) {
            if (x > y)
                u2 += 2;
            else if (x == y)
                u2 += 1;
        }
    return u2;
}

// Exact two-sided p over all assignments of the pooled values to group A:
// P(|2U - n_a*n_b| >= |2u_obs - n_a*n_b|). The permutation distribution of U
// is symmetric about n_a*n_b/2 even under ties.
double mwu_exact_p(std::span<const double> a, std::span<const double> b, uint64_t u2_obs) {
    const size_t na = a.size(), nb = b.size(), n = na + nb;
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());

    const int64_t center = static_cast<int64_t>(na) * static_cast<int64_t>(nb);
    const int64_t margin = std::llabs(static_cast<int64_t>(u2_obs) - center);

    // Lexicographic combination walk over which pooled indices form group A.
    std::vector<size_t> idx(na);
    std::iota(idx.begin(), idx.end(), size_t{0});
    uint64_t total = 0, extreme = 0;
    std::vector<char> in_a(n);
    while (true) {
        std::fill(in_a.begin(), in_a.end(), 0);
        for (size_t i : idx) in_a[i] = 1;
        uint64_t u2 = 0;
        for (size_t i = 0; i < n; ++i) {
            if (!in_a[i]) continue;
            for (size_t j = 0; j < n; ++j) {
                if (in_a[j]) continue;
                if (pooled[i] > pooled[j])
                    u2 += 2;
                else if (pooled[i] == pooled[j])
                    u2 += 1;
            }
        }
        ++total;
        if (std::llabs(static_cast<int64_t>(u2) - center) >= margin) ++extreme;

        // next combination
        size_t k = na;
        while (k > 0 && idx[k - 1] == n - na + k - 1) --k;
        if (k == 0) break;
        ++idx[k - 1];
        for (size_t i = k; i < na; ++i) idx[i] = idx[i - 1] + 1;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw StatsError("mann_whitney_u: empty sample");
    const size_t na = a.size(), nb = b.size(), n = na + nb;

    const uint64_t u2 = u2_by_pairs(a, b);
    const double u = static_cast<double>(u2) / 2.0;
    const double prod = static_cast<double>(na) * static_cast<double>(nb);

    TestResult res;
    res.test = StatTest::MannWhitneyU;
    res.statistic = u;
    res.n_a = na;
    res.n_b = nb;
    res.effect_kind = EffectKind::RankBiserial;
    res.effect_size = std::fabs(1.0 - 2.0 * u / prod);

    if (na * nb <= kMwuExactMaxPairs) {
        res.exact = true;
        res.p_value = mwu_exact_p(a, b, u2);
        return res;
    }

    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<uint64_t> ties;
    midranks(pooled, &ties);

    const double dn = static_cast<double>(n);
    double tie_term = 0.0;
    for (uint64_t t : ties) {
        const double td = static_cast<double>(t);
        tie_term += td * td * td - td;
    }
    const double var = prod / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (var <= 0.0) {
        res.p_value = 1.0;  // all pooled values identical
        return res;
    }
    const double mu = prod / 2.0;
    const double z = (std::fabs(u - mu) - 0.5) / std::sqrt(var);
    res.p_value = clamp_p(2.0 * normal_sf(std::max(z, 0.0)));
    return res;
}

// ---- paired t ----------------------------------------------------------------

TestResult paired_t(std::span<const double> diffs) {
    if (diffs.size() < 2) throw StatsError("paired_t: need n >= 2 differences");
    const double m = mean_of(diffs);
    const double var = sample_var(diffs, m);
    if (var <= 0.0) throw StatsError("paired_t: zero variance of differences");

    const double n = static_cast<double>(diffs.size());
    const double sd = std::sqrt(var);
    const double d = m / sd;
    const double t = d * std::sqrt(n);

    TestResult res;
    res.test = StatTest::PairedT;
    res.statistic = t;
    res.p_value = student_t_two_sided(t, n - 1.0);
    res.effect_kind = EffectKind::CohensD;
    res.effect_size = d;
    res.n_a = res.n_b = diffs.size();
    return res;
}

// ---- Wilcoxon signed rank ------------------------------------------------------

namespace {

// Exact two-sided p over all 2^n sign assignments of the observed ranks:
// P(|2W+ - S| >= |2w_obs - S|), with S the doubled rank sum. Doubled ranks
// are integers even under midranked ties.
double wilcoxon_exact_p(const std::vector<int64_t>& ranks2, int64_t w2_obs) {
    const size_t n = ranks2.size();
    const int64_t total2 = std::accumulate(ranks2.begin(), ranks2.end(), int64_t{0});
    const int64_t margin = std::llabs(2 * w2_obs - total2);

    uint64_t extreme = 0;
    const uint64_t masks = uint64_t{1} << n;
    for (uint64_t mask = 0; mask < masks; ++mask) {
        int64_t w2 = 0;
        uint64_t m = mask;
        while (m) {
            w2 += ranks2[std::countr_zero(m)];
            m &= m - 1;
        }
        if (std::llabs(2 * w2 - total2) >= margin) ++extreme;
    }
    return static_cast<double>(extreme) / static_cast<double>(masks);
}

}  // namespace

TestResult wilcoxon_signed_rank(std::span<const double> diffs) {
    std::vector<double> nz;
    for (double d : diffs)
        if (d != 0.0) nz.push_back(d);
    if (nz.empty()) throw StatsError("wilcoxon_signed_rank: all differences are zero");

    const size_t n = nz.size();
    std::vector<double> abs_d(n);
    for (size_t i = 0; i < n; ++i) abs_d[i] = std::fabs(nz[i]);
    std::vector<uint64_t> ties;
    std::vector<double> ranks = midranks(abs_d, &ties);

    double w_plus = 0.0;
    for (size_t i = 0; i < n; ++i)
        if (nz[i] > 0.0) w_plus += ranks[i];
    const double total = static_cast<double>(n) * (n + 1) / 2.0;
    const double w_minus = total - w_plus;

    TestResult res;
    res.test = StatTest::WilcoxonSignedRank;
    res.statistic = std::min(w_plus, w_minus);
    res.n_a = res.n_b = n;

    if (n <= kWilcoxonExactMaxN) {
        std::vector<int64_t> ranks2(n);
        for (size_t i = 0; i < n; ++i) ranks2[i] = static_cast<int64_t>(std::llround(2 * ranks[i]));
        res.exact = true;
        res.p_value = wilcoxon_exact_p(ranks2, static_cast<int64_t>(std::llround(2 * w_plus)));
        return res;
    }

    const double dn = static_cast<double>(n);
    double tie_term = 0.0;
    for (uint64_t t : ties) {
        const double td = static_cast<double>(t);
        tie_term += td * td * td - td;
    }
    const double mu = dn * (dn + 1.0) / 4.0;
    const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) {
        res.p_value = 1.0;
        return res;
    }
    const double z = (std::fabs(w_plus - mu) - 0.5) / std::sqrt(var);
    res.p_value = clamp_p(2.0 * normal_sf(std::max(z, 0.0)));
    return res;
}

// ---- two-step selection ----------------------------------------------------

StatTest select_paired_test(double sw_p_diff, double alpha) {
    return sw_p_diff >= alpha ? StatTest::PairedT : StatTest::WilcoxonSignedRank;
}

StatTest select_unpaired_test(std::optional<double> sw_p_a, std::optional<double> sw_p_b,
                              double alpha) {
    if (sw_p_a && sw_p_b && *sw_p_a >= alpha && *sw_p_b >= alpha) return StatTest::WelchT;
    return StatTest::MannWhitneyU;
}

TestResult compare_unpaired(std::span<const double> a, std::span<const double> b, double alpha) {
    std::optional<double> pa, pb;
    if (shapiro_wilk_applicable(a)) pa = shapiro_wilk(a).p;
    if (shapiro_wilk_applicable(b)) pb = shapiro_wilk(b).p;

    TestResult res = select_unpaired_test(pa, pb, alpha) == StatTest::WelchT
                         ? welch_t(a, b)
                         : mann_whitney_u(a, b);
    res.sw_p_a = pa;
    res.sw_p_b = pb;
    return res;
}

TestResult compare_paired(std::span<const double> a, std::span<const double> b, double alpha) {
    if (a.size() != b.size()) throw StatsError("compare_paired: length mismatch");
    std::vector<double> diffs(a.size());
    for (size_t i = 0; i < a.size(); ++i) diffs[i] = a[i] - b[i];

    bool all_zero = std::all_of(diffs.begin(), diffs.end(), [](double d) { return d == 0.0; });
    if (all_zero) throw StatsError("compare_paired: degenerate (identical) paired series");

    std::optional<double> p_sw;
    if (shapiro_wilk_applicable(diffs)) p_sw = shapiro_wilk(diffs).p;

    TestResult res = (p_sw && select_paired_test(*p_sw, alpha) == StatTest::PairedT)
                         ? paired_t(diffs)
                         : wilcoxon_signed_rank(diffs);
    res.sw_p_diff = p_sw;
    return res;
}

}  // namespace fanflow
