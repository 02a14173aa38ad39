#include <doctest.h>

#include <cmath>
#include <random>

#include "fanflow/stats.hpp"
#include "oracles.hpp"
#include "stats_goldens.hpp"

using namespace fanflow;

TEST_CASE("shapiro-wilk preconditions") {
    std::vector<double> two{1.0, 2.0};
    CHECK_THROWS_AS(shapiro_wilk(two), StatsError);
    std::vector<double> constant{3.0, 3.0, 3.0, 3.0};
    CHECK_THROWS_AS(shapiro_wilk(constant), StatsError);
    CHECK_FALSE(shapiro_wilk_applicable(two));
    CHECK_FALSE(shapiro_wilk_applicable(constant));
    std::vector<double> ok{1.0, 2.0, 3.0};
    CHECK(shapiro_wilk_applicable(ok));
}

TEST_CASE("shapiro-wilk matches reference goldens within 1e-3") {
    for (const auto& g : goldens::shapiro_wilk) {
        auto res = shapiro_wilk(g.sample);
        CAPTURE(g.sample.size());
        CHECK(std::fabs(res.w - g.w) < 1e-3);
        CHECK(std::fabs(res.p - g.p) < 1e-3);
    }
}

TEST_CASE("welch t basics and golden") {
    std::vector<double> a{1.0, 2.0, 3.0, 4.0};
    auto same = welch_t(a, a);
    CHECK(same.statistic == doctest::Approx(0.0));
    CHECK(same.p_value == doctest::Approx(1.0));

    // Shift by a constant with equal n and variance: t = delta / (s*sqrt(2/n)).
    std::vector<double> shifted;
    for (double v : a) shifted.push_back(v + 2.0);
    auto shift = welch_t(shifted, a);
    double s2 = 5.0 / 3.0;  // sample variance of {1,2,3,4}
    CHECK(shift.statistic ==
          doctest::Approx(2.0 / std::sqrt(s2 * 2.0 / 4.0)).epsilon(1e-12));
    CHECK(shift.statistic > 0);
    auto flipped = welch_t(a, shifted);
    CHECK(flipped.statistic == doctest::Approx(-shift.statistic));
    CHECK(flipped.p_value == doctest::Approx(shift.p_value));

    auto res = welch_t(goldens::welch_a, goldens::welch_b);
    CHECK(res.statistic == doctest::Approx(goldens::welch_t_ref).epsilon(1e-9));
    CHECK(res.p_value == doctest::Approx(goldens::welch_p_ref).epsilon(1e-9));

    std::vector<double> constant{2.0, 2.0, 2.0};
    CHECK_THROWS_AS(welch_t(a, constant), StatsError);
    std::vector<double> one{1.0};
    CHECK_THROWS_AS(welch_t(one, a), StatsError);
}

TEST_CASE("translation invariance of unpaired tests") {
    std::vector<double> a{0.3, 1.2, -0.7, 2.2, 0.9, 1.4};
    std::vector<double> b{1.0, 0.1, 0.4, 2.0, -0.3};
    auto t0 = welch_t(a, b);
    auto u0 = mann_whitney_u(a, b);
    std::vector<double> a2 = a, b2 = b;
    for (double& v : a2) v += 7.5;
    for (double& v : b2) v += 7.5;
    auto t1 = welch_t(a2, b2);
    auto u1 = mann_whitney_u(a2, b2);
    CHECK(t1.statistic == doctest::Approx(t0.statistic).epsilon(1e-12));
    CHECK(t1.p_value == doctest::Approx(t0.p_value).epsilon(1e-12));
    CHECK(u1.statistic == u0.statistic);
    CHECK(u1.p_value == u0.p_value);
}

TEST_CASE("mann-whitney separated samples") {
    std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    auto res = mann_whitney_u(a, b);
    CHECK(res.statistic == 0.0);
    CHECK(res.effect_size == doctest::Approx(1.0));
    CHECK(res.exact);
    CHECK(res.p_value == doctest::Approx(0.1));  // 2/20 assignments as extreme
}

TEST_CASE("mann-whitney identical multisets") {
    std::vector<double> a{1, 2, 2, 5}, b{2, 1, 5, 2};
    auto res = mann_whitney_u(a, b);
    CHECK(res.statistic == doctest::Approx(8.0));  // n^2/2
    CHECK(res.effect_size == doctest::Approx(0.0));
    CHECK(res.p_value == doctest::Approx(1.0));
}

TEST_CASE("mann-whitney exact branch equals enumeration oracle") {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 60; ++round) {
        size_t na = 1 + rng() % 8, nb = 1 + rng() % 8;
        std::vector<double> a(na), b(nb);
        for (double& v : a) v = static_cast<double>(rng() % 6);
        for (double& v : b) v = static_cast<double>(rng() % 6);
        auto res = mann_whitney_u(a, b);
        REQUIRE(res.exact);
        double ref = oracle::mwu_exact_p(a, b);
        CAPTURE(na);
        CAPTURE(nb);
        CHECK(res.p_value == doctest::Approx(ref).epsilon(1e-12));
        CHECK(res.p_value >= 0.0);
        CHECK(res.p_value <= 1.0);
    }
}

TEST_CASE("mann-whitney swap symmetry and approx golden") {
    auto ab = mann_whitney_u(goldens::mwu_a, goldens::mwu_b);
    auto ba = mann_whitney_u(goldens::mwu_b, goldens::mwu_a);
    CHECK_FALSE(ab.exact);
    CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-12));
    CHECK(ab.statistic == doctest::Approx(goldens::mwu_u_ref).epsilon(1e-12));
    CHECK(ab.p_value == doctest::Approx(goldens::mwu_p_ref).epsilon(1e-9));
    CHECK(ab.effect_size == ba.effect_size);
}

TEST_CASE("paired t identity t = d * sqrt(n)") {
    auto res = paired_t(goldens::paired_diffs);
    CHECK(res.effect_kind == EffectKind::CohensD);
    CHECK(res.statistic ==
          res.effect_size * std::sqrt(static_cast<double>(goldens::paired_diffs.size())));
    CHECK(res.statistic == doctest::Approx(goldens::paired_t_ref).epsilon(1e-9));
    CHECK(res.p_value == doctest::Approx(goldens::paired_p_ref).epsilon(1e-9));

    std::vector<double> zeros{0.0, 0.0, 0.0};
    CHECK_THROWS_AS(paired_t(zeros), StatsError);

    // Sign flip: statistic negates, p unchanged.
    std::vector<double> neg;
    for (double v : goldens::paired_diffs) neg.push_back(-v);
    auto flipped = paired_t(neg);
    CHECK(flipped.statistic == doctest::Approx(-res.statistic));
    CHECK(flipped.p_value == doctest::Approx(res.p_value));
}

TEST_CASE("wilcoxon signed rank basics") {
    std::vector<double> all_pos{1.0, 2.5, 0.5, 3.0};
    auto res = wilcoxon_signed_rank(all_pos);
    CHECK(res.statistic == 0.0);  // no negative ranks

    std::vector<double> anti{2.0, -2.0, 1.0, -1.0};
    auto sym = wilcoxon_signed_rank(anti);
    CHECK(sym.statistic == doctest::Approx(5.0));  // W+ = W- = total/2
    CHECK(sym.p_value == doctest::Approx(1.0));

    std::vector<double> zeros{0.0, 0.0};
    CHECK_THROWS_AS(wilcoxon_signed_rank(zeros), StatsError);

    std::vector<double> with_zero{0.0, 1.0, -2.0, 3.0};
    auto dropped = wilcoxon_signed_rank(with_zero);
    CHECK(dropped.n_a == 3);  // zero excluded
}

TEST_CASE("wilcoxon exact branch equals DP oracle") {
    std::mt19937_64 rng(23);
    for (int round = 0; round < 60; ++round) {
        size_t n = 2 + rng() % 14;
        std::vector<double> d(n);
        for (double& v : d) v = static_cast<double>(1 + rng() % 5) * (rng() % 2 ? 1.0 : -1.0);
        auto res = wilcoxon_signed_rank(d);
        REQUIRE(res.exact);
        double ref = oracle::wilcoxon_exact_p(d);
        CAPTURE(n);
        CHECK(res.p_value == doctest::Approx(ref).epsilon(1e-12));
        // Negating every difference leaves W and p unchanged.
        std::vector<double> neg;
        for (double v : d) neg.push_back(-v);
        auto flip = wilcoxon_signed_rank(neg);
        CHECK(flip.statistic == res.statistic);
        CHECK(flip.p_value == doctest::Approx(res.p_value).epsilon(1e-12));
    }
}

TEST_CASE("wilcoxon approx golden") {
    auto res = wilcoxon_signed_rank(goldens::wilcoxon_diffs);
    CHECK_FALSE(res.exact);
    CHECK(res.statistic == doctest::Approx(goldens::wilcoxon_w_ref).epsilon(1e-12));
    CHECK(res.p_value == doctest::Approx(goldens::wilcoxon_p_ref).epsilon(1e-9));
}

TEST_CASE("unpaired gate: two-point mixtures go nonparametric") {
    std::vector<double> a, b;
    for (int i = 0; i < 12; ++i) {
        a.push_back(i % 2 ? 0.0 : 10.0);
        b.push_back(i % 2 ? 1.0 : 11.0);
    }
    auto res = compare_unpaired(a, b);
    CHECK(res.test == StatTest::MannWhitneyU);
    REQUIRE(res.sw_p_a.has_value());
    CHECK(*res.sw_p_a < 0.05);
}

TEST_CASE("unpaired gate: pre-validated gaussian fixtures go to welch") {
    auto res = compare_unpaired(goldens::gaussian_a, goldens::gaussian_b);
    REQUIRE(res.sw_p_a.has_value());
    REQUIRE(res.sw_p_b.has_value());
    CHECK(*res.sw_p_a >= 0.05);
    CHECK(*res.sw_p_b >= 0.05);
    CHECK(res.test == StatTest::WelchT);
}

TEST_CASE("unpaired gate: tiny sample falls back to mann-whitney") {
    std::vector<double> tiny{1.0, 2.0};
    std::vector<double> big{0.5, 1.5, 2.5, 3.5, 4.5};
    auto res = compare_unpaired(tiny, big);
    CHECK(res.test == StatTest::MannWhitneyU);
    CHECK_FALSE(res.sw_p_a.has_value());
}

TEST_CASE("paired gate rules match the reported branch choices") {
    CHECK(select_paired_test(0.060) == StatTest::PairedT);
    CHECK(select_paired_test(0.001) == StatTest::WilcoxonSignedRank);
    CHECK(select_paired_test(0.030) == StatTest::WilcoxonSignedRank);
    CHECK(select_paired_test(0.0005) == StatTest::WilcoxonSignedRank);
    CHECK(select_paired_test(0.05) == StatTest::PairedT);  // boundary: p >= alpha

    std::vector<double> same{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(compare_paired(same, same), StatsError);

    std::vector<double> a{4.0, 5.0, 6.0, 7.0};
    std::vector<double> b{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(compare_paired(a, b), StatsError);  // length mismatch
}

TEST_CASE("compare_paired records the gate p and routes accordingly") {
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> a, b;
    std::mt19937_64 gen(17);
    for (int i = 0; i < 20; ++i) {
        double base = noise(gen);
        a.push_back(base + 1.0 + 0.1 * noise(gen));
        b.push_back(base);
    }
    auto res = compare_paired(a, b);
    REQUIRE(res.sw_p_diff.has_value());
    CHECK(res.test == select_paired_test(*res.sw_p_diff));
}

TEST_CASE("p-values live in [0,1] for random inputs") {
    std::mt19937_64 rng(31);
    for (int round = 0; round < 40; ++round) {
        size_t na = 3 + rng() % 30, nb = 3 + rng() % 30;
        std::vector<double> a(na), b(nb);
        for (double& v : a) v = static_cast<double>(rng() % 100) / 7.0;
        for (double& v : b) v = static_cast<double>(rng() % 100) / 9.0;
        auto res = compare_unpaired(a, b);
        CHECK(res.p_value >= 0.0);
        CHECK(res.p_value <= 1.0);
        if (res.test == StatTest::MannWhitneyU) {
            CHECK(res.effect_size >= 0.0);
            CHECK(res.effect_size <= 1.0);
        }
    }
}
