#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "gfdtl/simgen.hpp"

using namespace gfdtl;

TEST_CASE("positive-definite repair shifts by the documented amount", "[simgen]") {
    // diag(0, 1): lmin = 0, first admissible multiple of 0.005 is 0.015
    Mat m = Mat::Zero(2, 2);
    m(1, 1) = 1.0;
    const Mat fixed = repair_pd(m);
    CHECK(fixed(0, 0) == Catch::Approx(0.015).margin(1e-15));
    CHECK(fixed(1, 1) == Catch::Approx(1.015).margin(1e-15));
    CHECK(fixed(0, 1) == 0.0);

    // already clearing the bar: untouched
    const Mat eye = Mat::Identity(3, 3);
    CHECK((repair_pd(eye) - eye).norm() == 0.0);

    // indefinite input: common diagonal shift of zeta + |lmin|, where zeta is
    // the first 0.005-multiple clearing the bar (rounding decides ties, so
    // only the bracket [0.01, 0.015] is pinned, not the exact multiple)
    Mat ind = Mat::Zero(2, 2);
    ind(0, 0) = -1.0;
    ind(1, 1) = 1.0;
    const Mat fixed2 = repair_pd(ind);
    const double shift = fixed2(0, 0) - ind(0, 0);
    CHECK(fixed2(1, 1) - ind(1, 1) == Catch::Approx(shift).margin(1e-15));
    CHECK(shift >= 1.01 - 1e-12);
    CHECK(shift <= 1.015 + 1e-12);
    CHECK(fixed2(0, 0) >= 0.01 - 1e-12);

    Mat asym(2, 2);
    asym << 1, 2, 3, 4;
    CHECK_THROWS_AS(repair_pd(asym), std::invalid_argument);
}

TEST_CASE("repaired matrices clear the eigenvalue bar", "[simgen]") {
    PhiloxRng rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        Mat m(4, 4);
        for (int u = 0; u < 4; ++u)
            for (int v = 0; v <= u; ++v) m(u, v) = m(v, u) = rng.uniform(-1.0, 1.0);
        const Mat out = repair_pd(m);
        const Eigen::SelfAdjointEigenSolver<Mat> es(out, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >= 0.01 - 1e-12);
        // only the diagonal moves, by a common nonnegative shift
        const Mat diff = out - m;
        CHECK((diff - diff(0, 0) * Mat::Identity(4, 4)).norm() <= 1e-12);
        CHECK(diff(0, 0) >= 0.0);
    }
}

TEST_CASE("random-graph regimes respect the magnitude recipe", "[simgen]") {
    PhiloxRng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const Mat m = gen_regime(ScenarioKind::RandomGraph, 10, 0.8, rng);
        CHECK((m - m.transpose()).norm() == 0.0);
        for (int u = 0; u < 10; ++u) CHECK(m(u, u) >= 0.5);
        for (int u = 1; u < 10; ++u)
            for (int v = 0; v < u; ++v) {
                const double a = std::abs(m(u, v));
                CHECK((a == 0.0 || (a >= 0.05 && a <= 0.8)));
            }
        const Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >= 0.01 - 1e-12);
    }
}

TEST_CASE("fixed-zeros regimes hit the exact zero count", "[simgen]") {
    PhiloxRng rng(12);
    for (int rep = 0; rep < 20; ++rep) {
        const Mat m = gen_regime(ScenarioKind::FixedZeros, 10, 0.8, rng);
        int zeros = 0;
        for (int u = 1; u < 10; ++u)
            for (int v = 0; v < u; ++v) {
                if (m(u, v) == 0.0) ++zeros;
                CHECK(std::abs(m(u, v)) <= 1.0);
            }
        CHECK(zeros == 36);  // round(0.8 * 45)
        for (int u = 0; u < 10; ++u) CHECK(m(u, u) >= 1.1);
    }

    PhiloxRng rng2(13);
    const Mat half = gen_regime(ScenarioKind::FixedZeros, 4, 0.5, rng2);
    int zeros = 0;
    for (int u = 1; u < 4; ++u)
        for (int v = 0; v < u; ++v) zeros += half(u, v) == 0.0;
    CHECK(zeros == 3);  // round(0.5 * 6)
}

TEST_CASE("banded regimes zero out small entries", "[simgen]") {
    PhiloxRng rng(14);
    for (int rep = 0; rep < 20; ++rep) {
        const Mat m = gen_regime(ScenarioKind::Banded, 10, 0.0, rng);
        CHECK((m - m.transpose()).norm() == 0.0);
        for (int u = 1; u < 10; ++u)
            for (int v = 0; v < u; ++v) {
                const double a = std::abs(m(u, v));
                CHECK((a == 0.0 || a >= 0.05));
            }
        const Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >= 0.01 - 1e-12);
    }
}

TEST_CASE("scenario generation is deterministic in the seed", "[simgen]") {
    ScenarioConfig cfg;
    cfg.p = 4;
    cfg.T = 40;
    cfg.m_star = 1;
    cfg.seed = 99;
    const auto [gt1, s1] = gen_scenario(cfg);
    const auto [gt2, s2] = gen_scenario(cfg);
    REQUIRE(gt1.true_breaks.dates == gt2.true_breaks.dates);
    for (int t = 1; t <= cfg.T; ++t) CHECK((s1.x(t) - s2.x(t)).norm() == 0.0);
    for (int t = 0; t < cfg.T; ++t) CHECK((gt1.true_path[t] - gt2.true_path[t]).norm() == 0.0);

    cfg.seed = 100;
    const auto [gt3, s3] = gen_scenario(cfg);
    bool same = true;
    for (int t = 1; t <= cfg.T && same; ++t) same = (s1.x(t) - s3.x(t)).norm() == 0.0;
    CHECK_FALSE(same);
}

TEST_CASE("break dates respect the minimum block length", "[simgen]") {
    ScenarioConfig cfg;
    cfg.p = 2;
    cfg.T = 150;
    cfg.m_star = 1;
    CHECK(cfg.min_block_len() == 17);  // ceil(150 / 9)
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        cfg.seed = seed;
        const auto [gt, sample] = gen_scenario(cfg);
        REQUIRE(gt.true_breaks.dates.size() == 1);
        const int b = gt.true_breaks.dates[0];
        CHECK(b >= 18);
        CHECK(b <= 134);
    }

    cfg.m_star = 4;
    CHECK(cfg.min_block_len() == 13);  // ceil(150 / 12)
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        cfg.seed = seed;
        const auto [gt, sample] = gen_scenario(cfg);
        REQUIRE(gt.true_breaks.dates.size() == 4);
        int prev = 1;
        for (const int b : gt.true_breaks.dates) {
            CHECK(b - prev >= 13);
            prev = b;
        }
        CHECK(cfg.T + 1 - prev >= 13);
    }
}

TEST_CASE("single break placement is uniform over admissible dates", "[simgen]") {
    // T = 7, one break, minimum block one date: every date in {2..7} is an
    // admissible placement and each should appear with frequency 1/6
    ScenarioConfig cfg;
    cfg.p = 1;
    cfg.T = 7;
    cfg.m_star = 1;
    std::map<int, int> counts;
    const int n = 6000;
    for (std::uint64_t seed = 0; seed < n; ++seed) {
        cfg.seed = seed;
        const auto [gt, sample] = gen_scenario(cfg);
        REQUIRE(gt.true_breaks.dates.size() == 1);
        counts[gt.true_breaks.dates[0]] += 1;
    }
    REQUIRE(counts.size() == 6);
    for (const auto& [date, c] : counts) {
        CHECK(date >= 2);
        CHECK(date <= 7);
        CHECK(std::abs(c - n / 6) < 150);  // ~5 sigma for a fair 1/6 cell
    }
}

TEST_CASE("true path switches regimes exactly at the break dates", "[simgen]") {
    ScenarioConfig cfg;
    cfg.p = 5;
    cfg.T = 60;
    cfg.m_star = 2;
    cfg.seed = 21;
    const auto [gt, sample] = gen_scenario(cfg);
    REQUIRE(gt.regimes.size() == 3);
    const BreakSet from_path = extract_breaks(gt.true_path, 1e-12);
    CHECK(from_path.dates == gt.true_breaks.dates);
    CHECK((gt.true_path[0] - gt.regimes[0]).norm() == 0.0);
    CHECK((gt.true_path[cfg.T - 1] - gt.regimes[2]).norm() == 0.0);
    CHECK(sample.T() == cfg.T);
    CHECK(sample.p() == cfg.p);
}

TEST_CASE("observations have the regime covariance in the long run", "[simgen]") {
    ScenarioConfig cfg;
    cfg.kind = ScenarioKind::FixedZeros;
    cfg.p = 3;
    cfg.T = 20000;
    cfg.m_star = 0;
    cfg.sparsity = 0.4;
    cfg.seed = 5;
    const auto [gt, sample] = gen_scenario(cfg);
    const Mat cov_true = gt.regimes[0].inverse();
    Mat cov_emp = Mat::Zero(3, 3);
    for (int t = 1; t <= cfg.T; ++t) cov_emp += sample.x(t) * sample.x(t).transpose();
    cov_emp /= cfg.T;
    CHECK((cov_emp - cov_true).norm() <= 0.1 * cov_true.norm());
}

TEST_CASE("impossible scenario configurations are rejected", "[simgen]") {
    ScenarioConfig cfg;
    cfg.p = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.p = 2;
    cfg.T = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.T = 20;
    cfg.m_star = -1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.m_star = 10;  // 11 blocks of >= 2 dates will not fit in T = 20
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.m_star = 0;
    cfg.sparsity = 1.2;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.sparsity = 0.5;
    CHECK_NOTHROW(cfg.validate());
}
