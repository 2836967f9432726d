#ifndef GFDTL_SIMGEN_HPP
#define GFDTL_SIMGEN_HPP

/*
 * Synthetic ground-truth generators: piecewise-constant precision paths with
 * randomly placed breaks and Gaussian observations drawn from them.  Three
 * regime-matrix recipes are provided:
 *
 *   RandomGraph   - Erdos-Renyi support, each lower-triangular entry is an
 *                   edge independently; magnitudes U([0.05, 0.8]) with random
 *                   sign, diagonal U([0.5, 1]).
 *   FixedZeros    - exactly round(sparsity * p(p-1)/2) lower-triangular
 *                   entries are zero; the rest U([-1, 1]), diagonal
 *                   U([1.1, 1.5]).
 *   Banded        - inverse of D^{1/2} C D^{1/2} with C_uv = a^{|u-v|}
 *                   (a is 0.4 or 0.1 with equal probability), small entries
 *                   zeroed and signs shuffled.
 *
 * Every regime is shifted to keep its smallest eigenvalue above 0.01.
 * Generation is deterministic given the seed; draw order is documented in
 * gen_scenario so ports can match statistically.
 */

#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gfdtl/breaks.hpp"
#include "gfdtl/model.hpp"
#include "gfdtl/rng.hpp"

namespace gfdtl {

enum class ScenarioKind { RandomGraph = 1, FixedZeros = 2, Banded = 3 };

inline const char* to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::RandomGraph: return "random-graph";
        case ScenarioKind::FixedZeros: return "fixed-zeros";
        case ScenarioKind::Banded: return "banded";
    }
    return "unknown";
}

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::RandomGraph;
    int p = 10;
    int T = 100;
    int m_star = 0;          // true number of breaks
    double sparsity = 0.8;   // proportion of zero lower-triangular entries
    std::uint64_t seed = 0;

    /// Smallest admissible block length: every regime must span at least
    /// kappa T dates with kappa = 1/(m* + 8).
    int min_block_len() const {
        const double kappa = 1.0 / (m_star + 8.0);
        return static_cast<int>(std::ceil(kappa * T - 1e-9));
    }

    void validate() const {
        if (p < 1) throw std::invalid_argument("scenario: p must be positive");
        if (T < 2) throw std::invalid_argument("scenario: T must be at least 2");
        if (m_star < 0) throw std::invalid_argument("scenario: m_star must be nonnegative");
        if (sparsity < 0.0 || sparsity > 1.0)
            throw std::invalid_argument("scenario: sparsity must lie in [0, 1]");
        if ((m_star + 1) * min_block_len() > T)
            throw std::invalid_argument(
                "scenario: T too small to hold m_star+1 blocks of the minimum length");
    }
};

struct GroundTruth {
    PrecisionPath true_path;  // length T
    BreakSet true_breaks;     // dates where a new regime starts
    MatSeq regimes;           // m_star + 1 matrices in order
};

/// Shift a symmetric matrix just enough that its smallest eigenvalue clears
/// 0.01: add (zeta + |lmin|) I with zeta the first multiple of 0.005 that
/// works.  Matrices already clearing the bar pass through untouched.
inline Mat repair_pd(const Mat& m) {
    if (m.rows() != m.cols() || !m.isApprox(m.transpose(), 1e-10))
        throw std::invalid_argument("repair_pd: matrix must be symmetric");
    const Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin >= 0.01) return m;
    double zeta = 0.0;
    do {
        zeta += 0.005;
    } while (lmin + zeta + std::abs(lmin) <= 0.01);
    Mat out = m;
    out.diagonal().array() += zeta + std::abs(lmin);
    return out;
}

/// One regime precision matrix for the given recipe.  Draw order (per call):
/// RandomGraph: p diagonal values, then per lower-triangular entry in row
/// order an edge coin and, when present, a magnitude and a sign coin.
/// FixedZeros: p diagonal values, a partial shuffle selecting the zero set,
/// then values for the surviving entries in row order.  Banded: the band
/// coefficient coin, then p diagonal scales, then per nonzero entry a sign
/// coin.
inline Mat gen_regime(ScenarioKind kind, int p, double sparsity, PhiloxRng& rng) {
    Mat m = Mat::Zero(p, p);
    switch (kind) {
        case ScenarioKind::RandomGraph: {
            for (int u = 0; u < p; ++u) m(u, u) = rng.uniform(0.5, 1.0);
            for (int u = 1; u < p; ++u)
                for (int v = 0; v < u; ++v)
                    if (rng.bernoulli(1.0 - sparsity)) {
                        const double mag = rng.uniform(0.05, 0.8);
                        m(u, v) = m(v, u) = rng.bernoulli(0.5) ? mag : -mag;
                    }
            break;
        }
        case ScenarioKind::FixedZeros: {
            for (int u = 0; u < p; ++u) m(u, u) = rng.uniform(1.1, 1.5);
            const int n_low = p * (p - 1) / 2;
            const int n_zero = static_cast<int>(std::lround(sparsity * n_low));
            std::vector<int> order(n_low);
            for (int i = 0; i < n_low; ++i) order[i] = i;
            // partial Fisher-Yates: the first n_zero slots are the zero set
            for (int i = 0; i < n_zero; ++i) {
                const int j = i + static_cast<int>(rng.uniform_int(n_low - i));
                std::swap(order[i], order[j]);
            }
            std::set<int> zeros(order.begin(), order.begin() + n_zero);
            int idx = 0;
            for (int u = 1; u < p; ++u)
                for (int v = 0; v < u; ++v, ++idx)
                    if (!zeros.count(idx)) m(u, v) = m(v, u) = rng.uniform(-1.0, 1.0);
            break;
        }
        case ScenarioKind::Banded: {
            const double a = rng.bernoulli(0.5) ? 0.4 : 0.1;
            Vec scale(p);
            for (int u = 0; u < p; ++u) scale(u) = rng.uniform(0.5, 2.0);
            Mat sigma(p, p);
            for (int u = 0; u < p; ++u)
                for (int v = 0; v < p; ++v)
                    sigma(u, v) = std::sqrt(scale(u) * scale(v)) * std::pow(a, std::abs(u - v));
            Mat omega = sigma.llt().solve(Mat::Identity(p, p));
            omega = 0.5 * (omega + omega.transpose()).eval();
            for (int u = 0; u < p; ++u) m(u, u) = omega(u, u);
            for (int u = 1; u < p; ++u)
                for (int v = 0; v < u; ++v) {
                    double w = std::abs(omega(u, v)) < 0.05 ? 0.0 : omega(u, v);
                    if (w != 0.0 && rng.bernoulli(0.5)) w = -w;
                    m(u, v) = m(v, u) = w;
                }
            break;
        }
    }
    return repair_pd(m);
}

namespace detail {

/// Uniform draw of m break dates over all placements whose m+1 blocks each
/// span at least min_len dates, through the usual bijection with m-subsets
/// of {1, ..., N+m} where N = T - (m+1) min_len is the free slack.
inline BreakSet draw_break_dates(int T, int m, int min_len, PhiloxRng& rng) {
    BreakSet bs;
    if (m == 0) return bs;
    const int N = T - (m + 1) * min_len;
    std::set<int> picked;  // Floyd's sampling: m distinct values in {1..N+m}
    for (int j = N + 1; j <= N + m; ++j) {
        const int x = 1 + static_cast<int>(rng.uniform_int(j));
        picked.insert(picked.count(x) ? j : x);
    }
    int prev = 0, date = 1;
    for (const int c : picked) {
        date += min_len + (c - prev - 1);  // block length = min_len + slack
        prev = c;
        bs.dates.push_back(date);
    }
    return bs;
}

}  // namespace detail

/// Draw a full scenario: break dates, regime matrices, and T Gaussian
/// observations X_t ~ N(0, inverse of the active regime).  Draw order: break
/// placement, then regimes in order, then observations date by date (p
/// normals each).  Deterministic given cfg.seed.
inline std::pair<GroundTruth, Sample> gen_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    PhiloxRng rng(cfg.seed);

    GroundTruth gt;
    gt.true_breaks = detail::draw_break_dates(cfg.T, cfg.m_star, cfg.min_block_len(), rng);
    for (int j = 0; j <= cfg.m_star; ++j)
        gt.regimes.push_back(gen_regime(cfg.kind, cfg.p, cfg.sparsity, rng));

    gt.true_path.resize(cfg.T);
    std::vector<int> regime_of(cfg.T + 1, 0);
    for (int t = 1; t <= cfg.T; ++t) {
        int j = 0;
        for (const int b : gt.true_breaks.dates)
            if (b <= t) ++j;
        regime_of[t] = j;
        gt.true_path[t - 1] = gt.regimes[j];
    }

    // symmetric square roots of each regime covariance, from the precision
    // eigendecomposition: cov^{1/2} = U diag(lambda^{-1/2}) U'
    std::vector<Mat> roots;
    roots.reserve(gt.regimes.size());
    for (const Mat& omega : gt.regimes) {
        const Eigen::SelfAdjointEigenSolver<Mat> es(omega);
        roots.push_back(es.eigenvectors() *
                        es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                        es.eigenvectors().transpose());
    }

    Mat rows(cfg.T, cfg.p);
    Vec z(cfg.p);
    for (int t = 1; t <= cfg.T; ++t) {
        for (int k = 0; k < cfg.p; ++k) z(k) = rng.normal();
        rows.row(t - 1) = (roots[regime_of[t]] * z).transpose();
    }
    return {std::move(gt), Sample::from_rows(rows)};
}

}  // namespace gfdtl

#endif  // GFDTL_SIMGEN_HPP
