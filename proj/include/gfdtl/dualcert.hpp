#ifndef GFDTL_DUALCERT_HPP
#define GFDTL_DUALCERT_HPP

/*
 * Dual objective, dual infeasibility and duality gap of the revised problem.
 * These three numbers are the convergence certificates: the solver stops when
 * the normalized gap and infeasibility both clear the outer tolerance.
 */

#include <algorithm>
#include <cmath>

#include "gfdtl/model.hpp"
#include "gfdtl/proxops.hpp"

namespace gfdtl {

struct Certificate {
    double primal_obj = 0.0;
    double dual_obj = 0.0;
    double dfeas1 = 0.0;
    double dfeas2 = 0.0;
    double gap_value = 0.0;

    double dfeas() const { return std::max(dfeas1, dfeas2); }
};

namespace detail {

// Sym((X X')^{1/2} W) with the rank-1 square root (x x')^{1/2} = x x' / ||x||.
inline Mat sym_gram_sqrt_times(const Vec& x, const Mat& W) {
    const double nx = x.norm();
    if (nx == 0.0) return Mat::Zero(W.rows(), W.cols());
    const Vec xw = W.transpose() * x;  // (x' W)'
    Mat m = (x * xw.transpose()) / nx;
    return 0.5 * (m + m.transpose());
}

inline double max_offdiag_abs(const MatSeq& seq) {
    double mx = 0.0;
    for (const Mat& m : seq) {
        const auto n = m.rows();
        for (Eigen::Index u = 0; u < n; ++u)
            for (Eigen::Index v = 0; v < n; ++v)
                if (u != v) mx = std::max(mx, std::abs(m(u, v)));
    }
    return mx;
}

// |min{lambda_min(M), 0}| for symmetric M; a successful Cholesky factorization
// of M certifies lambda_min >= 0 without the eigensolve.
inline double negative_part_lambda_min(const Mat& M) {
    Eigen::LLT<Mat> llt(M);
    if (llt.info() == Eigen::Success) return 0.0;
    Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
    return std::abs(std::min(es.eigenvalues().minCoeff(), 0.0));
}

}  // namespace detail

/// W_t = (X_t X_t')^{1/2} Theta_t for every date, the derived dual component.
inline MatSeq derive_w(const Sample& sample, const PrecisionPath& path) {
    const int T = sample.T(), p = sample.p();
    MatSeq W(T);
    for (int t = 1; t <= T; ++t) {
        const Vec x = sample.x(t);
        const double nx = x.norm();
        if (nx == 0.0)
            W[t - 1] = Mat::Zero(p, p);
        else
            W[t - 1] = (x / nx) * (x.transpose() * path[t - 1]);
    }
    return W;
}

/// zeta_t = Z_t - Z_{t-1} - I + Sym((X_t X_t')^{1/2} W_t) - Y_t,off,
/// with Z_0 and Z_T treated as zero; t is 1-based.
inline Mat zeta(const Sample& sample, const DualState& duals, int t) {
    const int T = sample.T(), p = sample.p();
    Mat z = -Mat::Identity(p, p);
    if (t < T) z += duals.Z[t - 1];
    if (t > 1) z -= duals.Z[t - 2];
    z += detail::sym_gram_sqrt_times(sample.x(t), duals.W[t - 1]);
    z -= duals.Y_off[t - 1];
    return 0.5 * (z + z.transpose());
}

/// Revised dual objective
///   sum_t -tr(W_t' W_t)/2 + eps sum_t tr(zeta_t) + sum_{t<T} G(||Z_t||_F).
inline double dual_objective(const Sample& sample, const DualState& duals,
                             const PenaltyConfig& cfg) {
    const int T = sample.T();
    double acc = 0.0;
    for (int t = 1; t <= T; ++t) {
        acc -= 0.5 * duals.W[t - 1].squaredNorm();
        acc += cfg.eps * zeta(sample, duals, t).trace();
        if (t < T) acc += g_value(duals.Z[t - 1].norm(), cfg.lambda3, cfg.lambda2);
    }
    return acc;
}

/// Relative dual infeasibility pair: the PSD violation of each zeta_t and the
/// box violation of Y against its dual bound lambda1.
inline std::pair<double, double> dfeas(const DualState& duals, const Sample& sample,
                                       const PenaltyConfig& cfg) {
    const int T = sample.T();
    double d1 = 0.0;
    for (int t = 1; t <= T; ++t) {
        const Mat z = zeta(sample, duals, t);
        d1 = std::max(d1, detail::negative_part_lambda_min(z) / (z.norm() + 1.0));
    }
    const double ymax = detail::max_offdiag_abs(duals.Y_off);
    const double d2 = std::max(ymax - cfg.lambda1, 0.0) / (1.0 + ymax);
    return {d1, d2};
}

/// Relative duality gap |v_p - v_d| / (1 + |v_p| + |v_d|).
inline double gap(double primal_obj, double dual_obj) {
    return std::abs(primal_obj - dual_obj) / (1.0 + std::abs(primal_obj) + std::abs(dual_obj));
}

}  // namespace gfdtl

#endif  // GFDTL_DUALCERT_HPP
