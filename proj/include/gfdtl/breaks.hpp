#ifndef GFDTL_BREAKS_HPP
#define GFDTL_BREAKS_HPP

/*
 * Break extraction from a fitted path and the evaluation metrics used to
 * score an estimate against a known ground truth: break count and location
 * error, sparsity-pattern recovery, and precision-matrix accuracy.
 */

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gfdtl/model.hpp"

namespace gfdtl {

struct MetricReport {
    int nb = 0;        // number of detected breaks
    double d_h = 0.0;  // Hausdorff break-location error, percent of T
    double f1 = 0.0;
    double acc = 0.0;
    double mse = 0.0;
};

/// Dates t+1 whose step ||Theta_{t+1} - Theta_t||_F reaches the threshold.
inline BreakSet extract_breaks(const PrecisionPath& path, double threshold = 1e-6) {
    if (path.size() < 2) throw std::invalid_argument("extract_breaks: need T >= 2");
    BreakSet bs;
    for (std::size_t t = 0; t + 1 < path.size(); ++t)
        if ((path[t + 1] - path[t]).norm() >= threshold)
            bs.dates.push_back(static_cast<int>(t) + 2);
    return bs;
}

/// Same reading applied to a sequence of T-1 step estimates, steps[t] being
/// the estimated difference between dates t+1 and t+2.
inline BreakSet step_breaks(const std::vector<Mat>& steps, double threshold = 1e-6) {
    BreakSet bs;
    for (std::size_t t = 0; t < steps.size(); ++t)
        if (steps[t].norm() >= threshold) bs.dates.push_back(static_cast<int>(t) + 2);
    return bs;
}

namespace detail {

inline double directed_h(const std::vector<int>& a, const std::vector<int>& b) {
    double h = 0.0;
    for (int bv : b) {
        double closest = std::numeric_limits<double>::infinity();
        for (int av : a) closest = std::min(closest, static_cast<double>(std::abs(av - bv)));
        h = std::max(h, closest);
    }
    return h;
}

}  // namespace detail

/// Two-sided Hausdorff distance between break sets as a percentage of T;
/// both sets are augmented with the conventional endpoints {1, T+1} so the
/// distance stays finite when either set is empty.
inline double hausdorff_dh(const BreakSet& est, const BreakSet& truth, int T) {
    std::vector<int> a = est.dates, b = truth.dates;
    a.push_back(1);
    a.push_back(T + 1);
    b.push_back(1);
    b.push_back(T + 1);
    return 100.0 * std::max(detail::directed_h(a, b), detail::directed_h(b, a)) / T;
}

/// F1 and accuracy of the off-diagonal support pattern, classifying each
/// lower-triangular entry at each date as nonzero iff |entry| > zero_tol.
inline std::pair<double, double> sparsity_scores(const PrecisionPath& est,
                                                 const PrecisionPath& truth,
                                                 double zero_tol = 1e-6) {
    if (est.size() != truth.size())
        throw std::invalid_argument("sparsity_scores: path length mismatch");
    long tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t t = 0; t < est.size(); ++t) {
        if (est[t].rows() != truth[t].rows())
            throw std::invalid_argument("sparsity_scores: dimension mismatch");
        const auto pdim = est[t].rows();
        for (Eigen::Index u = 1; u < pdim; ++u)
            for (Eigen::Index v = 0; v < u; ++v) {
                const bool e = std::abs(est[t](u, v)) > zero_tol;
                const bool s = std::abs(truth[t](u, v)) > zero_tol;
                if (e && s) ++tp;
                else if (!e && !s) ++tn;
                else if (e) ++fp;
                else ++fn;
            }
    }
    const long f1_den = 2 * tp + fn + fp;
    const double f1 = f1_den == 0 ? 1.0 : 2.0 * tp / f1_den;
    const long total = tp + tn + fp + fn;
    const double acc = total == 0 ? 1.0 : static_cast<double>(tp + tn) / total;
    return {f1, acc};
}

/// Root mean squared entry error sqrt( (p^2 T)^{-1} sum_t ||est_t - true_t||_F^2 ).
inline double path_mse(const PrecisionPath& est, const PrecisionPath& truth) {
    if (est.size() != truth.size()) throw std::invalid_argument("path_mse: path length mismatch");
    double acc = 0.0;
    for (std::size_t t = 0; t < est.size(); ++t) {
        if (est[t].rows() != truth[t].rows() || est[t].cols() != truth[t].cols())
            throw std::invalid_argument("path_mse: dimension mismatch");
        acc += (est[t] - truth[t]).squaredNorm();
    }
    const double p = static_cast<double>(est[0].rows());
    return std::sqrt(acc / (p * p * static_cast<double>(est.size())));
}

/// All scores of an estimated path against the truth in one record.
inline MetricReport evaluate_path(const PrecisionPath& est, const PrecisionPath& truth,
                                  const BreakSet& true_breaks, double break_threshold = 1e-6,
                                  double zero_tol = 1e-6) {
    MetricReport r;
    const BreakSet est_breaks = extract_breaks(est, break_threshold);
    r.nb = est_breaks.count();
    r.d_h = hausdorff_dh(est_breaks, true_breaks, static_cast<int>(est.size()));
    std::tie(r.f1, r.acc) = sparsity_scores(est, truth, zero_tol);
    r.mse = path_mse(est, truth);
    return r;
}

}  // namespace gfdtl

#endif  // GFDTL_BREAKS_HPP
