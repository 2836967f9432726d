#ifndef GFDTL_MODEL_HPP
#define GFDTL_MODEL_HPP

/*
 * Core domain types for time-varying sparse precision estimation:
 * the observation sample, penalty configuration, precision paths and
 * the ADMM split/dual state, plus the two objective evaluations every
 * other component builds on.
 */

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "gfdtl/proxops.hpp"

namespace gfdtl {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// A time-indexed sequence of dense p x p matrices.
using MatSeq = std::vector<Mat>;

// Estimated precision matrices, one per observation date.
using PrecisionPath = MatSeq;

/// Observation sample: T rows, one length-p vector per date.
struct Sample {
    Mat obs;  // T x p, row t-1 holds X_t

    int T() const { return static_cast<int>(obs.rows()); }
    int p() const { return static_cast<int>(obs.cols()); }

    Vec x(int t) const { return obs.row(t - 1).transpose(); }  // 1-based date

    static Sample from_rows(Mat rows) {
        if (rows.rows() < 2)
            throw std::invalid_argument("Sample: need at least two observations");
        if (rows.cols() < 1)
            throw std::invalid_argument("Sample: need at least one variable");
        if (!rows.allFinite())
            throw std::invalid_argument("Sample: observations must be finite");
        return Sample{std::move(rows)};
    }
};

/// Tuning parameters and solver controls.
struct PenaltyConfig {
    double lambda1 = 0.1;   // off-diagonal l1 weight
    double lambda2 = 10.0;  // group-fusion weight
    double lambda3 = 10.0;  // switch radius of the modified regularizer
    double eps = 0.01;      // eigenvalue floor on the precision matrices
    double beta = 21.0;     // augmented-Lagrangian penalty
    double eps_tol = 1e-3;  // outer stopping tolerance
    double eps_pcg = 1e-2;  // initial inner CG tolerance
    double tau = 0.9;       // inner-tolerance decay factor
    int max_iters = 50000;

    void validate() const {
        if (!(lambda1 >= 0)) throw std::invalid_argument("PenaltyConfig: lambda1 must be >= 0");
        if (!(lambda2 >= 0)) throw std::invalid_argument("PenaltyConfig: lambda2 must be >= 0");
        if (!(lambda3 >= 0.5))
            throw std::invalid_argument("PenaltyConfig: lambda3 must be >= 0.5 for convexity");
        if (!(eps > 0)) throw std::invalid_argument("PenaltyConfig: eps must be positive");
        if (!(beta > 0)) throw std::invalid_argument("PenaltyConfig: beta must be positive");
        if (!(eps_tol > 0)) throw std::invalid_argument("PenaltyConfig: eps_tol must be positive");
        if (!(eps_pcg > 0 && eps_pcg < 1))
            throw std::invalid_argument("PenaltyConfig: eps_pcg must lie in (0,1)");
        if (!(tau > 0 && tau < 1))
            throw std::invalid_argument("PenaltyConfig: tau must lie in (0,1)");
        if (max_iters < 1) throw std::invalid_argument("PenaltyConfig: max_iters must be >= 1");
    }
};

/// Multipliers of the three splitting constraints; W is derived from the
/// current path when certificates are evaluated, not an independent variable.
struct DualState {
    MatSeq A;      // T multipliers for V_t = Theta_t
    MatSeq Y_off;  // T zero-diagonal multipliers for Upsilon_t = Theta_t,off
    MatSeq Z;      // T-1 multipliers for D_t = Theta_{t+1} - Theta_t
    MatSeq W;      // T derived matrices (X_t X_t')^{1/2} Theta_t
};

/// Auxiliary ADMM variables mirroring the path.
struct SplitState {
    MatSeq V;            // PSD-floored copies
    MatSeq Upsilon_off;  // zero-diagonal soft-thresholded copies
    MatSeq D;            // successive differences, length T-1
};

enum class SolveStatus { Converged, PossiblyUnsolvable, Stalled, MaxIterations };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "Converged";
        case SolveStatus::PossiblyUnsolvable: return "PossiblyUnsolvable";
        case SolveStatus::Stalled: return "Stalled";
        case SolveStatus::MaxIterations: return "MaxIterations";
    }
    return "Unknown";
}

/// Estimated break dates: each date is the first index of a new block.
struct BreakSet {
    std::vector<int> dates;  // strictly increasing, within {2,...,T}

    int count() const { return static_cast<int>(dates.size()); }
};

namespace detail {

inline void check_path_dims(const PrecisionPath& path, const Sample& sample, const char* where) {
    if (static_cast<int>(path.size()) != sample.T())
        throw std::invalid_argument(std::string(where) + ": path length must equal T");
    for (const Mat& m : path)
        if (m.rows() != sample.p() || m.cols() != sample.p())
            throw std::invalid_argument(std::string(where) + ": matrix dimension mismatch");
}

inline double offdiag_l1(const Mat& m) {
    return m.cwiseAbs().sum() - m.diagonal().cwiseAbs().sum();
}

}  // namespace detail

/// Average D-trace loss (1/T) sum_t [ tr(Theta_t^2 X_t X_t'/2) - tr(Theta_t) ].
inline double dtrace_loss(const PrecisionPath& path, const Sample& sample) {
    detail::check_path_dims(path, sample, "dtrace_loss");
    const int T = sample.T();
    double acc = 0.0;
    for (int t = 1; t <= T; ++t) {
        const Mat& th = path[t - 1];
        const Vec xt = sample.x(t);
        // tr(Theta^2 x x') = (Theta' x) . (Theta x)
        acc += 0.5 * (th.transpose() * xt).dot(th * xt) - th.trace();
    }
    return acc / T;
}

/// Full objective: summed per-date D-trace terms plus lambda1 off-diagonal l1
/// and lambda2 fused penalties. The eigenvalue-floor indicator is intentionally
/// not evaluated; feasibility is certified separately.
inline double primal_objective(const PrecisionPath& path, const Sample& sample,
                               const PenaltyConfig& cfg) {
    detail::check_path_dims(path, sample, "primal_objective");
    const int T = sample.T();
    double smooth = 0.0, l1 = 0.0, fused = 0.0;
    for (int t = 1; t <= T; ++t) {
        const Mat& th = path[t - 1];
        const Vec xt = sample.x(t);
        smooth += 0.5 * (th.transpose() * xt).dot(th * xt) - th.trace();
        l1 += detail::offdiag_l1(th);
        if (t < T) fused += r_value((path[t] - th).norm(), cfg.lambda3);
    }
    return smooth + cfg.lambda1 * l1 + cfg.lambda2 * fused;
}

}  // namespace gfdtl

#endif  // GFDTL_MODEL_HPP
