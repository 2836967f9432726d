#ifndef GFDTL_GMVP_HPP
#define GFDTL_GMVP_HPP

/*
 * Global minimum-variance portfolio built from estimated precision matrices:
 * weights proportional to the row sums of Theta, and a walk-forward backtest
 * where the weights for date t come from the estimate at date t-1.
 */

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gfdtl/breaks.hpp"
#include "gfdtl/model.hpp"

namespace gfdtl {

struct PortfolioReport {
    double avg = 0.0;        // annualized mean return (times 252)
    double sd = 0.0;         // annualized standard deviation (times sqrt(252))
    double ir = 0.0;         // avg / sd, or 0 when sd degenerates
    int nb = 0;              // breaks detected in the path driving the weights
    bool zero_volatility = false;
};

/// Minimum-variance weights w = Theta 1 / (1' Theta 1), renormalized so they
/// sum to one exactly.  Scale-invariant in Theta.
inline Vec gmvp_weights(const Mat& theta) {
    if (theta.rows() != theta.cols() || theta.rows() < 1)
        throw std::invalid_argument("gmvp_weights: need a square matrix");
    const Vec row_sums = theta.rowwise().sum();
    const double total = row_sums.sum();
    if (std::abs(total) < 1e-10 * (1.0 + theta.cwiseAbs().maxCoeff()))
        throw std::domain_error("gmvp_weights: 1' Theta 1 is numerically zero");
    Vec w = row_sums / total;
    w /= w.sum();
    return w;
}

namespace detail {

inline PortfolioReport summarize_returns(const std::vector<double>& r, int nb) {
    PortfolioReport rep;
    rep.nb = nb;
    const int n = static_cast<int>(r.size());
    double mean = 0.0;
    for (const double v : r) mean += v;
    mean /= n;
    double var = 0.0;
    if (n > 1) {
        for (const double v : r) var += (v - mean) * (v - mean);
        var /= (n - 1);
    }
    rep.avg = mean * 252.0;
    rep.sd = std::sqrt(var) * std::sqrt(252.0);
    if (rep.sd > 0.0) {
        rep.ir = rep.avg / rep.sd;
    } else {
        rep.ir = 0.0;
        rep.zero_volatility = true;
    }
    return rep;
}

}  // namespace detail

/// Walk-forward backtest: the portfolio held over date t uses the precision
/// estimate from date t-1, so returns start at t = 2.  Annualization uses
/// 252 trading days; the standard deviation uses the n-1 denominator.
inline PortfolioReport backtest(const Sample& returns, const PrecisionPath& path,
                                double break_threshold = 1e-6) {
    detail::check_path_dims(path, returns, "backtest");
    const int T = returns.T();
    std::vector<double> r;
    r.reserve(T - 1);
    for (int t = 2; t <= T; ++t) {
        const Vec w = gmvp_weights(path[t - 2]);
        r.push_back(w.dot(returns.x(t)));
    }
    return detail::summarize_returns(r, extract_breaks(path, break_threshold).count());
}

/// Equal-weight (1/p) comparator over the same dates as backtest.
inline PortfolioReport equal_weight_backtest(const Sample& returns) {
    const int T = returns.T();
    const double w = 1.0 / returns.p();
    std::vector<double> r;
    r.reserve(T - 1);
    for (int t = 2; t <= T; ++t) r.push_back(w * returns.x(t).sum());
    return detail::summarize_returns(r, 0);
}

}  // namespace gfdtl

#endif  // GFDTL_GMVP_HPP
