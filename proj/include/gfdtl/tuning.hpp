#ifndef GFDTL_TUNING_HPP
#define GFDTL_TUNING_HPP

/*
 * Grid search over (lambda1, lambda2) and the three selection rules:
 *
 *   select_oracle      - ground truth in hand, pick the cell with the best
 *                        break-location error (ties: support F1, then path
 *                        error, then the lexicographically smallest pair);
 *   select_validation  - average D-trace loss of the trained path on held-out
 *                        batches from the same generator;
 *   select_bic         - D-trace loss plus K log T, K counting active and
 *                        changing off-diagonal entries.
 *
 * Cells whose fit is flagged possibly-unsolvable score +infinity so they are
 * never selected.  Fits across the grid are independent; each cell is solved
 * cold (no warm-starting between neighbours) so results do not depend on
 * sweep order or thread count.
 *
 * Grid cells are solved at the configured tolerance, where the raw path still
 * carries consensus noise of roughly eps_tol/10 per date.  That noise sits
 * above the 1e-6 break threshold, so cell scoring reads the exactly-sparse
 * split copies instead: break dates from the step estimates D and the support
 * pattern from the soft-thresholded copies Upsilon.  After selection the
 * winning cell alone is refit at kPolishTol so the returned path is clean
 * enough for the same thresholds applied directly.
 */

#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "gfdtl/breaks.hpp"
#include "gfdtl/model.hpp"
#include "gfdtl/parallel.hpp"
#include "gfdtl/simgen.hpp"
#include "gfdtl/solver.hpp"

namespace gfdtl {

struct Grid {
    std::vector<double> lambda1_values;
    std::vector<double> lambda2_values;

    /// 0.1, 0.2, ..., 1.0 by 10, 20, ..., 200.
    static Grid defaults() {
        Grid g;
        for (int i = 1; i <= 10; ++i) g.lambda1_values.push_back(i / 10.0);
        for (int i = 1; i <= 20; ++i) g.lambda2_values.push_back(10.0 * i);
        return g;
    }

    int cells() const {
        return static_cast<int>(lambda1_values.size() * lambda2_values.size());
    }

    void validate() const {
        for (const auto* vals : {&lambda1_values, &lambda2_values}) {
            if (vals->empty()) throw std::invalid_argument("grid: axis must be nonempty");
            double prev = 0.0;
            for (const double v : *vals) {
                if (!(v > prev)) throw std::invalid_argument("grid: values must be positive ascending");
                prev = v;
            }
        }
    }
};

enum class SelectionMethod { TruthOracle, HeldOutLoss, InformationCriterion };

/// Tolerance for the post-selection refit of the winning cell.
inline constexpr double kPolishTol = 1e-6;

/// What survives of each grid-cell fit: the path, the sparse split copies,
/// and a summary, not the dual state (two hundred cells add up).  breaks
/// holds the support of the step estimates D, which are exactly sparse;
/// upsilon is the soft-thresholded off-diagonal copy used for support scores.
struct GridFit {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    SolveStatus status = SolveStatus::MaxIterations;
    int iterations = 0;
    double gap = 0.0;
    double dfeas = 0.0;
    PrecisionPath path;
    PrecisionPath upsilon;
    BreakSet breaks;
};

struct SelectionResult {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    int best_index = -1;          // into fits, row-major over (l1, l2)
    Mat surface;                  // criterion per cell; +inf where unsolvable
    std::vector<GridFit> fits;
};

/// Fit every grid cell, each from the standard cold initialization.
/// fits[i * n2 + j] belongs to (lambda1_values[i], lambda2_values[j]).
inline std::vector<GridFit> fit_grid(const Sample& sample, const Grid& grid,
                                     const PenaltyConfig& base, int jobs = 1) {
    grid.validate();
    const int n1 = static_cast<int>(grid.lambda1_values.size());
    const int n2 = static_cast<int>(grid.lambda2_values.size());
    std::vector<GridFit> fits(static_cast<std::size_t>(n1) * n2);
    parallel_for(n1 * n2, jobs, [&](int idx) {
        PenaltyConfig cfg = base;
        cfg.lambda1 = grid.lambda1_values[idx / n2];
        cfg.lambda2 = grid.lambda2_values[idx % n2];
        const SolveReport rep = fit(sample, cfg);
        GridFit& gf = fits[idx];
        gf.lambda1 = cfg.lambda1;
        gf.lambda2 = cfg.lambda2;
        gf.status = rep.status;
        gf.iterations = rep.iterations;
        if (!rep.history.empty()) {
            gf.gap = rep.history.back().gap;
            gf.dfeas = rep.history.back().dfeas;
        }
        gf.path = rep.path;
        gf.upsilon = rep.split.Upsilon_off;
        gf.breaks = step_breaks(rep.split.D);
    });
    return fits;
}

/// D-trace loss plus K log T.  K counts, over ordered pairs u != v, the
/// entries changing between consecutive dates plus the entries active at the
/// first date; exact zero tests are meaningless in floating point, so
/// "changes" and "active" mean magnitude above change_tol.
inline double bic(const PrecisionPath& path, const Sample& sample, double change_tol = 1e-6) {
    detail::check_path_dims(path, sample, "bic");
    const int p = sample.p();
    long K = 0;
    for (int u = 0; u < p; ++u)
        for (int v = 0; v < p; ++v) {
            if (u == v) continue;
            if (std::abs(path[0](u, v)) > change_tol) ++K;
            for (std::size_t t = 1; t < path.size(); ++t)
                if (std::abs(path[t](u, v) - path[t - 1](u, v)) > change_tol) ++K;
        }
    return dtrace_loss(path, sample) + K * std::log(static_cast<double>(sample.T()));
}

/// Average D-trace loss of a trained path over held-out batches.
inline double lossval(const PrecisionPath& path, const std::vector<Sample>& tests) {
    if (tests.empty()) throw std::invalid_argument("lossval: need at least one test batch");
    double acc = 0.0;
    for (const Sample& s : tests) acc += dtrace_loss(path, s);
    return acc / static_cast<double>(tests.size());
}

namespace detail {

inline SelectionResult assemble(const Grid& grid, std::vector<GridFit>&& fits,
                                const std::vector<double>& criterion) {
    const int n1 = static_cast<int>(grid.lambda1_values.size());
    const int n2 = static_cast<int>(grid.lambda2_values.size());
    SelectionResult res;
    res.surface.resize(n1, n2);
    int best = -1;
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            const int idx = i * n2 + j;
            res.surface(i, j) = criterion[idx];
            if (std::isfinite(criterion[idx]) &&
                (best < 0 || criterion[idx] < criterion[best]))
                best = idx;  // strict < keeps the lexicographically first tie
        }
    if (best < 0)
        throw std::runtime_error(
            "selection: every grid cell was flagged possibly-unsolvable; "
            "retry with larger lambda2 values");
    res.best_index = best;
    res.lambda1 = fits[best].lambda1;
    res.lambda2 = fits[best].lambda2;
    res.fits = std::move(fits);
    return res;
}

/// Refit the winning cell cold at the polish tolerance and swap it into the
/// result.  The criterion surface keeps the values the selection saw.
inline void polish_winner(SelectionResult& res, const Sample& sample,
                          const PenaltyConfig& base) {
    PenaltyConfig cfg = base;
    cfg.lambda1 = res.lambda1;
    cfg.lambda2 = res.lambda2;
    cfg.eps_tol = std::min(base.eps_tol, kPolishTol);
    const SolveReport rep = fit(sample, cfg);
    GridFit& gf = res.fits[res.best_index];
    gf.status = rep.status;
    gf.iterations = rep.iterations;
    if (!rep.history.empty()) {
        gf.gap = rep.history.back().gap;
        gf.dfeas = rep.history.back().dfeas;
    }
    gf.path = rep.path;
    gf.upsilon = rep.split.Upsilon_off;
    gf.breaks = step_breaks(rep.split.D);
}

}  // namespace detail

/// Ground-truth selection: minimize the break-location error, break ties by
/// higher support F1, then lower path error, then the smallest pair.  The
/// reported surface holds the break-location errors.
inline SelectionResult select_oracle(const Sample& sample, const Grid& grid,
                                     const PenaltyConfig& base, const GroundTruth& truth,
                                     int jobs = 1) {
    std::vector<GridFit> fits = fit_grid(sample, grid, base, jobs);
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> criterion(fits.size(), inf);
    std::vector<std::tuple<double, double, double>> chain(fits.size(),
                                                          {inf, inf, inf});
    for (std::size_t i = 0; i < fits.size(); ++i) {
        if (fits[i].status == SolveStatus::PossiblyUnsolvable) continue;
        const double dh = hausdorff_dh(fits[i].breaks, truth.true_breaks, sample.T());
        const double f1 = sparsity_scores(fits[i].upsilon, truth.true_path).first;
        const double mse = path_mse(fits[i].path, truth.true_path);
        criterion[i] = dh;
        chain[i] = {dh, -f1, mse};
    }
    // assemble picks by criterion only; rescan with the full tie-break chain
    SelectionResult res = detail::assemble(grid, std::move(fits), criterion);
    int best = res.best_index;
    for (std::size_t i = 0; i < res.fits.size(); ++i)
        if (std::isfinite(criterion[i]) && chain[i] < chain[best])
            best = static_cast<int>(i);
    res.best_index = best;
    res.lambda1 = res.fits[best].lambda1;
    res.lambda2 = res.fits[best].lambda2;
    detail::polish_winner(res, sample, base);
    return res;
}

/// Held-out selection: minimize the average D-trace loss on test batches.
inline SelectionResult select_validation(const Sample& sample, const Grid& grid,
                                         const PenaltyConfig& base,
                                         const std::vector<Sample>& tests, int jobs = 1) {
    std::vector<GridFit> fits = fit_grid(sample, grid, base, jobs);
    std::vector<double> criterion(fits.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < fits.size(); ++i)
        if (fits[i].status != SolveStatus::PossiblyUnsolvable)
            criterion[i] = lossval(fits[i].path, tests);
    SelectionResult res = detail::assemble(grid, std::move(fits), criterion);
    detail::polish_winner(res, sample, base);
    return res;
}

/// Information-criterion selection: minimize bic on the training sample.
inline SelectionResult select_bic(const Sample& sample, const Grid& grid,
                                  const PenaltyConfig& base, int jobs = 1) {
    std::vector<GridFit> fits = fit_grid(sample, grid, base, jobs);
    std::vector<double> criterion(fits.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < fits.size(); ++i)
        if (fits[i].status != SolveStatus::PossiblyUnsolvable)
            criterion[i] = bic(fits[i].path, sample);
    SelectionResult res = detail::assemble(grid, std::move(fits), criterion);
    detail::polish_winner(res, sample, base);
    return res;
}

}  // namespace gfdtl

#endif  // GFDTL_TUNING_HPP
