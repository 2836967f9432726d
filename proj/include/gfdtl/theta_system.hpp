#ifndef GFDTL_THETA_SYSTEM_HPP
#define GFDTL_THETA_SYSTEM_HPP

/*
 * The linear system behind the quadratic ADMM subproblem, kept matrix-free:
 * each application touches only rank-1 Gram products and the beta-coupled
 * chain of neighbouring blocks, so one pass costs O(T p^2). A conjugate
 * gradient loop with warm starts solves it to a tolerance that the outer
 * solver tightens as iterations proceed.
 */

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gfdtl/model.hpp"

namespace gfdtl {

namespace detail {

inline double path_dot(const MatSeq& a, const MatSeq& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i].cwiseProduct(b[i]).sum();
    return acc;
}

inline double path_norm(const MatSeq& a) { return std::sqrt(path_dot(a, a)); }

inline MatSeq zero_path(int T, int p) { return MatSeq(T, Mat::Zero(p, p)); }

}  // namespace detail

/// Matrix-free representation of the block-tridiagonal operator; the t-th
/// output block is 0.5(S_t B_t + B_t S_t) + c_t beta B_t + beta B_t,off
/// - beta B_{t-1} - beta B_{t+1} with c_1 = c_T = 2 and c_t = 3 inside.
struct ThetaOperator {
    std::vector<Vec> xs;  // observation vectors X_t
    double beta = 0.0;
    int T = 0, p = 0;

    ThetaOperator(const Sample& sample, double beta_in)
        : beta(beta_in), T(sample.T()), p(sample.p()) {
        if (!(beta > 0)) throw std::invalid_argument("ThetaOperator: beta must be positive");
        xs.reserve(T);
        for (int t = 1; t <= T; ++t) xs.push_back(sample.x(t));
    }

    // out must be a T-long path of p x p matrices; aliasing with path is not allowed
    void apply_into(const MatSeq& path, MatSeq& out, Vec& work) const {
        if (static_cast<int>(path.size()) != T)
            throw std::invalid_argument("ThetaOperator: path length mismatch");
        for (int i = 0; i < T; ++i) {
            const Mat& th = path[i];
            if (th.rows() != p || th.cols() != p)
                throw std::invalid_argument("ThetaOperator: block dimension mismatch");
            const double c = (i == 0 || i == T - 1) ? 2.0 : 3.0;
            work.noalias() = th * xs[i];
            Mat& o = out[i];
            o.noalias() = 0.5 * (xs[i] * work.transpose() + work * xs[i].transpose());
            o += (c + 1.0) * beta * th;
            o.diagonal() -= beta * th.diagonal();
            if (i > 0) o -= beta * path[i - 1];
            if (i < T - 1) o -= beta * path[i + 1];
        }
    }

    MatSeq apply(const MatSeq& path) const {
        MatSeq out = detail::zero_path(T, p);
        Vec work(p);
        apply_into(path, out, work);
        return out;
    }

    /// Entrywise diagonal of the operator, used by the optional Jacobi scaling:
    /// entry (t,u,v) has coefficient 0.5(S_uu + S_vv) + c_t beta + beta [u != v].
    MatSeq diagonal() const {
        MatSeq d = detail::zero_path(T, p);
        for (int i = 0; i < T; ++i) {
            const double c = (i == 0 || i == T - 1) ? 2.0 : 3.0;
            const Vec s = xs[i].cwiseProduct(xs[i]);
            for (int u = 0; u < p; ++u)
                for (int v = 0; v < p; ++v)
                    d[i](u, v) = 0.5 * (s[u] + s[v]) + c * beta + (u == v ? 0.0 : beta);
        }
        return d;
    }
};

/// Right-hand side Psi_t = I + A_t + Y_t,off - Z_t + Z_{t-1}
///                        + beta (V_t + Upsilon_t,off - D_t + D_{t-1}),
/// with the out-of-range Z and D terms treated as zero.
inline MatSeq build_rhs(const Sample& sample, const DualState& duals, const SplitState& split,
                        double beta) {
    const int T = sample.T(), p = sample.p();
    MatSeq rhs(T);
    for (int i = 0; i < T; ++i) {
        Mat psi = Mat::Identity(p, p);
        psi += duals.A[i] + duals.Y_off[i] + beta * (split.V[i] + split.Upsilon_off[i]);
        if (i < T - 1) psi -= duals.Z[i] + beta * split.D[i];
        if (i > 0) psi += duals.Z[i - 1] + beta * split.D[i - 1];
        rhs[i] = std::move(psi);
    }
    return rhs;
}

struct PcgResult {
    MatSeq path;
    int iters = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

/// Reusable buffers so the hot solve path performs no allocation.
struct PcgWorkspace {
    MatSeq r, z, dir, Ap;
    Vec work;

    void resize(int T, int p) {
        r.assign(T, Mat::Zero(p, p));
        z.assign(T, Mat::Zero(p, p));
        dir.assign(T, Mat::Zero(p, p));
        Ap.assign(T, Mat::Zero(p, p));
        work.resize(p);
    }
};

/// Conjugate gradients on the path space with inner product sum_t tr(U_t V_t).
/// Stops when ||rhs - apply(x)|| / max(||rhs||, 1) <= rel_tol. `x` holds the
/// warm start on entry and the solution on exit. `jacobi` enables diagonal
/// scaling; `diag` may be empty otherwise.
inline PcgResult pcg_solve_into(const ThetaOperator& op, const MatSeq& rhs, MatSeq& x,
                                double rel_tol, int max_cg_iters, PcgWorkspace& ws,
                                bool jacobi = false, const MatSeq* diag = nullptr) {
    if (!(rel_tol > 0 && rel_tol < 1))
        throw std::invalid_argument("pcg_solve: rel_tol must lie in (0,1)");
    const int T = op.T;
    const double bnorm = std::max(detail::path_norm(rhs), 1.0);

    op.apply_into(x, ws.Ap, ws.work);
    for (int i = 0; i < T; ++i) ws.r[i] = rhs[i] - ws.Ap[i];
    const bool scaled = jacobi && diag;
    double rnorm2 = detail::path_dot(ws.r, ws.r);
    if (std::sqrt(rnorm2) / bnorm <= rel_tol) return {x, 0, std::sqrt(rnorm2) / bnorm, true};

    // With the identity preconditioner z coincides with r and rz with |r|^2,
    // so the copy and the extra inner product are skipped.
    double rz;
    if (scaled) {
        for (int i = 0; i < T; ++i) ws.z[i] = ws.r[i].cwiseQuotient((*diag)[i]);
        for (int i = 0; i < T; ++i) ws.dir[i] = ws.z[i];
        rz = detail::path_dot(ws.r, ws.z);
    } else {
        for (int i = 0; i < T; ++i) ws.dir[i] = ws.r[i];
        rz = rnorm2;
    }

    int it = 0;
    for (; it < max_cg_iters; ++it) {
        op.apply_into(ws.dir, ws.Ap, ws.work);
        const double alpha = rz / detail::path_dot(ws.dir, ws.Ap);
        for (int i = 0; i < T; ++i) {
            x[i] += alpha * ws.dir[i];
            ws.r[i] -= alpha * ws.Ap[i];
        }
        rnorm2 = detail::path_dot(ws.r, ws.r);
        if (std::sqrt(rnorm2) / bnorm <= rel_tol) return {x, it + 1, std::sqrt(rnorm2) / bnorm, true};
        double rz_next;
        if (scaled) {
            for (int i = 0; i < T; ++i) ws.z[i] = ws.r[i].cwiseQuotient((*diag)[i]);
            rz_next = detail::path_dot(ws.r, ws.z);
        } else {
            rz_next = rnorm2;
        }
        const double beta_cg = rz_next / rz;
        const MatSeq& zref = scaled ? ws.z : ws.r;
        for (int i = 0; i < T; ++i) ws.dir[i] = zref[i] + beta_cg * ws.dir[i];
        rz = rz_next;
    }
    return {x, it, std::sqrt(rnorm2) / bnorm, false};  // cap hit: best iterate, caller sees the flag
}

inline PcgResult pcg_solve(const ThetaOperator& op, const MatSeq& rhs, const MatSeq& init,
                           double rel_tol, int max_cg_iters, bool jacobi = false) {
    MatSeq x = init;
    PcgWorkspace ws;
    ws.resize(op.T, op.p);
    MatSeq diag;
    if (jacobi) diag = op.diagonal();
    return pcg_solve_into(op, rhs, x, rel_tol, max_cg_iters, ws, jacobi, jacobi ? &diag : nullptr);
}

inline int default_max_cg_iters(int T, int p) { return 10 * T * p * p; }

}  // namespace gfdtl

#endif  // GFDTL_THETA_SYSTEM_HPP
