#ifndef GFDTL_PROXOPS_HPP
#define GFDTL_PROXOPS_HPP

/*
 * Scalar penalty functions and the closed-form proximal/projection maps the
 * ADMM subproblems reduce to. Everything here is a pure function.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gfdtl {

/// Modified fusion regularizer: |x| inside the switch radius, a matched
/// quadratic outside. Convex on the nonnegative axis iff lambda3 >= 0.5.
inline double r_value(double x, double lambda3) {
    if (lambda3 < 0.5) throw std::invalid_argument("r_value: lambda3 must be >= 0.5");
    const double ax = std::abs(x);
    return ax <= lambda3 ? ax : ax * ax - lambda3 * lambda3 + lambda3;
}

/// Concave conjugate-style term of the dual objective,
/// min_{r>=0} { weight * R(r; lambda3) - x*r } in closed form.
inline double g_value(double x, double lambda3, double weight) {
    if (weight == 0.0) return -x * lambda3;
    const double first = -std::max(x - weight, 0.0) * lambda3;
    const double u = std::max(lambda3 - x / (2.0 * weight), 0.0);
    const double second =
        weight * (u * u - x * x / (4.0 * weight * weight) - lambda3 * lambda3 + lambda3);
    return std::min(first, second);
}

/// Frobenius-nearest symmetric matrix with eigenvalues >= eps.
inline Eigen::MatrixXd project_psd_floor(const Eigen::MatrixXd& M, double eps) {
    if (M.rows() != M.cols()) throw std::invalid_argument("project_psd_floor: matrix not square");
    if (!M.isApprox(M.transpose(), 1e-10))
        throw std::invalid_argument("project_psd_floor: matrix not symmetric");
    const Eigen::MatrixXd sym = 0.5 * (M + M.transpose());
    // a successful Cholesky factorization of sym - eps*I certifies the input
    // is already feasible, skipping the eigendecomposition
    Eigen::MatrixXd shifted = sym;
    shifted.diagonal().array() -= eps;
    if (Eigen::LLT<Eigen::MatrixXd>(shifted).info() == Eigen::Success) return sym;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.eigenvalues().minCoeff() >= eps) return sym;
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(eps);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/// Entrywise soft threshold of the off-diagonal entries; diagonal stays zero.
inline Eigen::MatrixXd soft_threshold_offdiag(const Eigen::MatrixXd& M, double kappa) {
    Eigen::MatrixXd out = M;
    const auto n = M.rows();
    for (Eigen::Index u = 0; u < n; ++u)
        for (Eigen::Index v = 0; v < n; ++v) {
            if (u == v) {
                out(u, v) = 0.0;
                continue;
            }
            const double m = M(u, v);
            out(u, v) = m > 0 ? std::max(m - kappa, 0.0) : -std::max(-m - kappa, 0.0);
        }
    return out;
}

struct GroupProxResult {
    Eigen::MatrixXd minimizer;
    double value = 0.0;
};

/// argmin_D  0.5*||D - Xi||_F^2 + weight * R(||D||_F; lambda3).
///
/// The minimizer is a nonnegative multiple of Xi; its radius is one of two
/// candidates, one per branch of R, and the smaller attained value wins
/// (ties go to the soft-threshold candidate).
inline GroupProxResult prox_group_diff(const Eigen::MatrixXd& Xi, double weight, double lambda3) {
    if (weight < 0) throw std::invalid_argument("prox_group_diff: weight must be >= 0");
    if (lambda3 < 0.5) throw std::invalid_argument("prox_group_diff: lambda3 must be >= 0.5");
    const double nrm = Xi.norm();
    if (nrm == 0.0) return {Eigen::MatrixXd::Zero(Xi.rows(), Xi.cols()), 0.0};

    const double r1 = std::min(std::max(nrm - weight, 0.0), lambda3);
    const double val1 = 0.5 * (r1 - nrm) * (r1 - nrm) + weight * r1;
    const double r2 = std::max(nrm / (1.0 + 2.0 * weight), lambda3);
    const double val2 =
        0.5 * (r2 - nrm) * (r2 - nrm) + weight * (r2 * r2 - lambda3 * lambda3 + lambda3);

    const double radius = val1 <= val2 ? r1 : r2;
    const double value = val1 <= val2 ? val1 : val2;
    return {(radius / nrm) * Xi, value};
}

}  // namespace gfdtl

#endif  // GFDTL_PROXOPS_HPP
