#pragma once

// Reference LASSO solver: minimize 0.5 ||y - A x||^2 + lambda ||x||_1 by
// accelerated proximal gradient (FISTA) with function-value restart.

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "amplasso/errors.hpp"
#include "amplasso/kernels.hpp"
#include "amplasso/problem.hpp"

namespace amplasso {

struct LassoOptions {
    double tol = 1e-9;
    int max_iter = 200000;
    /// KKT residual costs an extra product with A^T, so it is checked periodically.
    int check_every = 10;
};

struct LassoResult {
    Eigen::VectorXd x_hat;
    double objective = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    /// lambda == 0: the minimizer is not unique when n < N and the residual is unnormalized.
    bool lambda_zero = false;
};

inline double lasso_objective(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, double lambda,
                              const Eigen::VectorXd& x) {
    return 0.5 * (y - A * x).squaredNorm() + lambda * x.lpNorm<1>();
}

/// Largest eigenvalue of A^T A by power iteration from the normalized all-ones vector.
inline double spectral_norm_sq(const Eigen::MatrixXd& A, double rel_tol = 1e-10, int max_iter = 20000) {
    if (A.size() == 0) return 0.0;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(A.cols()) / std::sqrt(static_cast<double>(A.cols()));
    Eigen::VectorXd Av(A.rows()), w(A.cols());
    double est = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Av.noalias() = A * v;
        w.noalias() = A.transpose() * Av;
        const double next = w.norm();
        if (next == 0.0) return 0.0;
        v = w / next;
        const bool done = std::abs(next - est) <= rel_tol * next;
        est = next;
        if (done) break;
    }
    return est;
}

namespace detail {

/// Max KKT violation from a precomputed correlation g = A^T (y - A x), unnormalized.
inline double kkt_violation(const Eigen::VectorXd& g, const Eigen::VectorXd& x, double lambda) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double v = x(i) != 0.0 ? std::abs(g(i) - lambda * (x(i) > 0.0 ? 1.0 : -1.0))
                                     : std::max(std::abs(g(i)) - lambda, 0.0);
        worst = std::max(worst, v);
    }
    return worst;
}

} // namespace detail

/// KKT residual of x for the LASSO at lambda > 0, normalized by lambda:
/// with g = A^T (y - A x), the worst of |g_i - lambda sign(x_i)| on the support
/// and (|g_i| - lambda)_+ off it.
inline double kkt_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, double lambda,
                           const Eigen::VectorXd& x) {
    if (!(lambda > 0.0)) throw RangeError("kkt_residual: lambda must be > 0");
    if (x.size() != A.cols() || y.size() != A.rows()) throw DimensionError("kkt_residual: dimension mismatch");
    const Eigen::VectorXd g = A.transpose() * (y - A * x);
    return detail::kkt_violation(g, x, lambda) / lambda;
}

inline double kkt_residual(const ProblemInstance& inst, double lambda, const Eigen::VectorXd& x) {
    return kkt_residual(inst.A, inst.y, lambda, x);
}

inline LassoResult lasso_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, double lambda,
                               const LassoOptions& opts = {}) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw RangeError("lasso_solve: lambda must be >= 0");
    if (y.size() != A.rows()) throw DimensionError("lasso_solve: y length does not match A");
    if (opts.check_every < 1 || opts.max_iter < 1) throw RangeError("lasso_solve: bad iteration settings");

    const auto n = A.rows();
    const auto big_n = A.cols();
    LassoResult res;
    res.lambda_zero = lambda == 0.0;
    auto normalized = [&](double violation) { return res.lambda_zero ? violation : violation / lambda; };

    // Small multiplicative margin: power iteration approaches sigma_max^2 from below.
    const double lip = spectral_norm_sq(A) * (1.0 + 1e-6);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(big_n);
    if (lip == 0.0) {
        res.x_hat = x;
        res.objective = 0.5 * y.squaredNorm();
        res.converged = true;
        return res;
    }
    const double step = 1.0 / lip;
    const double shrink = lambda * step;

    Eigen::VectorXd ax = Eigen::VectorXd::Zero(n);   // A x
    Eigen::VectorXd point = x;                        // extrapolated point
    Eigen::VectorXd a_point = ax;                     // A point
    Eigen::VectorXd grad(big_n), x_next(big_n), ax_next(n), g(big_n);
    double momentum_t = 1.0;
    double f = 0.5 * y.squaredNorm();

    int it = 0;
    for (; it < opts.max_iter; ++it) {
        if (it % opts.check_every == 0) {
            g.noalias() = A.transpose() * (y - ax);
            res.kkt_residual = normalized(detail::kkt_violation(g, x, lambda));
            if (res.kkt_residual <= opts.tol) {
                res.converged = true;
                break;
            }
        }
        grad.noalias() = A.transpose() * (a_point - y);
        for (Eigen::Index i = 0; i < big_n; ++i) x_next(i) = soft_threshold(point(i) - step * grad(i), shrink);
        ax_next.noalias() = A * x_next;
        const double f_next = 0.5 * (y - ax_next).squaredNorm() + lambda * x_next.lpNorm<1>();

        if (f_next > f && momentum_t > 1.0) {
            // Objective went up: drop the momentum and retake a plain proximal step from x.
            momentum_t = 1.0;
            point = x;
            a_point = ax;
            continue;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum_t * momentum_t));
        const double beta = (momentum_t - 1.0) / t_next;
        point = x_next + beta * (x_next - x);
        a_point = ax_next + beta * (ax_next - ax);
        x.swap(x_next);
        ax.swap(ax_next);
        f = f_next;
        momentum_t = t_next;
    }
    if (!res.converged) {
        g.noalias() = A.transpose() * (y - ax);
        res.kkt_residual = normalized(detail::kkt_violation(g, x, lambda));
        res.converged = res.kkt_residual <= opts.tol;
    }
    res.iterations = it;
    res.objective = lasso_objective(A, y, lambda, x);
    res.x_hat = std::move(x);
    return res;
}

inline LassoResult lasso_solve(const ProblemInstance& inst, double lambda, const LassoOptions& opts = {}) {
    return lasso_solve(inst.A, inst.y, lambda, opts);
}

} // namespace amplasso
