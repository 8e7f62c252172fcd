#pragma once

// Approximate message passing for the LASSO:
//
//   z^t     = y - A x^t + (|I^t| / n) z^{t-1},      I^t = {i : x^t_i != 0}
//   x^{t+1} = eta(x^t + A^T z^t; tau^t)
//
// started at x^0 = 0, z^{-1} = 0, with tau^t chosen by a ThresholdPolicy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "amplasso/errors.hpp"
#include "amplasso/kernels.hpp"
#include "amplasso/policy.hpp"
#include "amplasso/problem.hpp"

namespace amplasso {

enum class SigmaEstimator {
    /// ||z^t||_2 / sqrt(n).
    ResidualNorm,
    /// median(|x^t + A^T z^t|) / 0.6745.
    MedianAbs,
};

struct AmpOptions {
    int max_iter = 500;
    double conv_tol = 1e-10;
    SigmaEstimator sigma_estimator = SigmaEstimator::ResidualNorm;
    /// Record kurtosis and KS distance of v^t = x^t + A^T z^t - x_o (needs x_o; sorts every iteration).
    bool gaussianity = false;
};

struct AmpState {
    int t = 0;
    Eigen::VectorXd x;
    Eigen::VectorXd z;
    double tau = 0.0;
    std::size_t active_count = 0;
};

/// One row per executed iteration t: tau^t, ||x^{t+1}||_0, ||z^t||_2/sqrt(n),
/// (1/N)||x^{t+1} - x_o||^2 and Gaussianity statistics of v^t. Fields that
/// need x_o are NaN when it is unknown.
struct AmpRecord {
    int t = 0;
    double tau = 0.0;
    std::size_t active_count = 0;
    double residual_norm = 0.0;
    double mse = std::numeric_limits<double>::quiet_NaN();
    double kurtosis = std::numeric_limits<double>::quiet_NaN();
    double ks = std::numeric_limits<double>::quiet_NaN();
};

using AmpTrace = std::vector<AmpRecord>;

struct AmpResult {
    AmpState state;
    AmpTrace trace;
    bool converged = false;
};

/// floor(gamma n), robust to products like 0.29 * 100 landing just below an integer.
inline std::size_t detection_count(double gamma, std::size_t n) {
    return static_cast<std::size_t>(std::floor(gamma * static_cast<double>(n) * (1.0 + 1e-12)));
}

/// Magnitude of the floor(gamma n)-th largest |u_i|.
///
/// Soft thresholding at this value keeps the entries strictly above it, so with
/// distinct magnitudes exactly floor(gamma n) - 1 entries survive.
inline double fixed_detection_tau(std::span<const double> u, double gamma, std::size_t n) {
    const std::size_t rank = detection_count(gamma, n);
    if (rank < 1) throw RankError("fixed_detection_tau: floor(gamma n) must be >= 1");
    if (rank > u.size()) {
        throw RankError("fixed_detection_tau: floor(gamma n)=" + std::to_string(rank) + " exceeds N=" +
                        std::to_string(u.size()));
    }
    std::vector<double> mags(u.size());
    std::transform(u.begin(), u.end(), mags.begin(), [](double v) { return std::abs(v); });
    const auto nth = mags.begin() + static_cast<std::ptrdiff_t>(rank - 1);
    std::nth_element(mags.begin(), nth, mags.end(), std::greater<>{});
    return *nth;
}

/// tau = beta * ||z||_2 / sqrt(n).
inline double fixed_false_alarm_tau(std::span<const double> z, double beta) {
    if (!(beta > 0.0)) throw RangeError("fixed_false_alarm_tau: beta must be > 0");
    if (z.empty()) return 0.0;
    double ss = 0.0;
    for (double v : z) ss += v * v;
    return beta * std::sqrt(ss / static_cast<double>(z.size()));
}

/// Robust noise-level estimate median(|u|)/0.6745, biased upward by the signal.
inline double median_abs_sigma(std::span<const double> u) {
    if (u.empty()) return 0.0;
    std::vector<double> mags(u.size());
    std::transform(u.begin(), u.end(), mags.begin(), [](double v) { return std::abs(v); });
    const auto mid = mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2);
    std::nth_element(mags.begin(), mid, mags.end());
    return *mid / 0.6744897501960817;
}

struct GaussianityStats {
    double excess_kurtosis = std::numeric_limits<double>::quiet_NaN();
    double ks_distance = std::numeric_limits<double>::quiet_NaN();
    /// Zero sample variance; both statistics are NaN.
    bool degenerate = false;
};

/// Excess kurtosis of v and the Kolmogorov-Smirnov distance between the empirical
/// CDF of v and N(mean(v), var(v)), using the population variance.
inline GaussianityStats gaussianity_stats(std::span<const double> v) {
    if (v.size() < 100) throw DimensionError("gaussianity_stats: need at least 100 samples");
    const auto len = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= len;
    double m2 = 0.0, m4 = 0.0;
    for (double x : v) {
        const double d2 = (x - mean) * (x - mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= len;
    m4 /= len;
    GaussianityStats out;
    if (!(m2 > 0.0)) {
        out.degenerate = true;
        return out;
    }
    out.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    std::vector<double> sorted(v.begin(), v.end());
    std::sort(sorted.begin(), sorted.end());
    const double sd = std::sqrt(m2);
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = std_normal_cdf((sorted[i] - mean) / sd);
        d = std::max({d, static_cast<double>(i + 1) / len - f, f - static_cast<double>(i) / len});
    }
    out.ks_distance = d;
    return out;
}

namespace detail {

inline double policy_tau(const ThresholdPolicy& policy, const Eigen::VectorXd& u, const Eigen::VectorXd& z,
                         SigmaEstimator estimator) {
    return std::visit(overloaded{
                          [&](const FixedDetection& p) {
                              return fixed_detection_tau({u.data(), static_cast<std::size_t>(u.size())}, p.gamma,
                                                         static_cast<std::size_t>(z.size()));
                          },
                          [&](const FixedFalseAlarm& p) {
                              if (estimator == SigmaEstimator::MedianAbs) {
                                  return p.beta * median_abs_sigma({u.data(), static_cast<std::size_t>(u.size())});
                              }
                              return fixed_false_alarm_tau({z.data(), static_cast<std::size_t>(z.size())}, p.beta);
                          },
                          [&](const FixedThreshold& p) { return p.tau; },
                      },
                      policy);
}

} // namespace detail

/// Runs AMP on (A, y). `x_o`, when given, enables the error columns of the trace.
///
/// Stops after max_iter iterations or once ||x^{t+1} - x^t|| / max(||x^t||, 1e-12)
/// drops below conv_tol. Throws Divergence if ||x^t|| exceeds 1e12 ||y||.
inline AmpResult amp_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, const ThresholdPolicy& policy,
                           const AmpOptions& opts = {}, const Eigen::VectorXd* x_o = nullptr) {
    validate(policy);
    if (opts.max_iter < 1) throw RangeError("amp: max_iter must be >= 1");
    if (y.size() != A.rows()) throw DimensionError("amp: y length does not match A");
    if (x_o && x_o->size() != A.cols()) throw DimensionError("amp: x_o length does not match A");
    const auto n = A.rows();
    const auto big_n = A.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    const double blowup = 1e12 * y.norm();

    AmpResult res;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(big_n);
    Eigen::VectorXd z_prev = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd z(n), u(big_n), x_next(big_n);
    std::size_t active = 0;
    double tau = 0.0;
    int t = 0;
    for (; t < opts.max_iter; ++t) {
        z.noalias() = y - A * x;
        z += (static_cast<double>(active) * inv_n) * z_prev;
        u = x;
        u.noalias() += A.transpose() * z;
        tau = detail::policy_tau(policy, u, z, opts.sigma_estimator);

        std::size_t next_active = 0;
        for (Eigen::Index i = 0; i < big_n; ++i) {
            x_next(i) = soft_threshold(u(i), tau);
            next_active += x_next(i) != 0.0;
        }

        AmpRecord rec;
        rec.t = t;
        rec.tau = tau;
        rec.active_count = next_active;
        rec.residual_norm = z.norm() * std::sqrt(inv_n);
        if (x_o) {
            rec.mse = (x_next - *x_o).squaredNorm() / static_cast<double>(big_n);
            if (opts.gaussianity && big_n >= 100) {
                const Eigen::VectorXd v = u - *x_o;
                const auto g = gaussianity_stats({v.data(), static_cast<std::size_t>(v.size())});
                rec.kurtosis = g.excess_kurtosis;
                rec.ks = g.ks_distance;
            }
        }
        res.trace.push_back(rec);

        const double x_norm = x_next.norm();
        if (!std::isfinite(x_norm) || x_norm > blowup) {
            throw Divergence("amp: iterate norm exceeded 1e12 ||y|| at t=" + std::to_string(t));
        }
        const double change = (x_next - x).norm() / std::max(x.norm(), 1e-12);
        x.swap(x_next);
        z_prev.swap(z);
        active = next_active;
        if (change < opts.conv_tol) {
            res.converged = true;
            ++t;
            break;
        }
    }
    res.state.t = t;
    res.state.x = std::move(x);
    res.state.z = std::move(z_prev);
    res.state.tau = tau;
    res.state.active_count = active;
    return res;
}

inline AmpResult amp_run(const ProblemInstance& instance, const ThresholdPolicy& policy, const AmpOptions& opts = {}) {
    return amp_solve(instance.A, instance.y, policy, opts, &instance.x_o);
}

/// Regularization matched by an AMP fixed point: tau (1 - |I|/n), where |I|/n is the
/// realized active fraction. At a converged iterate A^T(y - A x) = tau (1 - |I|/n) sign(x)
/// on the support and is bounded by it elsewhere.
inline double amp_equivalent_lambda(const AmpState& state, Eigen::Index n) {
    return state.tau * (1.0 - static_cast<double>(state.active_count) / static_cast<double>(n));
}

} // namespace amplasso
