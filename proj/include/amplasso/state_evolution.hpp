#pragma once

// Scalar state evolution for soft thresholding under an iid Gaussian design.
//
// The LASSO fixed point at regularization lambda is described by (sigma_hat, beta):
//   sigma_hat^2 = sigma_w^2 + (1/delta) E[(eta(X + sigma_hat Z; beta sigma_hat) - X)^2]
//   lambda      = beta sigma_hat (1 - (1/delta) P(|X + sigma_hat Z| > beta sigma_hat))
// Writing tau = beta sigma_hat and gamma = P(...)/delta, the second equation is
// lambda = tau (1 - gamma), which is also the fixed point of AMP run with a
// fixed-detection threshold at level gamma.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amplasso/errors.hpp"
#include "amplasso/kernels.hpp"
#include "amplasso/policy.hpp"
#include "amplasso/prior.hpp"

namespace amplasso {

struct SEModel {
    double delta = 0.5;
    double sigma_w_sq = 1.0;
    Prior prior;

    void validate() const {
        if (!(delta > 0.0 && delta < 1.0)) throw RangeError("state evolution: delta must lie in (0, 1)");
        if (!(sigma_w_sq > 0.0) || !std::isfinite(sigma_w_sq)) {
            throw RangeError("state evolution: sigma_w_sq must be > 0");
        }
        if (prior.atoms().empty()) throw ConfigError("state evolution: empty prior");
    }

    PsiParams psi_params(double beta) const { return PsiParams{delta, sigma_w_sq, prior, beta}; }
};

struct SEPoint {
    double sigma_hat = 0.0;
    double beta = 0.0;
    double tau = 0.0;
    double lambda = 0.0;
    double gamma = 0.0;
    double mse = 0.0;
    double detection = 0.0;
};

struct SEStep {
    int t = 0;
    double sigma = 0.0;
    double tau = 0.0;
};

using SETrajectory = std::vector<SEStep>;

struct SESolverOptions {
    double rel_tol = 2.5e-13;
    int max_iter = 10000;
    double beta_max = 50.0;
};

enum class CalibrationStrategy {
    /// Bisection on beta over the LASSO fixed-point curve.
    BetaBisection,
    /// Alternate the detection-threshold solve and the variance update.
    Alternating,
};

namespace detail {

/// Fixed-point iteration s <- f(s) with safeguarded Aitken extrapolation.
/// Returns s with |f(s) - s| <= rel_tol * max(1, s).
template <class Map>
double accelerated_fixed_point(Map&& f, double s, double rel_tol, int max_iter, const char* what) {
    for (int it = 0; it < max_iter; ++it) {
        const double s1 = f(s);
        const double r0 = s1 - s;
        if (std::abs(r0) <= rel_tol * std::max(1.0, s)) return s;
        if (!std::isfinite(s1)) break;
        const double s2 = f(s1);
        double next = s2;
        const double denom = s2 - 2.0 * s1 + s;
        if (denom != 0.0) {
            const double cand = s - r0 * r0 / denom;
            if (std::isfinite(cand) && cand > 0.0 && std::abs(f(cand) - cand) < std::abs(s2 - s1)) {
                next = cand;
            }
        }
        s = next;
    }
    throw NonConvergence(std::string(what) + ": fixed-point iteration did not converge");
}

/// Largest-precision bisection for a predicate that is false at lo and true at hi.
template <class Pred>
double bisect_boundary(Pred&& pred, double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (pred(mid) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

/// Normalized risk of a pure-noise coordinate, the asymptotic slope of Psi as sigma grows.
inline double noise_only_risk(double beta) noexcept { return normalized_atom_risk(0.0, beta); }

/// Unique fixed point sigma_hat of Psi for the given beta.
///
/// Throws NonConvergence when no finite fixed point exists, which happens
/// exactly when the asymptotic slope r(0, beta)/delta is at least one.
inline double solve_sigma_for_beta(const SEModel& model, double beta, std::optional<double> init_sigma_sq = {},
                                   const SESolverOptions& opts = {}) {
    model.validate();
    if (!(beta >= 0.0)) throw RangeError("solve_sigma_for_beta: beta must be >= 0");
    if (noise_only_risk(beta) / model.delta >= 1.0) {
        throw NonConvergence("solve_sigma_for_beta: Psi has no finite fixed point for beta=" + std::to_string(beta));
    }
    const auto params = model.psi_params(beta);
    const double s0 = init_sigma_sq.value_or(model.sigma_w_sq + model.prior.second_moment() / model.delta);
    if (!(s0 > 0.0)) throw RangeError("solve_sigma_for_beta: initial sigma^2 must be > 0");
    const double s = detail::accelerated_fixed_point([&](double v) { return psi_map(v, params); }, s0, opts.rel_tol,
                                                     opts.max_iter, "solve_sigma_for_beta");
    return std::sqrt(s);
}

/// Threshold theta with P(|X + sigma Z| > theta) = target, by bisection on [0, 50 sigma + max|x|].
inline double detection_threshold(const Prior& prior, double sigma, double target) {
    if (!(target > 0.0 && target <= 1.0)) throw RangeError("detection_threshold: target must lie in (0, 1]");
    if (target >= 1.0) return 0.0;
    const double hi = 50.0 * sigma + prior.max_abs_value();
    return detail::bisect_boundary([&](double theta) { return detection_prob(prior, sigma, theta) <= target; }, 0.0,
                                   hi);
}

namespace detail {

inline SEPoint point_from_sigma_tau(const SEModel& model, double sigma, double tau) {
    SEPoint p;
    p.sigma_hat = sigma;
    p.tau = tau;
    p.beta = tau / sigma;
    p.detection = detection_prob(model.prior, sigma, tau);
    p.gamma = p.detection / model.delta;
    p.lambda = tau * (1.0 - p.gamma);
    p.mse = risk(model.prior, sigma, tau);
    return p;
}

} // namespace detail

/// Full LASSO fixed point for a given beta.
inline SEPoint lambda_of_beta(const SEModel& model, double beta, const SESolverOptions& opts = {}) {
    const double sigma = solve_sigma_for_beta(model, beta, std::nullopt, opts);
    auto p = detail::point_from_sigma_tau(model, sigma, beta * sigma);
    if (p.gamma > 1.0) {
        throw NegativeLambda("lambda_of_beta: beta=" + std::to_string(beta) +
                             " lies below the lambda=0 crossing (detection exceeds delta)");
    }
    return p;
}

/// Beta at which the fixed-point detection equals delta, i.e. lambda = 0.
inline double beta_at_zero_lambda(const SEModel& model, const SESolverOptions& opts = {}) {
    model.validate();
    auto above_crossing = [&](double beta) {
        try {
            const double sigma = solve_sigma_for_beta(model, beta, std::nullopt, opts);
            return detection_prob(model.prior, sigma, beta * sigma) <= model.delta;
        } catch (const NonConvergence&) {
            return false;
        }
    };
    if (!above_crossing(opts.beta_max)) {
        throw BracketFailure("beta_at_zero_lambda: no crossing below beta_max");
    }
    return detail::bisect_boundary(above_crossing, 0.0, opts.beta_max);
}

/// Inverts the strictly increasing map beta -> lambda(beta).
inline SEPoint beta_of_lambda(const SEModel& model, double lambda, const SESolverOptions& opts = {}) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw RangeError("beta_of_lambda: lambda must be >= 0");
    const double beta_lo = beta_at_zero_lambda(model, opts);
    auto point_at = [&](double beta) {
        const double sigma = solve_sigma_for_beta(model, beta, std::nullopt, opts);
        return detail::point_from_sigma_tau(model, sigma, beta * sigma);
    };
    if (lambda == 0.0) return point_at(beta_lo);
    if (point_at(opts.beta_max).lambda < lambda) {
        throw BracketFailure("beta_of_lambda: lambda=" + std::to_string(lambda) + " exceeds lambda(beta_max)");
    }
    const double beta = detail::bisect_boundary([&](double b) { return point_at(b).lambda >= lambda; }, beta_lo,
                                                opts.beta_max);
    return point_at(beta);
}

/// Unique (sigma, tau) with P(|X + sigma Z| > tau) = gamma delta and the variance equation satisfied.
inline SEPoint calibrate_gamma(const SEModel& model, double gamma,
                               CalibrationStrategy strategy = CalibrationStrategy::BetaBisection,
                               const SESolverOptions& opts = {}) {
    model.validate();
    if (!(gamma > 0.0 && gamma < 1.0)) throw RangeError("calibrate_gamma: gamma must lie in (0, 1)");

    double sigma = 0.0;
    double tau = 0.0;
    if (strategy == CalibrationStrategy::BetaBisection) {
        const double beta_lo = beta_at_zero_lambda(model, opts);
        auto gamma_at = [&](double beta) {
            const double s = solve_sigma_for_beta(model, beta, std::nullopt, opts);
            return detection_prob(model.prior, s, beta * s) / model.delta;
        };
        if (gamma_at(opts.beta_max) > gamma) {
            throw BracketFailure("calibrate_gamma: gamma below the representable range");
        }
        const double beta =
            detail::bisect_boundary([&](double b) { return gamma_at(b) <= gamma; }, beta_lo, opts.beta_max);
        sigma = solve_sigma_for_beta(model, beta, std::nullopt, opts);
        tau = beta * sigma;
    } else {
        const double target = gamma * model.delta;
        auto update = [&](double s) {
            const double sd = std::sqrt(s);
            return model.sigma_w_sq + risk(model.prior, sd, detection_threshold(model.prior, sd, target)) / model.delta;
        };
        const double s0 = model.sigma_w_sq + model.prior.second_moment() / model.delta;
        const double s = detail::accelerated_fixed_point(update, s0, opts.rel_tol, opts.max_iter, "calibrate_gamma");
        sigma = std::sqrt(s);
        tau = detection_threshold(model.prior, sigma, target);
    }
    auto p = detail::point_from_sigma_tau(model, sigma, tau);
    p.gamma = gamma;
    p.detection = gamma * model.delta;
    p.lambda = tau * (1.0 - gamma);
    return p;
}

/// Asymptotic MSE and detection along a strictly increasing lambda grid.
inline std::vector<SEPoint> lasso_path(const SEModel& model, std::span<const double> lambda_grid,
                                       const SESolverOptions& opts = {}) {
    if (lambda_grid.size() < 3) throw ConfigError("lasso_path: grid needs at least 3 points");
    for (std::size_t i = 1; i < lambda_grid.size(); ++i) {
        if (!(lambda_grid[i] > lambda_grid[i - 1])) throw ConfigError("lasso_path: grid must be strictly increasing");
    }
    std::vector<SEPoint> out;
    out.reserve(lambda_grid.size());
    for (double l : lambda_grid) out.push_back(beta_of_lambda(model, l, opts));
    return out;
}

/// Threshold the policy prescribes for effective noise level sigma.
inline double se_threshold(const SEModel& model, const ThresholdPolicy& policy, double sigma) {
    return std::visit(overloaded{
                          [&](const FixedDetection& p) {
                              return detection_threshold(model.prior, sigma, std::min(1.0, p.gamma * model.delta));
                          },
                          [&](const FixedFalseAlarm& p) { return p.beta * sigma; },
                          [&](const FixedThreshold& p) { return p.tau; },
                      },
                      policy);
}

/// State-evolution recursion sigma_{t+1}^2 = sigma_w^2 + (1/delta) E[(eta(X + sigma_t Z; tau_t) - X)^2].
///
/// The default start sigma_0^2 = E[X^2]/delta is the noiseless form. AMP started
/// at x = 0 sees sigma_w^2 + E[X^2]/delta at its first step; pass that explicitly
/// to compare against an empirical run with measurement noise.
inline SETrajectory se_trajectory(const SEModel& model, const ThresholdPolicy& policy, int t_max,
                                  std::optional<double> init_sigma_sq = {}) {
    model.validate();
    validate(policy);
    if (t_max < 1) throw RangeError("se_trajectory: t_max must be >= 1");
    double s = init_sigma_sq.value_or(model.prior.second_moment() / model.delta);
    if (!(s > 0.0)) throw RangeError("se_trajectory: initial sigma^2 must be > 0");
    SETrajectory out;
    out.reserve(static_cast<std::size_t>(t_max) + 1);
    for (int t = 0; t <= t_max; ++t) {
        const double sigma = std::sqrt(s);
        const double tau = se_threshold(model, policy, sigma);
        out.push_back({t, sigma, tau});
        s = model.sigma_w_sq + risk(model.prior, sigma, tau) / model.delta;
    }
    return out;
}

/// Predicted (1/N)||x^{t+1} - x_o||^2 given step t of a trajectory.
inline double se_step_mse(const SEModel& model, const SEStep& step) {
    return risk(model.prior, step.sigma, step.tau);
}

/// Predicted ||x^{t+1}||_0 / N given step t of a trajectory.
inline double se_step_detection(const SEModel& model, const SEStep& step) {
    return detection_prob(model.prior, step.sigma, step.tau);
}

} // namespace amplasso
