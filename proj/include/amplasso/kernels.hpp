#pragma once

// Scalar kernels of the soft-thresholding denoiser under Gaussian noise.
//
// Two coordinate systems are used:
//   absolute   - signal x, noise level sigma, threshold theta:
//                risk = E_Z[(eta(x + sigma Z; theta) - x)^2]
//   normalized - mu = x / sigma, beta = theta / sigma:
//                r(mu, beta) = E_Z[(eta(mu + Z; beta) - mu)^2]
// and absolute risk = sigma^2 * r(x / sigma, theta / sigma).

#include <cmath>
#include <numbers>

#include "amplasso/prior.hpp"

namespace amplasso {

/// eta(a; tau) = (|a| - tau)_+ sign(a).
constexpr double soft_threshold(double a, double tau) noexcept {
    if (a > tau) return a - tau;
    if (a < -tau) return a + tau;
    return 0.0;
}

inline double std_normal_pdf(double x) noexcept {
    constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343818684759;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Phi(x), evaluated through erfc so that the lower tail keeps full relative precision.
inline double std_normal_cdf(double x) noexcept {
    return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

/// 1 - Phi(x) without cancellation.
inline double std_normal_sf(double x) noexcept {
    return 0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0);
}

/// P(lo < Z < hi) for lo <= hi, choosing the tail that avoids cancellation.
inline double std_normal_interval(double lo, double hi) noexcept {
    if (lo >= 0.0) return std_normal_sf(lo) - std_normal_sf(hi);
    if (hi <= 0.0) return std_normal_cdf(hi) - std_normal_cdf(lo);
    return 1.0 - std_normal_cdf(lo) - std_normal_sf(hi);
}

/// r(mu, beta) in normalized coordinates.
///
/// Decomposes on the three regions of eta: above beta the error is (Z - beta),
/// below -beta it is (Z + beta), and inside the dead zone it is -mu.
inline double normalized_atom_risk(double mu, double beta) noexcept {
    const double a = beta - mu;
    const double b = -beta - mu;
    const double tails = std_normal_sf(a) + std_normal_cdf(b);
    return (1.0 + beta * beta) * tails - (beta + mu) * std_normal_pdf(a) - (beta - mu) * std_normal_pdf(b)
           + mu * mu * std_normal_interval(b, a);
}

/// d r(mu, beta) / d beta = 2 beta P(|mu + Z| > beta) - 2 (phi(beta - mu) + phi(beta + mu)).
inline double normalized_atom_risk_derivative(double mu, double beta) noexcept {
    const double a = beta - mu;
    const double b = -beta - mu;
    return 2.0 * beta * (std_normal_sf(a) + std_normal_cdf(b)) - 2.0 * (std_normal_pdf(a) + std_normal_pdf(b));
}

/// E_Z[(eta(x + sigma Z; theta) - x)^2] in absolute coordinates.
inline double atom_risk(double x, double sigma, double theta) noexcept {
    return sigma * sigma * normalized_atom_risk(x / sigma, theta / sigma);
}

/// Mixture risk E_{X,Z}[(eta(X + sigma Z; theta) - X)^2], absolute coordinates.
inline double risk(const Prior& prior, double sigma, double theta) noexcept {
    double acc = 0.0;
    for (const auto& a : prior.atoms()) acc += a.weight * atom_risk(a.value, sigma, theta);
    return acc;
}

/// d risk / d theta in absolute coordinates. Equals sigma times the derivative
/// of the normalized risk with respect to beta, so both share the same sign.
inline double risk_derivative(const Prior& prior, double sigma, double theta) noexcept {
    double acc = 0.0;
    const double beta = theta / sigma;
    for (const auto& a : prior.atoms()) {
        acc += a.weight * normalized_atom_risk_derivative(a.value / sigma, beta);
    }
    return sigma * acc;
}

/// P(|X + sigma Z| > theta).
inline double detection_prob(const Prior& prior, double sigma, double theta) noexcept {
    double acc = 0.0;
    for (const auto& a : prior.atoms()) {
        acc += a.weight * (std_normal_sf((theta - a.value) / sigma) + std_normal_cdf((-theta - a.value) / sigma));
    }
    return acc;
}

struct PsiParams {
    double delta = 1.0;
    double sigma_w_sq = 0.0;
    Prior prior;
    double beta = 0.0;
};

/// Psi(s) = sigma_w^2 + (1/delta) E[(eta(X + sqrt(s) Z; beta sqrt(s)) - X)^2].
inline double psi_map(double sigma_sq, const PsiParams& p) noexcept {
    const double sigma = std::sqrt(sigma_sq);
    return p.sigma_w_sq + risk(p.prior, sigma, p.beta * sigma) / p.delta;
}

} // namespace amplasso
