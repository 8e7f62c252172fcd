#pragma once

#include <cmath>
#include <string>
#include <variant>

#include "amplasso/errors.hpp"

namespace amplasso {

/// Threshold at the floor(gamma n)-th largest magnitude, pinning the active-set size.
struct FixedDetection {
    double gamma = 1.0;
};

/// Threshold proportional to the effective noise level, tau = beta * sigma.
struct FixedFalseAlarm {
    double beta = 1.0;
};

struct FixedThreshold {
    double tau = 0.0;
};

using ThresholdPolicy = std::variant<FixedDetection, FixedFalseAlarm, FixedThreshold>;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline void validate(const ThresholdPolicy& policy) {
    std::visit(overloaded{
                   [](const FixedDetection& p) {
                       if (!(p.gamma > 0.0 && p.gamma <= 1.0)) throw RangeError("fixed detection: gamma must lie in (0, 1]");
                   },
                   [](const FixedFalseAlarm& p) {
                       if (!(p.beta > 0.0) || !std::isfinite(p.beta)) throw RangeError("fixed false alarm: beta must be > 0");
                   },
                   [](const FixedThreshold& p) {
                       if (!(p.tau >= 0.0)) throw RangeError("fixed threshold: tau must be >= 0");
                   },
               },
               policy);
}

inline std::string describe(const ThresholdPolicy& policy) {
    return std::visit(overloaded{
                          [](const FixedDetection& p) { return "fixed-detection(gamma=" + std::to_string(p.gamma) + ")"; },
                          [](const FixedFalseAlarm& p) { return "fixed-false-alarm(beta=" + std::to_string(p.beta) + ")"; },
                          [](const FixedThreshold& p) { return "fixed-threshold(tau=" + std::to_string(p.tau) + ")"; },
                      },
                      policy);
}

} // namespace amplasso
