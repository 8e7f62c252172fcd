#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "amplasso/errors.hpp"

namespace amplasso {

struct Atom {
    double value = 0.0;
    double weight = 0.0;
};

/// Signal distribution as a finite mixture of point masses.
///
/// Every expectation over X in the library is a weighted sum over the atoms,
/// so all risk and detection quantities have closed forms in phi/Phi.
class Prior {
public:
    Prior() = default;

    /// Validates the atoms: finite values, distinct values, weights in (0, 1]
    /// summing to one within `sum_tol`.
    explicit Prior(std::vector<Atom> atoms, double sum_tol = 1e-12) : atoms_(std::move(atoms)) {
        if (atoms_.empty()) {
            throw ConfigError("prior: at least one atom is required");
        }
        double total = 0.0;
        for (const auto& a : atoms_) {
            if (!std::isfinite(a.value)) {
                throw ConfigError("prior: atom values must be finite");
            }
            if (!(a.weight > 0.0) || a.weight > 1.0) {
                throw ConfigError("prior: atom weights must lie in (0, 1]");
            }
            total += a.weight;
        }
        if (std::abs(total - 1.0) > sum_tol) {
            throw ConfigError("prior: weights sum to " + std::to_string(total) + ", expected 1");
        }
        auto sorted = atoms_;
        std::sort(sorted.begin(), sorted.end(),
                  [](const Atom& a, const Atom& b) { return a.value < b.value; });
        for (std::size_t i = 1; i < sorted.size(); ++i) {
            if (sorted[i].value == sorted[i - 1].value) {
                throw ConfigError("prior: duplicate atom value");
            }
        }
    }

    /// Point mass at zero.
    static Prior zero() { return Prior({{0.0, 1.0}}); }

    /// (1 - eps) * delta_0 + eps/2 * (delta_{+a} + delta_{-a}).
    static Prior symmetric_sparse(double eps, double amplitude) {
        if (eps <= 0.0) return zero();
        if (eps >= 1.0) return Prior({{-amplitude, 0.5}, {amplitude, 0.5}});
        return Prior({{0.0, 1.0 - eps}, {-amplitude, 0.5 * eps}, {amplitude, 0.5 * eps}});
    }

    const std::vector<Atom>& atoms() const noexcept { return atoms_; }

    double second_moment() const noexcept {
        double m = 0.0;
        for (const auto& a : atoms_) m += a.weight * a.value * a.value;
        return m;
    }

    /// P(X != 0).
    double nonzero_mass() const noexcept {
        double m = 0.0;
        for (const auto& a : atoms_) {
            if (a.value != 0.0) m += a.weight;
        }
        return m;
    }

    double max_abs_value() const noexcept {
        double m = 0.0;
        for (const auto& a : atoms_) m = std::max(m, std::abs(a.value));
        return m;
    }

    /// Inverse-CDF draw given u in [0, 1). Atoms are visited in storage order.
    double quantile(double u) const noexcept {
        double acc = 0.0;
        for (const auto& a : atoms_) {
            acc += a.weight;
            if (u < acc) return a.value;
        }
        return atoms_.back().value;
    }

private:
    std::vector<Atom> atoms_;
};

/// Parses `weight:value` tokens separated by commas, e.g. "0.8:0,0.1:1,0.1:-1".
inline Prior parse_prior(std::string_view text) {
    std::vector<Atom> atoms;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string_view::npos) comma = text.size();
        std::string token(text.substr(pos, comma - pos));
        token.erase(std::remove_if(token.begin(), token.end(), [](unsigned char c) { return std::isspace(c); }),
                    token.end());
        if (token.empty()) {
            throw ConfigError("prior: empty token in '" + std::string(text) + "'");
        }
        const auto colon = token.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("prior: token '" + token + "' is not weight:value");
        }
        Atom a;
        try {
            std::size_t used = 0;
            a.weight = std::stod(token.substr(0, colon), &used);
            if (used != colon) throw std::invalid_argument("trailing");
            const auto rest = token.substr(colon + 1);
            a.value = std::stod(rest, &used);
            if (used != rest.size()) throw std::invalid_argument("trailing");
        } catch (const std::logic_error&) {
            throw ConfigError("prior: cannot parse token '" + token + "'");
        }
        atoms.push_back(a);
        pos = comma + 1;
    }
    double total = 0.0;
    for (const auto& a : atoms) total += a.weight;
    if (!(std::abs(total - 1.0) <= 1e-9)) {
        throw ConfigError("prior: weights sum to " + std::to_string(total) + ", expected 1 within 1e-9");
    }
    for (auto& a : atoms) a.weight /= total;
    return Prior(std::move(atoms));
}

inline std::string format_prior(const Prior& p) {
    std::string out;
    char buf[64];
    for (const auto& a : p.atoms()) {
        if (!out.empty()) out += ',';
        std::snprintf(buf, sizeof buf, "%.17g:%.17g", a.weight, a.value);
        out += buf;
    }
    return out;
}

} // namespace amplasso
