#pragma once

// Experiment harness: the l1 phase-transition curve, the Monte Carlo
// phase-transition grid for fixed-detection AMP, and empirical lambda sweeps
// compared against state evolution.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "amplasso/amp.hpp"
#include "amplasso/errors.hpp"
#include "amplasso/kernels.hpp"
#include "amplasso/lasso.hpp"
#include "amplasso/problem.hpp"
#include "amplasso/rng.hpp"
#include "amplasso/state_evolution.hpp"

namespace amplasso {

// ---------------------------------------------------------------------------
// Theoretical phase transition
// ---------------------------------------------------------------------------

struct CurvePoint {
    double delta = 0.0;
    double rho = 0.0;
};

/// Parametric l1 phase-transition curve at z > 0:
///   delta = phi(z) / (phi(z) + z (Phi(z) - 1/2)),  rho = 1 - z (1 - Phi(z)) / phi(z).
inline CurvePoint l1_transition_point(double z) {
    if (!(z > 0.0)) throw RangeError("l1_transition_point: z must be > 0");
    const double pdf = std_normal_pdf(z);
    CurvePoint p;
    p.delta = pdf / (pdf + z * (std_normal_cdf(z) - 0.5));
    // 1 - Phi(z) over phi(z) is the Mills ratio; for large z the ratio of two
    // underflowing quantities is replaced by its asymptotic series.
    const double mills = z < 30.0 ? std_normal_sf(z) / pdf
                                  : (1.0 / z) * (1.0 - 1.0 / (z * z) + 3.0 / std::pow(z, 4) - 15.0 / std::pow(z, 6));
    p.rho = 1.0 - z * mills;
    return p;
}

inline std::vector<CurvePoint> l1_transition_curve(std::span<const double> z_grid) {
    std::vector<CurvePoint> out;
    out.reserve(z_grid.size());
    for (std::size_t i = 0; i < z_grid.size(); ++i) {
        if (i > 0 && !(z_grid[i] > z_grid[i - 1])) throw ConfigError("l1_transition_curve: z grid must be increasing");
        out.push_back(l1_transition_point(z_grid[i]));
    }
    return out;
}

/// rho(delta) on the curve, inverting the strictly decreasing delta(z) by bisection.
inline double rho_of_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw RangeError("rho_of_delta: delta must lie in (0, 1)");
    double lo = 1e-12, hi = 60.0;
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (l1_transition_point(mid).delta > delta ? lo : hi) = mid;
    }
    return l1_transition_point(0.5 * (lo + hi)).rho;
}

// ---------------------------------------------------------------------------
// Monte Carlo phase-transition grid
// ---------------------------------------------------------------------------

struct PhaseGridConfig {
    std::size_t n_signal = 1000;
    std::vector<double> delta_grid = equispaced(0.1, 0.9, 20);
    double rho_lo_factor = 0.8;
    double rho_hi_factor = 1.2;
    std::size_t rho_points = 50;
    std::size_t trials = 20;
    double tol = 1e-2;
    int max_iter = 500;
    double conv_tol = 1e-10;
    double gamma = 1.0;
    std::uint64_t base_seed = 0;
    /// 0 selects std::thread::hardware_concurrency().
    unsigned workers = 0;

    static std::vector<double> equispaced(double lo, double hi, std::size_t count) {
        std::vector<double> v(count);
        for (std::size_t i = 0; i < count; ++i) {
            v[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
        }
        return v;
    }

    void validate() const {
        if (n_signal < 2) throw ConfigError("phase grid: n_signal must be >= 2");
        if (delta_grid.empty()) throw ConfigError("phase grid: empty delta grid");
        for (double d : delta_grid) {
            if (!(d > 0.0 && d < 1.0)) throw RangeError("phase grid: delta values must lie in (0, 1)");
        }
        if (!(rho_lo_factor > 0.0 && rho_hi_factor >= rho_lo_factor)) throw RangeError("phase grid: bad rho band");
        if (rho_points < 1 || trials < 1) throw ConfigError("phase grid: rho_points and trials must be >= 1");
        if (!(gamma > 0.0 && gamma <= 1.0)) throw RangeError("phase grid: gamma must lie in (0, 1]");
        if (!(tol > 0.0) || max_iter < 1) throw RangeError("phase grid: bad tolerance or iteration cap");
    }
};

struct PhaseColumn {
    double delta = 0.0;
    double rho_theory = 0.0;
    std::size_t n = 0;
    std::vector<double> rho;
    std::vector<std::size_t> k;
    std::vector<std::size_t> successes;
};

struct PhaseGrid {
    std::size_t trials = 0;
    std::vector<PhaseColumn> columns;

    double success_rate(std::size_t col, std::size_t row) const {
        return static_cast<double>(columns[col].successes[row]) / static_cast<double>(trials);
    }
};

/// floor(fraction * count) with protection against products landing just below an integer.
inline std::size_t floor_fraction(double fraction, std::size_t count) {
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(count) * (1.0 + 1e-12)));
}

/// Seed of one phase-grid trial; independent of scheduling.
inline std::uint64_t trial_seed(std::uint64_t base, std::size_t delta_index, std::size_t rho_index,
                                std::size_t trial) {
    return derive_seed(base, {delta_index, rho_index, trial});
}

/// Noiseless recovery attempt with fixed-detection AMP; true on relative error < tol.
inline bool recovery_trial(std::size_t n, std::size_t big_n, std::size_t k, const PhaseGridConfig& cfg,
                           std::uint64_t seed) {
    InstanceConfig ic;
    ic.n_rows = n;
    ic.n_cols = big_n;
    ic.signal = SparseSignal{k, 1.0, true};
    ic.noise_variance = 0.0;
    ic.seed = seed;
    const auto inst = sample_instance(ic);
    AmpOptions opts;
    opts.max_iter = cfg.max_iter;
    opts.conv_tol = cfg.conv_tol;
    try {
        const auto res = amp_run(inst, FixedDetection{cfg.gamma}, opts);
        const double ref = inst.x_o.norm();
        const double err = (res.state.x - inst.x_o).norm();
        return ref > 0.0 ? err / ref < cfg.tol : err == 0.0;
    } catch (const Divergence&) {
        return false;
    }
}

/// Runs every (delta, rho, trial) recovery; results are reduced by index, so the
/// grid does not depend on the worker count or completion order.
inline PhaseGrid phase_transition_grid(const PhaseGridConfig& cfg) {
    cfg.validate();
    PhaseGrid grid;
    grid.trials = cfg.trials;
    for (double d : cfg.delta_grid) {
        PhaseColumn col;
        col.delta = d;
        col.rho_theory = rho_of_delta(d);
        col.n = floor_fraction(d, cfg.n_signal);
        if (col.n < 1) throw ConfigError("phase grid: delta * N rounds to zero measurements");
        const auto band = PhaseGridConfig::equispaced(cfg.rho_lo_factor * col.rho_theory,
                                                      cfg.rho_hi_factor * col.rho_theory, cfg.rho_points);
        for (double r : band) {
            col.rho.push_back(r);
            col.k.push_back(std::min(floor_fraction(r, col.n), cfg.n_signal));
        }
        col.successes.assign(band.size(), 0);
        grid.columns.push_back(std::move(col));
    }

    const std::size_t per_col = cfg.rho_points * cfg.trials;
    const std::size_t total = grid.columns.size() * per_col;
    std::vector<std::uint8_t> outcome(total, 0);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t task = next++; task < total; task = next++) {
            const std::size_t c = task / per_col;
            const std::size_t r = (task % per_col) / cfg.trials;
            const std::size_t j = task % cfg.trials;
            const auto& col = grid.columns[c];
            outcome[task] = recovery_trial(col.n, cfg.n_signal, col.k[r], cfg, trial_seed(cfg.base_seed, c, r, j));
        }
    };
    unsigned workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, total));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    for (std::size_t task = 0; task < total; ++task) {
        grid.columns[task / per_col].successes[(task % per_col) / cfg.trials] += outcome[task];
    }
    return grid;
}

/// First rho where the success rate falls from >= level to < level, by linear interpolation.
inline std::optional<double> success_crossing(std::span<const double> rho, std::span<const double> rate,
                                              double level = 0.5) {
    if (rho.size() != rate.size() || rho.empty()) throw DimensionError("success_crossing: length mismatch");
    for (std::size_t i = 1; i < rho.size(); ++i) {
        if (rate[i - 1] >= level && rate[i] < level) {
            const double f = (rate[i - 1] - level) / (rate[i - 1] - rate[i]);
            return rho[i - 1] + f * (rho[i] - rho[i - 1]);
        }
    }
    return std::nullopt;
}

inline std::optional<double> success_crossing(const PhaseGrid& grid, std::size_t col, double level = 0.5) {
    const auto& c = grid.columns.at(col);
    std::vector<double> rate(c.rho.size());
    for (std::size_t i = 0; i < rate.size(); ++i) rate[i] = grid.success_rate(col, i);
    return success_crossing(c.rho, rate, level);
}

struct DisplayCell {
    double delta = 0.0;
    double rho = 0.0;
    double probability = 0.0;
};

/// Resamples each delta column onto `rows` equispaced rho values spanning
/// [rho(first delta), rho(last delta)] by linear interpolation in rho. Outside a
/// column's band the nearest band value is held.
inline std::vector<DisplayCell> interpolate_display_grid(const PhaseGrid& grid, std::size_t rows = 20) {
    std::vector<DisplayCell> out;
    if (grid.columns.empty()) return out;
    const auto targets = PhaseGridConfig::equispaced(grid.columns.front().rho_theory, grid.columns.back().rho_theory,
                                                     rows);
    for (std::size_t c = 0; c < grid.columns.size(); ++c) {
        const auto& col = grid.columns[c];
        for (double r : targets) {
            double p = 0.0;
            if (r <= col.rho.front()) {
                p = grid.success_rate(c, 0);
            } else if (r >= col.rho.back()) {
                p = grid.success_rate(c, col.rho.size() - 1);
            } else {
                const auto it = std::upper_bound(col.rho.begin(), col.rho.end(), r);
                const auto i = static_cast<std::size_t>(it - col.rho.begin());
                const double f = (r - col.rho[i - 1]) / (col.rho[i] - col.rho[i - 1]);
                p = (1.0 - f) * grid.success_rate(c, i - 1) + f * grid.success_rate(c, i);
            }
            out.push_back({col.delta, r, p});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Empirical lambda sweep
// ---------------------------------------------------------------------------

enum class SweepSolver { Fista, Amp };

struct SweepConfig {
    InstanceConfig instance;
    std::vector<double> lambdas;
    SweepSolver solver = SweepSolver::Fista;
    LassoOptions lasso;
    AmpOptions amp{.max_iter = 2000, .conv_tol = 1e-10};
    /// Entries with |x_i| <= rel_zero_tol * ||x||_inf count as zero.
    double rel_zero_tol = 1e-8;
    unsigned workers = 0;
};

struct SweepRow {
    double lambda = 0.0;
    double empirical_mse = 0.0;
    double se_mse = 0.0;
    double empirical_dr = 0.0;
    double se_dr = 0.0;
    double kkt_residual = 0.0;
    bool converged = false;
};

/// Prior implied by an instance's signal specification.
inline Prior signal_prior(const InstanceConfig& cfg) {
    if (const auto* p = std::get_if<Prior>(&cfg.signal)) return *p;
    const auto& s = std::get<SparseSignal>(cfg.signal);
    const double eps = static_cast<double>(s.k) / static_cast<double>(cfg.n_cols);
    if (s.random_sign) return Prior::symmetric_sparse(eps, s.amplitude);
    if (eps <= 0.0) return Prior::zero();
    if (eps >= 1.0) return Prior({{s.amplitude, 1.0}});
    return Prior({{0.0, 1.0 - eps}, {s.amplitude, eps}});
}

inline std::vector<SweepRow> lambda_sweep_empirical(const SweepConfig& cfg) {
    cfg.instance.validate();
    if (cfg.lambdas.empty()) throw ConfigError("sweep: empty lambda grid");
    for (double l : cfg.lambdas) {
        if (!(l > 0.0)) throw RangeError("sweep: lambda values must be > 0");
    }
    const SEModel model{static_cast<double>(cfg.instance.n_rows) / static_cast<double>(cfg.instance.n_cols),
                        cfg.instance.noise_variance, signal_prior(cfg.instance)};
    model.validate();
    const auto inst = sample_instance(cfg.instance);

    std::vector<SweepRow> rows(cfg.lambdas.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) {
            SweepRow row;
            row.lambda = cfg.lambdas[i];
            const auto se = beta_of_lambda(model, row.lambda);
            row.se_mse = se.mse;
            row.se_dr = se.detection;
            Eigen::VectorXd x;
            if (cfg.solver == SweepSolver::Fista) {
                auto res = lasso_solve(inst, row.lambda, cfg.lasso);
                row.converged = res.converged;
                x = std::move(res.x_hat);
            } else {
                try {
                    auto res = amp_run(inst, FixedDetection{se.gamma}, cfg.amp);
                    row.converged = res.converged;
                    x = std::move(res.state.x);
                } catch (const Divergence&) {
                    row.converged = false;
                    x = Eigen::VectorXd::Zero(inst.cols());
                }
            }
            row.kkt_residual = kkt_residual(inst, row.lambda, x);
            const auto obs = compute_observables(x, inst.x_o, cfg.rel_zero_tol * x.lpNorm<Eigen::Infinity>());
            row.empirical_mse = obs.mse;
            row.empirical_dr = obs.dr;
            rows[i] = row;
        }
    };
    unsigned workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, rows.size()));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return rows;
}

// ---------------------------------------------------------------------------
// Curve diagnostics
// ---------------------------------------------------------------------------

/// Sign changes of successive differences, ignoring differences with |d| <= flat_tol.
inline int count_slope_sign_changes(std::span<const double> values, double flat_tol = 0.0) {
    int changes = 0;
    int last = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        const double d = values[i] - values[i - 1];
        const int s = d > flat_tol ? 1 : (d < -flat_tol ? -1 : 0);
        if (s == 0) continue;
        if (last != 0 && s != last) ++changes;
        last = s;
    }
    return changes;
}

/// Sign changes of the values themselves, with |v| <= flat_tol treated as zero.
inline int count_sign_changes(std::span<const double> values, double flat_tol = 0.0) {
    int changes = 0;
    int last = 0;
    for (double v : values) {
        const int s = v > flat_tol ? 1 : (v < -flat_tol ? -1 : 0);
        if (s == 0) continue;
        if (last != 0 && s != last) ++changes;
        last = s;
    }
    return changes;
}

/// Every successive difference is below -margin.
inline bool strictly_decreasing(std::span<const double> values, double margin = 0.0) {
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (!(values[i] - values[i - 1] < -margin)) return false;
    }
    return true;
}

/// Length of the longest run of consecutive increases.
inline std::size_t longest_increasing_run(std::span<const double> values) {
    std::size_t best = 0, run = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        run = values[i] > values[i - 1] ? run + 1 : 0;
        best = std::max(best, run);
    }
    return best;
}

} // namespace amplasso
