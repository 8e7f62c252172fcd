// Command-line front end: state-evolution curves, empirical sweeps, single AMP
// runs, the phase-transition grid and risk curves, all emitted as CSV.
//
// Exit codes: 0 success, 2 configuration error, 3 solver failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "amplasso/amplasso.hpp"

namespace {

using namespace amplasso;

struct Params {
    // model
    double delta = 0.5;
    double sigma_w_sq = 0.2;
    std::string prior = "0.9:0,0.05:1,0.05:-1";
    // operating point
    std::optional<double> lambda, beta, gamma, tau;
    // instance
    std::uint64_t seed = 1;
    std::optional<std::size_t> n, big_n, k;
    double amplitude = 1.0;
    // solvers
    int amp_iters = 500;
    std::optional<double> tol;
    unsigned workers = 0;
    std::string solver = "fista";
    // grids
    std::optional<double> lambda_min;
    double lambda_max = 1.0;
    std::size_t points = 100;
    bool unit_entries = false;
    // phase transition
    std::vector<double> deltas;
    std::size_t delta_points = 20;
    double rho_lo = 0.8, rho_hi = 1.2;
    std::size_t rho_points = 50, trials = 20, display_rows = 20;
    std::string grid_out;
    // risk curve
    double sigma = 1.0, tau_max = 20.0;
    // output
    std::string out = "-";
    std::string dump;
};

SEModel model_from(const Params& p) {
    SEModel m{p.delta, p.sigma_w_sq, parse_prior(p.prior)};
    m.validate();
    return m;
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open output file " + path);
    os << text;
    if (!os) throw ConfigError("write failed for " + path);
}

void se_row(std::ostream& os, const SEPoint& p) {
    csv::row(os, {csv::num(p.lambda), csv::num(p.beta), csv::num(p.tau), csv::num(p.gamma), csv::num(p.sigma_hat),
                  csv::num(p.mse), csv::num(p.detection)});
}

constexpr const char* kSeHeader = "lambda,beta,tau,gamma,sigma_hat,mse,detection";

int count_set(std::initializer_list<bool> flags) {
    int c = 0;
    for (bool f : flags) c += f;
    return c;
}

std::string run_se_solve(const Params& p) {
    const auto model = model_from(p);
    if (count_set({p.lambda.has_value(), p.beta.has_value(), p.gamma.has_value()}) != 1) {
        throw ConfigError("se-solve: give exactly one of --lambda, --beta, --gamma");
    }
    SEPoint pt;
    if (p.lambda) pt = beta_of_lambda(model, *p.lambda);
    else if (p.beta) pt = lambda_of_beta(model, *p.beta);
    else pt = calibrate_gamma(model, *p.gamma);
    std::ostringstream os;
    csv::header(os, kSeHeader);
    se_row(os, pt);
    return os.str();
}

std::vector<double> lambda_grid(const Params& p) {
    if (p.points < 1) throw ConfigError("--points must be >= 1");
    if (!(p.lambda_max > 0.0)) throw RangeError("--lambda-max must be > 0");
    const double step = p.lambda_max / static_cast<double>(p.points);
    const double lo = p.lambda_min.value_or(step);
    if (!(lo >= 0.0 && lo <= p.lambda_max)) throw RangeError("--lambda-min must lie in [0, lambda-max]");
    std::vector<double> grid(p.points);
    for (std::size_t i = 0; i < p.points; ++i) {
        grid[i] = p.points == 1 ? p.lambda_max
                                : lo + (p.lambda_max - lo) * static_cast<double>(i) / static_cast<double>(p.points - 1);
    }
    return grid;
}

std::string run_lasso_path(const Params& p) {
    const auto model = model_from(p);
    const auto path = lasso_path(model, lambda_grid(p));
    std::ostringstream os;
    csv::header(os, kSeHeader);
    for (const auto& pt : path) se_row(os, pt);
    return os.str();
}

InstanceConfig instance_from(const Params& p, std::size_t default_n, std::size_t default_big_n) {
    InstanceConfig ic;
    ic.n_rows = p.n.value_or(default_n);
    ic.n_cols = p.big_n.value_or(default_big_n);
    if (p.k) ic.signal = SparseSignal{*p.k, p.amplitude, true};
    else ic.signal = parse_prior(p.prior);
    ic.noise_variance = p.sigma_w_sq;
    ic.seed = p.seed;
    ic.validate();
    return ic;
}

std::string run_sweep(const Params& p) {
    SweepConfig cfg;
    cfg.instance = instance_from(p, 1000, 2000);
    const auto user_lambdas = lambda_grid(p);
    cfg.lambdas = user_lambdas;
    if (p.unit_entries) {
        // Grid and noise given for a matrix with N(0, 1) entries; divide by n for N(0, 1/n).
        const double n = static_cast<double>(cfg.instance.n_rows);
        cfg.instance.noise_variance /= n;
        for (double& l : cfg.lambdas) l /= n;
    }
    if (p.solver == "fista") cfg.solver = SweepSolver::Fista;
    else if (p.solver == "amp") cfg.solver = SweepSolver::Amp;
    else throw ConfigError("--solver must be fista or amp");
    if (p.tol) cfg.lasso.tol = *p.tol;
    cfg.amp.max_iter = p.amp_iters;
    cfg.workers = p.workers;
    const auto rows = lambda_sweep_empirical(cfg);
    std::ostringstream os;
    csv::header(os, "lambda,empirical_mse,se_mse,empirical_dr,se_dr,kkt_residual,converged");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        csv::row(os, {csv::num(user_lambdas[i]), csv::num(r.empirical_mse), csv::num(r.se_mse),
                      csv::num(r.empirical_dr), csv::num(r.se_dr), csv::num(r.kkt_residual), r.converged ? "1" : "0"});
    }
    return os.str();
}

std::string run_amp(const Params& p) {
    const auto ic = instance_from(p, 500, 1000);
    if (count_set({p.gamma.has_value(), p.beta.has_value(), p.tau.has_value()}) != 1) {
        throw ConfigError("amp-run: give exactly one of --gamma (fixed detection), --beta (fixed false alarm), --tau");
    }
    ThresholdPolicy policy;
    if (p.gamma) policy = FixedDetection{*p.gamma};
    else if (p.beta) policy = FixedFalseAlarm{*p.beta};
    else policy = FixedThreshold{*p.tau};
    validate(policy);

    const auto inst = sample_instance(ic);
    if (!p.dump.empty()) write_instance(p.dump, inst, ic.describe());
    AmpOptions opts;
    opts.max_iter = p.amp_iters;
    if (p.tol) opts.conv_tol = *p.tol;
    opts.gaussianity = inst.cols() >= 100;
    const auto res = amp_run(inst, policy, opts);

    std::ostringstream os;
    csv::header(os, "t,tau,active_count,residual_norm,mse,kurtosis,ks");
    for (const auto& r : res.trace) {
        csv::row(os, {csv::num(r.t), csv::num(r.tau), csv::num(r.active_count), csv::num(r.residual_norm),
                      csv::num(r.mse), csv::num(r.kurtosis), csv::num(r.ks)});
    }
    return os.str();
}

std::string run_phase_transition(const Params& p) {
    PhaseGridConfig cfg;
    cfg.n_signal = p.big_n.value_or(1000);
    cfg.delta_grid = p.deltas.empty() ? PhaseGridConfig::equispaced(0.1, 0.9, p.delta_points) : p.deltas;
    cfg.rho_lo_factor = p.rho_lo;
    cfg.rho_hi_factor = p.rho_hi;
    cfg.rho_points = p.rho_points;
    cfg.trials = p.trials;
    cfg.tol = p.tol.value_or(1e-2);
    cfg.max_iter = p.amp_iters;
    cfg.gamma = p.gamma.value_or(1.0);
    cfg.base_seed = p.seed;
    cfg.workers = p.workers;
    const auto grid = phase_transition_grid(cfg);

    std::ostringstream os;
    csv::header(os, "delta,rho_theory,n,rho,k,successes,trials,success_rate");
    for (std::size_t c = 0; c < grid.columns.size(); ++c) {
        const auto& col = grid.columns[c];
        for (std::size_t r = 0; r < col.rho.size(); ++r) {
            csv::row(os, {csv::num(col.delta), csv::num(col.rho_theory), csv::num(col.n), csv::num(col.rho[r]),
                          csv::num(col.k[r]), csv::num(col.successes[r]), csv::num(grid.trials),
                          csv::num(grid.success_rate(c, r))});
        }
    }
    if (!p.grid_out.empty()) {
        std::ostringstream g;
        csv::header(g, "delta,rho,probability");
        for (const auto& cell : interpolate_display_grid(grid, p.display_rows)) {
            csv::row(g, {csv::num(cell.delta), csv::num(cell.rho), csv::num(cell.probability)});
        }
        write_output(p.grid_out, g.str());
    }
    return os.str();
}

std::string run_risk_curve(const Params& p) {
    const auto prior = parse_prior(p.prior);
    if (!(p.sigma > 0.0)) throw RangeError("--sigma must be > 0");
    if (!(p.tau_max > 0.0) || p.points < 2) throw RangeError("risk-curve needs --tau-max > 0 and --points >= 2");
    std::ostringstream os;
    csv::header(os, "tau,risk,risk_derivative");
    for (std::size_t i = 0; i < p.points; ++i) {
        const double t = p.tau_max * static_cast<double>(i) / static_cast<double>(p.points - 1);
        csv::row(os, {csv::num(t), csv::num(risk(prior, p.sigma, t)), csv::num(risk_derivative(prior, p.sigma, t))});
    }
    return os.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"AMP / LASSO state-evolution and experiment tool"};
    app.set_config("--config", "", "key=value file mirroring the long flags; command-line flags win");
    app.allow_config_extras(false);
    app.require_subcommand(1);

    Params p;
    app.add_option("--delta", p.delta, "undersampling ratio n/N for state evolution")->capture_default_str();
    app.add_option("--sigma-w-sq", p.sigma_w_sq, "noise variance")->capture_default_str();
    app.add_option("--prior", p.prior, "signal prior as weight:value,...")->capture_default_str();
    app.add_option("--lambda", p.lambda, "regularization parameter");
    app.add_option("--beta", p.beta, "fixed false-alarm parameter (tau = beta sigma)");
    app.add_option("--gamma", p.gamma, "fixed detection parameter");
    app.add_option("--tau", p.tau, "fixed threshold (amp-run)");
    app.add_option("--seed", p.seed, "master seed")->capture_default_str();
    app.add_option("--n", p.n, "measurements (rows of A)");
    app.add_option("--big-n", p.big_n, "signal length (columns of A)");
    app.add_option("--k", p.k, "nonzeros of a +-amplitude sparse signal; default draws iid from --prior");
    app.add_option("--amplitude", p.amplitude, "magnitude of sparse-signal entries")->capture_default_str();
    app.add_option("--amp-iters", p.amp_iters, "AMP iteration cap")->capture_default_str();
    app.add_option("--tol", p.tol,
                   "sweep: LASSO KKT tolerance; amp-run: convergence tolerance; phase-transition: success threshold");
    app.add_option("--workers", p.workers, "worker threads, 0 = hardware concurrency")->capture_default_str();
    app.add_option("--solver", p.solver, "sweep solver: fista or amp")->capture_default_str();
    app.add_option("--lambda-min", p.lambda_min, "first lambda of the grid (default lambda-max/points)");
    app.add_option("--lambda-max", p.lambda_max, "last lambda of the grid")->capture_default_str();
    app.add_option("--points", p.points, "grid points (lambda or tau)")->capture_default_str();
    app.add_flag("--unit-entries", p.unit_entries, "sweep: lambda and noise given for N(0,1) matrix entries");
    app.add_option("--deltas", p.deltas, "phase-transition delta values (comma separated)")->delimiter(',');
    app.add_option("--delta-points", p.delta_points, "equispaced delta values in [0.1, 0.9]")->capture_default_str();
    app.add_option("--rho-lo", p.rho_lo, "lower rho band factor")->capture_default_str();
    app.add_option("--rho-hi", p.rho_hi, "upper rho band factor")->capture_default_str();
    app.add_option("--rho-points", p.rho_points, "rho samples per delta")->capture_default_str();
    app.add_option("--trials", p.trials, "Monte Carlo trials per cell")->capture_default_str();
    app.add_option("--display-rows", p.display_rows, "rows of the interpolated grid")->capture_default_str();
    app.add_option("--grid-out", p.grid_out, "phase-transition: interpolated display grid CSV");
    app.add_option("--sigma", p.sigma, "risk-curve noise level")->capture_default_str();
    app.add_option("--tau-max", p.tau_max, "risk-curve threshold range")->capture_default_str();
    app.add_option("--out", p.out, "output CSV path, - for stdout")->capture_default_str();
    app.add_option("--dump", p.dump, "amp-run: write the sampled instance to this binary file");

    std::string (*action)(const Params&) = nullptr;
    auto sub = [&](const char* name, const char* help, std::string (*fn)(const Params&)) {
        app.add_subcommand(name, help)->fallthrough()->callback([&action, fn] { action = fn; });
    };
    sub("se-solve", "one state-evolution point from --lambda, --beta or --gamma", run_se_solve);
    sub("lasso-path", "state-evolution MSE and detection over a lambda grid", run_lasso_path);
    sub("sweep", "empirical lambda sweep against state evolution", run_sweep);
    sub("amp-run", "one AMP run with per-iteration trace", run_amp);
    sub("phase-transition", "Monte Carlo success grid around the l1 phase transition", run_phase_transition);
    sub("risk-curve", "soft-threshold risk and its slope over a threshold grid", run_risk_curve);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        write_output(p.out, action(p));
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
