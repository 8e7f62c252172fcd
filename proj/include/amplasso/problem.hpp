#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "amplasso/errors.hpp"
#include "amplasso/prior.hpp"
#include "amplasso/rng.hpp"

namespace amplasso {

/// k nonzero entries of magnitude `amplitude` on a uniformly random support.
struct SparseSignal {
    std::size_t k = 0;
    double amplitude = 1.0;
    bool random_sign = true;
};

struct InstanceConfig {
    std::size_t n_rows = 1;
    std::size_t n_cols = 1;
    std::variant<SparseSignal, Prior> signal = SparseSignal{};
    double noise_variance = 0.0;
    std::uint64_t seed = 0;

    bool undersampled() const noexcept { return n_rows <= n_cols; }

    void validate() const {
        if (n_rows < 1 || n_cols < 1) throw DimensionError("instance: dimensions must be >= 1");
        if (!(noise_variance >= 0.0)) throw RangeError("instance: noise variance must be >= 0");
        if (const auto* s = std::get_if<SparseSignal>(&signal); s && s->k > n_cols) {
            throw DimensionError("instance: k=" + std::to_string(s->k) + " exceeds N=" + std::to_string(n_cols));
        }
    }

    std::string describe() const {
        char buf[256];
        std::string sig;
        if (const auto* s = std::get_if<SparseSignal>(&signal)) {
            std::snprintf(buf, sizeof buf, "sparse(k=%zu,amplitude=%.17g,random_sign=%d)", s->k, s->amplitude,
                          s->random_sign ? 1 : 0);
            sig = buf;
        } else {
            sig = "prior(" + format_prior(std::get<Prior>(signal)) + ")";
        }
        std::snprintf(buf, sizeof buf, "n=%zu N=%zu noise_variance=%.17g seed=%llu ", n_rows, n_cols, noise_variance,
                      static_cast<unsigned long long>(seed));
        return std::string(buf) + "signal=" + sig;
    }
};

struct ProblemInstance {
    Eigen::MatrixXd A;
    Eigen::VectorXd x_o;
    Eigen::VectorXd w;
    Eigen::VectorXd y;
    std::uint64_t seed = 0;

    Eigen::Index rows() const noexcept { return A.rows(); }
    Eigen::Index cols() const noexcept { return A.cols(); }
    double delta() const noexcept { return static_cast<double>(A.rows()) / static_cast<double>(A.cols()); }
};

/// Draws an instance. A has iid N(0, 1/n) entries generated column by column;
/// the matrix, signal and noise come from independent substreams of `seed`,
/// so changing the signal leaves A untouched.
inline ProblemInstance sample_instance(const InstanceConfig& cfg) {
    cfg.validate();
    const auto n = static_cast<Eigen::Index>(cfg.n_rows);
    const auto big_n = static_cast<Eigen::Index>(cfg.n_cols);

    ProblemInstance inst;
    inst.seed = cfg.seed;
    inst.A.resize(n, big_n);
    {
        RandomStream rs(cfg.seed, Stream::Matrix);
        const double scale = 1.0 / std::sqrt(static_cast<double>(n));
        for (Eigen::Index j = 0; j < big_n; ++j) {
            for (Eigen::Index i = 0; i < n; ++i) inst.A(i, j) = scale * rs.gaussian();
        }
    }

    inst.x_o = Eigen::VectorXd::Zero(big_n);
    if (const auto* s = std::get_if<SparseSignal>(&cfg.signal)) {
        // Partial Fisher-Yates: the first k slots of the permutation form the support.
        std::vector<std::size_t> perm(cfg.n_cols);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        RandomStream support(cfg.seed, Stream::Support);
        RandomStream sign(cfg.seed, Stream::Sign);
        for (std::size_t i = 0; i < s->k; ++i) {
            const auto j = i + static_cast<std::size_t>(support.below(cfg.n_cols - i));
            std::swap(perm[i], perm[j]);
            const double sgn = (s->random_sign && (sign.next_u64() >> 63)) ? -1.0 : 1.0;
            inst.x_o(static_cast<Eigen::Index>(perm[i])) = sgn * s->amplitude;
        }
    } else {
        const auto& prior = std::get<Prior>(cfg.signal);
        RandomStream rs(cfg.seed, Stream::Signal);
        for (Eigen::Index j = 0; j < big_n; ++j) inst.x_o(j) = prior.quantile(rs.uniform());
    }

    inst.w = Eigen::VectorXd::Zero(n);
    if (cfg.noise_variance > 0.0) {
        RandomStream rs(cfg.seed, Stream::Noise);
        const double sd = std::sqrt(cfg.noise_variance);
        for (Eigen::Index i = 0; i < n; ++i) inst.w(i) = sd * rs.gaussian();
    }
    inst.y = inst.A * inst.x_o + inst.w;
    return inst;
}

/// (min, max) of the column l2 norms of A.
inline std::pair<double, double> column_norm_range(const Eigen::MatrixXd& A) {
    const Eigen::VectorXd norms = A.colwise().norm().transpose();
    return {norms.minCoeff(), norms.maxCoeff()};
}

struct Observables {
    double mse = 0.0;
    double fa = 0.0; ///< false alarms: estimate nonzero where the truth is zero
    double dr = 0.0; ///< detection rate: estimate nonzero
    double md = 0.0; ///< missed detections: estimate zero where the truth is nonzero
};

/// Per-coordinate averages; an entry counts as nonzero when |x_hat_i| > zero_tol.
inline Observables compute_observables(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& x_o,
                                       double zero_tol = 0.0) {
    if (x_hat.size() != x_o.size()) throw DimensionError("compute_observables: length mismatch");
    if (x_hat.size() == 0) throw DimensionError("compute_observables: empty vectors");
    if (!(zero_tol >= 0.0)) throw RangeError("compute_observables: zero_tol must be >= 0");
    Observables obs;
    std::size_t fa = 0, dr = 0, md = 0;
    for (Eigen::Index i = 0; i < x_hat.size(); ++i) {
        const bool active = std::abs(x_hat(i)) > zero_tol;
        dr += active;
        fa += active && x_o(i) == 0.0;
        md += !active && x_o(i) != 0.0;
    }
    const auto big_n = static_cast<double>(x_hat.size());
    obs.mse = (x_hat - x_o).squaredNorm() / big_n;
    obs.fa = static_cast<double>(fa) / big_n;
    obs.dr = static_cast<double>(dr) / big_n;
    obs.md = static_cast<double>(md) / big_n;
    return obs;
}

// Instance dump: little-endian binary
//   char[8]  magic "AMPINST1"
//   u64      n, N, seed, echo_length
//   char[]   config echo (echo_length bytes, no terminator)
//   f64      A (row-major, n*N), x_o (N), w (n), y (n)
namespace dump {

inline constexpr char magic[8] = {'A', 'M', 'P', 'I', 'N', 'S', 'T', '1'};

static_assert(std::endian::native == std::endian::little, "instance dumps assume a little-endian host");

inline void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

inline std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

} // namespace dump

inline void write_instance(const std::string& path, const ProblemInstance& inst, const std::string& config_echo) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("write_instance: cannot open " + path);
    os.write(dump::magic, sizeof dump::magic);
    dump::write_u64(os, static_cast<std::uint64_t>(inst.rows()));
    dump::write_u64(os, static_cast<std::uint64_t>(inst.cols()));
    dump::write_u64(os, inst.seed);
    dump::write_u64(os, config_echo.size());
    os.write(config_echo.data(), static_cast<std::streamsize>(config_echo.size()));
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> a_rows = inst.A;
    os.write(reinterpret_cast<const char*>(a_rows.data()), static_cast<std::streamsize>(a_rows.size() * sizeof(double)));
    for (const Eigen::VectorXd* v : {&inst.x_o, &inst.w, &inst.y}) {
        os.write(reinterpret_cast<const char*>(v->data()), static_cast<std::streamsize>(v->size() * sizeof(double)));
    }
    if (!os) throw ConfigError("write_instance: write failed for " + path);
}

inline std::pair<ProblemInstance, std::string> read_instance(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("read_instance: cannot open " + path);
    char magic[8] = {};
    is.read(magic, sizeof magic);
    if (!std::equal(std::begin(magic), std::end(magic), std::begin(dump::magic))) {
        throw ConfigError("read_instance: bad magic in " + path);
    }
    const auto n = static_cast<Eigen::Index>(dump::read_u64(is));
    const auto big_n = static_cast<Eigen::Index>(dump::read_u64(is));
    ProblemInstance inst;
    inst.seed = dump::read_u64(is);
    std::string echo(dump::read_u64(is), '\0');
    is.read(echo.data(), static_cast<std::streamsize>(echo.size()));
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> a_rows(n, big_n);
    is.read(reinterpret_cast<char*>(a_rows.data()), static_cast<std::streamsize>(a_rows.size() * sizeof(double)));
    inst.A = a_rows;
    inst.x_o.resize(big_n);
    inst.w.resize(n);
    inst.y.resize(n);
    for (Eigen::VectorXd* v : {&inst.x_o, &inst.w, &inst.y}) {
        is.read(reinterpret_cast<char*>(v->data()), static_cast<std::streamsize>(v->size() * sizeof(double)));
    }
    if (!is) throw ConfigError("read_instance: truncated file " + path);
    return {std::move(inst), std::move(echo)};
}

} // namespace amplasso
