#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "amplasso/lasso.hpp"
#include "amplasso/problem.hpp"
#include "oracles.hpp"

using namespace amplasso;

namespace {

ProblemInstance small_instance(std::size_t n, std::size_t big_n, std::size_t k, double noise, std::uint64_t seed) {
    InstanceConfig c;
    c.n_rows = n;
    c.n_cols = big_n;
    c.signal = SparseSignal{k, 1.0, true};
    c.noise_variance = noise;
    c.seed = seed;
    return sample_instance(c);
}

} // namespace

TEST(LassoSolve, ScalarClosedForm) {
    for (double a : {0.5, 1.0, -2.0}) {
        for (double y0 : {-3.0, -0.2, 0.0, 0.7, 4.0}) {
            for (double lambda : {0.1, 1.0}) {
                Eigen::MatrixXd A(1, 1);
                A(0, 0) = a;
                Eigen::VectorXd y(1);
                y(0) = y0;
                const double expected = soft_threshold(a * y0, lambda) / (a * a);
                const auto res = lasso_solve(A, y, lambda, {.tol = 1e-13});
                EXPECT_NEAR(res.x_hat(0), expected, 1e-12);
                Eigen::VectorXd exact(1);
                exact(0) = expected;
                EXPECT_LE(kkt_residual(A, y, lambda, exact), 1e-12);
            }
        }
    }
}

TEST(LassoSolve, LargeLambdaGivesZero) {
    const auto inst = small_instance(40, 100, 5, 0.05, 3);
    const double lambda_max = (inst.A.transpose() * inst.y).lpNorm<Eigen::Infinity>();
    for (double factor : {1.0, 1.5}) {
        const auto res = lasso_solve(inst, factor * lambda_max);
        EXPECT_EQ(res.x_hat.squaredNorm(), 0.0);
        EXPECT_TRUE(res.converged);
        EXPECT_EQ(kkt_residual(inst, factor * lambda_max, Eigen::VectorXd::Zero(100)), 0.0);
    }
}

TEST(LassoSolve, AgreesWithCoordinateDescent) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const std::size_t big_n = 60 + 14 * seed;
        const auto inst = small_instance(big_n / 2, big_n, big_n / 10, 0.02, seed);
        const double lambda = 0.05 + 0.01 * static_cast<double>(seed);
        const auto res = lasso_solve(inst, lambda, {.tol = 1e-11});
        ASSERT_TRUE(res.converged) << seed;
        const Eigen::VectorXd cd = oracle::lasso_cd(inst.A, inst.y, lambda);
        const double f_cd = 0.5 * (inst.y - inst.A * cd).squaredNorm() + lambda * cd.lpNorm<1>();
        EXPECT_NEAR(res.objective, f_cd, 1e-8) << seed;
        EXPECT_LE(res.kkt_residual, 1e-11);
    }
}

TEST(LassoSolve, ObjectiveNeverAboveZeroVector) {
    const auto inst = small_instance(80, 200, 30, 0.3, 8);
    for (double lambda : {1e-3, 0.01, 0.1, 1.0, 10.0}) {
        const auto res = lasso_solve(inst, lambda);
        EXPECT_LE(res.objective, 0.5 * inst.y.squaredNorm());
        EXPECT_NEAR(res.objective, lasso_objective(inst.A, inst.y, lambda, res.x_hat), 1e-12);
    }
}

TEST(LassoSolve, ZeroLambdaIsFlagged) {
    const auto inst = small_instance(20, 40, 3, 0.0, 1);
    LassoOptions opts;
    opts.max_iter = 50;
    const auto res = lasso_solve(inst, 0.0, opts);
    EXPECT_TRUE(res.lambda_zero);
    EXPECT_THROW(lasso_solve(inst, -1.0), RangeError);
}

TEST(KktResidual, GrowsWithPerturbation) {
    const auto inst = small_instance(60, 150, 10, 0.05, 4);
    const double lambda = 0.08;
    const auto res = lasso_solve(inst, lambda, {.tol = 1e-12});
    ASSERT_TRUE(res.converged);
    double prev = kkt_residual(inst, lambda, res.x_hat);
    EXPECT_LE(prev, 1e-12);
    Eigen::Index coord = 0;
    res.x_hat.cwiseAbs().maxCoeff(&coord);
    const double sgn = res.x_hat(coord) > 0.0 ? 1.0 : -1.0;
    for (double eps : {1e-9, 1e-7, 1e-5, 1e-3, 1e-1}) {
        Eigen::VectorXd x = res.x_hat;
        x(coord) += sgn * eps;
        const double r = kkt_residual(inst, lambda, x);
        EXPECT_GT(r, prev);
        // Continuity: the violation is Lipschitz in eps with constant ||A^T A||_max / lambda.
        EXPECT_LE(r, 1e-12 + eps * inst.A.col(coord).squaredNorm() * 2.0 / lambda);
        prev = r;
    }
    EXPECT_THROW(kkt_residual(inst, 0.0, res.x_hat), RangeError);
}

TEST(SpectralNorm, MatchesSingularValues) {
    const auto inst = small_instance(50, 120, 0, 0.0, 2);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(inst.A);
    const double top = svd.singularValues()(0);
    EXPECT_NEAR(spectral_norm_sq(inst.A), top * top, 1e-8 * top * top);
}
