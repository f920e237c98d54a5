#include "support/oracles.hpp"

#include <ridge/testbed.hpp>
#include <ridge/varpro.hpp>

#include <gtest/gtest.h>

#include <cmath>

using ridge::BasisFamily;
using ridge::Subspace;

namespace
{
    struct Instance
    {
        ridge::ProjectedProblem problem;
        Subspace u;
    };

    Instance random_instance(oracle::Gen &gen, ridge::Index samples, ridge::Index max_m, int max_n, int max_p)
    {
        const int n = gen.integer(1, max_n);
        const int p = gen.integer(1, max_p);
        const ridge::Index m = gen.integer(n + 1, static_cast<int>(std::max<ridge::Index>(n + 1, max_m)));
        const Eigen::MatrixXd x = gen.matrix(samples, m);
        const Eigen::VectorXd f = gen.vector(samples);
        return {ridge::ProjectedProblem(x, f, p, gen.family()), gen.subspace(m, n)};
    }
}

TEST(ProjectedProblem, ValidatesInputs)
{
    EXPECT_THROW(ridge::ProjectedProblem(Eigen::MatrixXd(0, 3), Eigen::VectorXd(0), 2), std::invalid_argument);
    EXPECT_THROW(ridge::ProjectedProblem(Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(3), 2),
                 std::invalid_argument);
    EXPECT_THROW(ridge::ProjectedProblem(Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(4), -1),
                 std::invalid_argument);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(4);
    f(2) = INFINITY;
    EXPECT_THROW(ridge::ProjectedProblem(Eigen::MatrixXd::Zero(4, 3), f, 2), std::invalid_argument);
}

TEST(SolveCoefficients, ConstantDataIsReproducedExactly)
{
    oracle::Gen gen(1);
    for(BasisFamily family : {BasisFamily::monomial, BasisFamily::legendre, BasisFamily::hermite})
        for(int p = 0; p <= 4; ++p)
        {
            const Eigen::MatrixXd x = gen.matrix(30, 5);
            const ridge::ProjectedProblem problem(x, Eigen::VectorXd::Constant(30, 5.0), p, family);
            const ridge::VarproState state = ridge::solve_coefficients(problem, gen.subspace(5, 2));
            EXPECT_LE(state.residual_norm(), 1e-12);
            EXPECT_LE(((state.design.values * state.coefficients).array() - 5.0).abs().maxCoeff(), 1e-12);
        }
}

TEST(SolveCoefficients, ExactRidgePolynomialHasZeroResidual)
{
    oracle::Gen gen(2);
    const Subspace u = gen.subspace(6, 2);
    const Eigen::MatrixXd x = gen.matrix(80, 6);
    const Eigen::MatrixXd y = x * u.basis();
    const Eigen::VectorXd f = (y.col(0).array().cube() - 2.0 * y.col(0).array() * y.col(1).array() + 0.5).matrix();
    const ridge::ProjectedProblem problem(x, f, 3);
    EXPECT_LE(ridge::solve_coefficients(problem, u).residual_norm() / f.norm(), 1e-10);
}

TEST(SolveCoefficients, CubicRidgeAtTrueSubspace)
{
    const ridge::TestFunction fn = ridge::cubic_ridge_function();
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd x = fn.sample(1000, rng);
    const Eigen::VectorXd f = fn.evaluate_rows(x);
    const ridge::ProjectedProblem problem(x, f, 3);
    EXPECT_LE(ridge::solve_coefficients(problem, *fn.true_subspace).residual_norm() / f.norm(), 1e-12);
}

TEST(SolveCoefficients, UnderdeterminedIsFlaggedNotFatal)
{
    oracle::Gen gen(4);
    const ridge::ProjectedProblem problem(gen.matrix(4, 3), gen.vector(4), 3);
    const ridge::VarproState state = ridge::solve_coefficients(problem, gen.subspace(3, 2));
    EXPECT_TRUE(state.underdetermined());
    EXPECT_LE(state.rank, 4);
    EXPECT_LE(state.residual_norm(), 1e-10);
}

TEST(SolveCoefficients, PropertyNormalEquationsAndOptimality)
{
    oracle::Gen gen(5);
    for(int trial = 0; trial < 50; ++trial)
    {
        const Instance inst = random_instance(gen, 40, 6, 3, 4);
        const ridge::VarproState state = ridge::solve_coefficients(inst.problem, inst.u);
        const Eigen::MatrixXd &v = state.design.values;
        EXPECT_LE((v.transpose() * state.residual).cwiseAbs().maxCoeff(),
                  1e-8 * inst.problem.values().norm() * std::max(1.0, v.norm()));
        EXPECT_LE((inst.problem.values() - v * state.coefficients - state.residual).norm(), 1e-12 * (1 + v.norm()));

        const double best = state.residual_norm();
        for(int k = 0; k < 20; ++k)
        {
            Eigen::VectorXd delta = gen.vector(state.coefficients.size());
            delta *= 1e-3 / delta.norm();
            const double perturbed = (inst.problem.values() - v * (state.coefficients + delta)).norm();
            EXPECT_GT(perturbed, best);
        }
    }
}

TEST(Jacobian, MatchesCentralDifferencesOnSmallProblem)
{
    oracle::Gen gen(6);
    const Eigen::MatrixXd x = gen.matrix(5, 3);
    const ridge::ProjectedProblem problem(x, gen.vector(5), 1);
    const Subspace u = gen.subspace(3, 2);
    const ridge::VarproState state = ridge::solve_coefficients(problem, u);
    const ridge::JacobianTensor jac = ridge::jacobian(problem, state);
    const Eigen::MatrixXd fd = oracle::jacobian_fd(problem, u.basis(), state.design.affine, 1e-6);
    EXPECT_LE(oracle::relative_error(jac.flat(), fd), 1e-5);
}

TEST(Jacobian, PropertyMatchesCentralDifferences)
{
    oracle::Gen gen(7);
    for(int trial = 0; trial < 30; ++trial)
    {
        const Instance inst = random_instance(gen, gen.integer(20, 50), 6, 2, 3);
        const ridge::VarproState state = ridge::solve_coefficients(inst.problem, inst.u);
        const ridge::JacobianTensor jac = ridge::jacobian(inst.problem, state);
        const Eigen::MatrixXd fd = oracle::jacobian_fd(inst.problem, inst.u.basis(), state.design.affine, 1e-6);
        EXPECT_LE(oracle::relative_error(jac.flat(), fd), 1e-5) << "trial " << trial;
    }
}

TEST(Jacobian, SliceAccessorsAgree)
{
    oracle::Gen gen(8);
    const Instance inst = random_instance(gen, 20, 5, 2, 2);
    const ridge::VarproState state = ridge::solve_coefficients(inst.problem, inst.u);
    const ridge::JacobianTensor jac = ridge::jacobian(inst.problem, state);
    for(ridge::Index i = 0; i < jac.samples(); ++i)
    {
        const Eigen::MatrixXd slice = jac.slice(i);
        for(ridge::Index j = 0; j < jac.ambient_dimension(); ++j)
            for(ridge::Index k = 0; k < jac.dimension(); ++k)
                EXPECT_EQ(slice(j, k), jac(i, j, k));
    }
}

TEST(Jacobian, PropertyOrthogonalToSubspaceAndNullspace)
{
    oracle::Gen gen(9);
    for(BasisFamily family : {BasisFamily::monomial, BasisFamily::legendre, BasisFamily::hermite})
        for(int n = 1; n <= 3; ++n)
            for(int p = 1; p <= 5; ++p)
            {
                const ridge::Index m = n + gen.integer(1, 4);
                const ridge::ProjectedProblem problem(gen.matrix(100, m), gen.vector(100), p, family);
                const Subspace u = gen.subspace(m, n);
                const ridge::VarproState state = ridge::solve_coefficients(problem, u);
                const ridge::JacobianTensor jac = ridge::jacobian(problem, state);
                const double total = jac.flat().norm();

                double worst = 0.0;
                for(ridge::Index i = 0; i < jac.samples(); ++i)
                    worst = std::max(worst, (u.basis().transpose() * jac.slice(i)).norm());
                EXPECT_LE(worst, 1e-8 * total) << to_string(family) << " n=" << n << " p=" << p;

                // vec(U S) lies in the nullspace for every n x n S.
                const Eigen::MatrixXd s = gen.matrix(n, n);
                const Eigen::MatrixXd us = u.basis() * s;
                const Eigen::Map<const Eigen::VectorXd> vec(us.data(), us.size());
                EXPECT_LE((jac.flat() * vec).norm(), 1e-8 * total * s.norm());
            }
}

TEST(Jacobian, RankZeroDesignThrows)
{
    const ridge::ProjectedProblem problem(Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(3), 0);
    ridge::VarproState state = ridge::solve_coefficients(problem, Subspace(Eigen::MatrixXd::Identity(2, 1)));
    state.rank = 0;
    EXPECT_THROW(ridge::jacobian(problem, state), std::runtime_error);
}

TEST(Gradient, ZeroResidualGivesZeroGradient)
{
    oracle::Gen gen(10);
    const Instance inst = random_instance(gen, 30, 5, 2, 3);
    const ridge::VarproState state = ridge::solve_coefficients(inst.problem, inst.u);
    const ridge::JacobianTensor jac = ridge::jacobian(inst.problem, state);
    EXPECT_EQ(ridge::gradient(jac, Eigen::VectorXd::Zero(jac.samples())).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(ridge::gradient(jac, Eigen::VectorXd::Zero(jac.samples() + 1)), std::invalid_argument);
}

TEST(Gradient, VanishesAtTrueSubspaceOfExactRidge)
{
    const ridge::TestFunction fn = ridge::cubic_ridge_function();
    std::mt19937_64 rng(11);
    const Eigen::MatrixXd x = fn.sample(300, rng);
    const ridge::ProjectedProblem problem(x, fn.evaluate_rows(x), 3);
    const ridge::VarproState state = ridge::solve_coefficients(problem, *fn.true_subspace);
    const Eigen::MatrixXd g = ridge::gradient(ridge::jacobian(problem, state), state.residual);
    EXPECT_LE(g.norm(), 1e-10);
}

TEST(Gradient, PropertyTangentAndMatchesFiniteDifferences)
{
    oracle::Gen gen(12);
    for(int trial = 0; trial < 40; ++trial)
    {
        const Instance inst = random_instance(gen, 60, 6, 3, 4);
        const ridge::VarproState state = ridge::solve_coefficients(inst.problem, inst.u);
        const Eigen::MatrixXd g = ridge::gradient(ridge::jacobian(inst.problem, state), state.residual);
        EXPECT_LE((inst.u.basis().transpose() * g).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + g.norm()));
        const Eigen::MatrixXd fd = oracle::gradient_fd(inst.problem, inst.u.basis(), state.design.affine, 1e-6);
        EXPECT_LE(oracle::relative_error(g, fd), 1e-4) << "trial " << trial;
    }
}
