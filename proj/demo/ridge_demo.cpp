// Fits a two-dimensional cubic ridge to samples of a ten-dimensional function
// and compares the recovered subspace with the true one.

#include <ridge/solver.hpp>
#include <ridge/testbed.hpp>

#include <cmath>
#include <iostream>
#include <random>

int main()
{
    const ridge::TestFunction fn = ridge::cubic_ridge_function();
    std::mt19937_64 rng(2024);
    const Eigen::MatrixXd x = fn.sample(1000, rng);
    const Eigen::VectorXd f = fn.evaluate_rows(x);

    const ridge::ProjectedProblem problem(x, f, 3);
    ridge::SolverConfig config;
    config.seed = 7;
    config.restarts = 3;
    const ridge::FitResult fit = ridge::fit_gauss_newton(problem, 2, config);

    std::cout << "status:              " << ridge::to_string(fit.report.status) << "\n"
              << "steps:               " << fit.report.steps() << "\n"
              << "normalized residual: " << fit.model.training_residual_norm / f.norm() << "\n"
              << "subspace angle:      " << ridge::subspace_angle(fit.model.subspace, *fn.true_subspace) << " rad\n";

    // Held-out check: the model generalizes because f really is a ridge function.
    const Eigen::MatrixXd test = fn.sample(200, rng);
    const Eigen::VectorXd err = ridge::evaluate_model(fit.model, test) - fn.evaluate_rows(test);
    std::cout << "max test error:      " << err.cwiseAbs().maxCoeff() << "\n";
    return 0;
}
