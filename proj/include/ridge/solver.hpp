/// ridge/solver.hpp
///
/// Outer optimizers for polynomial ridge approximation: variable-projection
/// Gauss-Newton on the Grassmann manifold with geodesic Armijo backtracking,
/// and the alternating baseline that interleaves coefficient solves with
/// steepest descent on U.

#ifndef RIDGE_SOLVER_HPP_
#define RIDGE_SOLVER_HPP_

#include "basis.hpp"
#include "grassmann.hpp"
#include "vandermonde.hpp"
#include "varpro.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ridge
{
    struct SolverConfig
    {
        double gamma = 0.5;                 ///< backtracking reduction factor, (0, 1)
        double beta = 1e-6;                 ///< Armijo tolerance, (0, 1)
        int max_iter = 200;
        int max_backtracks = 40;
        double tol_residual_change = 1e-12; ///< relative to ||f||
        double tol_grad = 1e-10;            ///< relative to 1 + ||f||
        double tol_subspace = 1e-9;         ///< radians, largest principal angle moved by a step
        std::uint64_t seed = 0;
        int restarts = 1;
        int inner_steps = 100;              ///< steepest-descent steps per alternating iteration
        /// Stop as soon as ||r|| / ||f|| drops to this level (timing studies).
        std::optional<double> target_residual;

        void validate() const
        {
            if(!(gamma > 0.0 && gamma < 1.0))
                throw std::invalid_argument("SolverConfig: gamma must lie in (0, 1)");
            if(!(beta > 0.0 && beta < 1.0))
                throw std::invalid_argument("SolverConfig: beta must lie in (0, 1)");
            if(max_iter < 1 || max_backtracks < 1 || restarts < 1 || inner_steps < 1)
                throw std::invalid_argument("SolverConfig: iteration counts must be positive");
            if(tol_residual_change < 0.0 || tol_grad < 0.0 || tol_subspace < 0.0)
                throw std::invalid_argument("SolverConfig: tolerances must be non-negative");
        }
    };

    enum class FitStatus
    {
        converged_residual,
        converged_gradient,
        converged_subspace,
        max_iterations,
        line_search_failure
    };

    inline std::string_view to_string(FitStatus status)
    {
        switch(status)
        {
        case FitStatus::converged_residual: return "converged_residual";
        case FitStatus::converged_gradient: return "converged_gradient";
        case FitStatus::converged_subspace: return "converged_subspace";
        case FitStatus::max_iterations: return "max_iterations";
        case FitStatus::line_search_failure: return "line_search_failure";
        }
        return "unknown";
    }

    /// One visited iterate. The step fields describe the move away from it
    /// and stay zero for the final iterate.
    struct IterationRecord
    {
        double residual_norm = 0.0;
        double grad_norm = 0.0;
        double step = 0.0;
        bool fell_back_to_gradient = false;
        double angle_moved = 0.0;
        int backtracks = 0;
    };

    struct FitReport
    {
        std::string solver;
        std::vector<IterationRecord> iterations;
        FitStatus status = FitStatus::max_iterations;
        double wall_time = 0.0; ///< seconds, all restarts
        int restart = 0;        ///< index of the restart that was kept
        double values_norm = 0.0;

        /// Accepted steps, i.e. iterates visited minus one.
        int steps() const { return iterations.empty() ? 0 : static_cast<int>(iterations.size()) - 1; }
        double final_residual() const { return iterations.empty() ? 0.0 : iterations.back().residual_norm; }

        /// First iterate whose normalized residual is <= level, if any.
        std::optional<int> first_iteration_below(double level) const
        {
            for(std::size_t i = 0; i < iterations.size(); ++i)
                if(iterations[i].residual_norm <= level * values_norm)
                    return static_cast<int>(i);
            return std::nullopt;
        }
    };

    struct RidgeModel
    {
        Index m = 0;
        Index n = 0;
        int p = 0;
        BasisFamily family = BasisFamily::legendre;
        Subspace subspace;
        AffineMap affine;
        Eigen::VectorXd coefficients;
        double training_residual_norm = 0.0;

        static RidgeModel from_state(const VarproState &state, int degree)
        {
            return {state.subspace.ambient_dimension(), state.subspace.dimension(), degree, state.design.family,
                    state.subspace, state.design.affine, state.coefficients, state.residual_norm()};
        }
    };

    struct FitResult
    {
        RidgeModel model;
        FitReport report;
    };

    /// g(U^T x) for every row of points.
    inline Eigen::VectorXd evaluate_model(const RidgeModel &model, const Eigen::Ref<const Eigen::MatrixXd> &points)
    {
        if(points.cols() != model.m)
            throw std::invalid_argument("evaluate_model: points have " + std::to_string(points.cols()) +
                                        " columns, model expects " + std::to_string(model.m));
        if(points.rows() == 0)
            return Eigen::VectorXd(0);
        const IndexSet index_set(static_cast<int>(model.n), model.p);
        return build_design(points, model.subspace, index_set, model.family, model.affine).values * model.coefficients;
    }

    /// g(y) evaluated directly at projected coordinates y = U^T x, one per row.
    inline Eigen::VectorXd evaluate_profile(const RidgeModel &model, const Eigen::Ref<const Eigen::MatrixXd> &projected)
    {
        if(projected.cols() != model.n)
            throw std::invalid_argument("evaluate_profile: coordinates have " + std::to_string(projected.cols()) +
                                        " columns, model expects " + std::to_string(model.n));
        if(projected.rows() == 0)
            return Eigen::VectorXd(0);
        const IndexSet index_set(static_cast<int>(model.n), model.p);
        const Subspace identity(Eigen::MatrixXd::Identity(model.n, model.n));
        return build_design(projected, identity, index_set, model.family, model.affine).values * model.coefficients;
    }

    /// Gauss-Newton direction vec(Delta) = -J^+ r from the thin SVD of the
    /// flattened Jacobian, keeping at most mn - n^2 triplets and dropping
    /// singular values below 1e-12 sigma_1. The n^2-dimensional nullspace of
    /// J keeps Delta tangent without an explicit projection.
    inline TangentDirection gauss_newton_step(const ProjectedProblem &problem, const VarproState &state,
                                              const JacobianTensor &jac)
    {
        const Index m = jac.ambient_dimension();
        const Index n = jac.dimension();
        if(state.residual.size() != jac.samples() || problem.samples() != jac.samples())
            throw std::invalid_argument("gauss_newton_step: state and Jacobian disagree");

        Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(m, n);
        if(state.residual.isZero(0.0))
            return {delta};

        Eigen::BDCSVD<Eigen::MatrixXd> svd(jac.flat(), Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd &sigma = svd.singularValues();
        if(sigma.size() == 0 || sigma(0) == 0.0)
            return {delta};

        const Index cap = std::min<Index>(m * n - n * n, sigma.size());
        Index keep = 0;
        while(keep < cap && sigma(keep) > 1e-12 * sigma(0))
            ++keep;

        const Eigen::VectorXd projected = svd.matrixU().leftCols(keep).transpose() * state.residual;
        const Eigen::VectorXd step = -svd.matrixV().leftCols(keep) * projected.cwiseQuotient(sigma.head(keep));
        delta = Eigen::Map<const Eigen::MatrixXd>(step.data(), m, n);
        return {delta};
    }

    namespace detail
    {
        struct LineSearchOutcome
        {
            bool accepted = false;
            double step = 0.0;
            int backtracks = 0;
            double residual_norm = 0.0;
            Subspace subspace;
        };

        /// Backtracking along the geodesic with t = t0, t0 gamma, t0 gamma^2, ...
        /// accepting the first t with ||r_+|| <= ||r|| + slope * beta * t.
        /// residual_at(U) returns ||r|| at a trial subspace.
        template<typename ResidualAt>
        LineSearchOutcome geodesic_armijo(const Subspace &start, const TangentDirection &direction, double slope,
                                          double residual_norm, double initial_step, const SolverConfig &config,
                                          ResidualAt &&residual_at)
        {
            const Geodesic path(start, direction);
            double t = initial_step;
            for(int k = 0; k < config.max_backtracks; ++k, t *= config.gamma)
            {
                Subspace trial = path.at(t);
                const double trial_norm = residual_at(trial);
                if(std::isfinite(trial_norm) && trial_norm <= residual_norm + slope * config.beta * t)
                    return {true, t, k, trial_norm, std::move(trial)};
            }
            return {false, 0.0, config.max_backtracks, residual_norm, start};
        }

        inline double inner_product(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b)
        {
            return (a.array() * b.array()).sum();
        }

        inline std::mt19937_64 restart_generator(std::uint64_t seed, int restart)
        {
            std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(restart)};
            return std::mt19937_64(seq);
        }

        inline void check_fit_inputs(const ProjectedProblem &problem, Index n, const SolverConfig &config)
        {
            config.validate();
            const Index m = problem.ambient_dimension();
            if(n < 1 || n > m)
                throw std::invalid_argument("subspace dimension must satisfy 1 <= n <= m (m = " + std::to_string(m) +
                                            ", n = " + std::to_string(n) + ")");
            if(problem.degree() == 1 && n > 1)
                throw std::invalid_argument("infeasible ridge problem: degree p = 1 requires dimension n = 1, since "
                                            "a linear polynomial of U^T x is a ridge function of a single direction");
        }

        /// Bookkeeping shared by both solvers: termination tests run once
        /// per visited iterate, after its residual and gradient are known.
        class Termination
        {
        public:
            Termination(const SolverConfig &config, double values_norm)
                : _config(config), _values_norm(values_norm)
            { }

            /// Returns a status if the iterate just appended to the trace ends the run.
            std::optional<FitStatus> check(const std::vector<IterationRecord> &trace) const
            {
                const IterationRecord &current = trace.back();
                if(_config.target_residual && current.residual_norm <= *_config.target_residual * _values_norm)
                    return FitStatus::converged_residual;
                if(current.grad_norm <= _config.tol_grad * (1.0 + _values_norm))
                    return FitStatus::converged_gradient;
                if(trace.size() >= 2)
                {
                    const IterationRecord &previous = trace[trace.size() - 2];
                    if(previous.residual_norm - current.residual_norm <= _config.tol_residual_change * _values_norm)
                        return FitStatus::converged_residual;
                    if(previous.angle_moved <= _config.tol_subspace)
                        return FitStatus::converged_subspace;
                }
                if(static_cast<int>(trace.size()) > _config.max_iter)
                    return FitStatus::max_iterations;
                return std::nullopt;
            }

            /// A failed line search is reported as convergence when even the
            /// first-order predicted change in ||r|| over a unit step is below
            /// the residual-change tolerance.
            FitStatus failed_search(double slope, double residual_norm) const
            {
                if(residual_norm == 0.0 || std::abs(slope) / residual_norm <= _config.tol_residual_change * _values_norm)
                    return FitStatus::converged_residual;
                return FitStatus::line_search_failure;
            }

        private:
            const SolverConfig &_config;
            double _values_norm;
        };

        template<typename SingleRun>
        FitResult best_of_restarts(const ProjectedProblem &problem, Index n, const SolverConfig &config,
                                   std::string_view name, SingleRun &&run)
        {
            check_fit_inputs(problem, n, config);
            const auto started = std::chrono::steady_clock::now();

            std::optional<FitResult> best;
            for(int restart = 0; restart < config.restarts; ++restart)
            {
                std::mt19937_64 rng = restart_generator(config.seed, restart);
                const Subspace initial = random_subspace(problem.ambient_dimension(), n, rng);
                FitResult result = run(initial);
                result.report.restart = restart;
                if(!best || result.model.training_residual_norm < best->model.training_residual_norm)
                    best = std::move(result);
            }
            best->report.solver = std::string(name);
            best->report.values_norm = problem.values().norm();
            best->report.wall_time =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
            return std::move(*best);
        }
    }

    /// Gauss-Newton from one given starting subspace.
    inline FitResult fit_gauss_newton_from(const ProjectedProblem &problem, const Subspace &initial,
                                           const SolverConfig &config)
    {
        const double values_norm = problem.values().norm();
        detail::Termination termination(config, values_norm);

        FitResult result;
        FitReport &report = result.report;
        VarproState state = solve_coefficients(problem, initial);

        while(true)
        {
            const JacobianTensor jac = jacobian(problem, state);
            const Eigen::MatrixXd grad = gradient(jac, state.residual);
            const double residual_norm = state.residual_norm();
            report.iterations.push_back({residual_norm, grad.norm()});
            if(auto status = termination.check(report.iterations))
            {
                report.status = *status;
                break;
            }

            TangentDirection direction = gauss_newton_step(problem, state, jac);
            double slope = detail::inner_product(grad, direction.delta);
            bool fell_back = false;
            if(slope >= 0.0)
            {
                // Not a descent direction.
                direction.delta = -grad;
                slope = detail::inner_product(grad, direction.delta);
                fell_back = true;
            }

            std::optional<VarproState> trial_state;
            auto outcome = detail::geodesic_armijo(state.subspace, direction, slope, residual_norm, 1.0, config,
                                                   [&](const Subspace &trial) {
                                                       trial_state = solve_coefficients(problem, trial);
                                                       return trial_state->residual_norm();
                                                   });
            IterationRecord &record = report.iterations.back();
            record.fell_back_to_gradient = fell_back;
            record.backtracks = outcome.backtracks;
            if(!outcome.accepted)
            {
                report.status = termination.failed_search(slope, residual_norm);
                break;
            }
            record.step = outcome.step;
            record.angle_moved = subspace_angle(state.subspace, outcome.subspace);
            state = std::move(*trial_state);
        }

        report.values_norm = values_norm;
        result.model = RidgeModel::from_state(state, problem.degree());
        return result;
    }

    /// Variable-projection Gauss-Newton ridge fit; with restarts > 1 the
    /// restart with the smallest residual is returned.
    inline FitResult fit_gauss_newton(const ProjectedProblem &problem, Index n, const SolverConfig &config = {})
    {
        return detail::best_of_restarts(problem, n, config, "gauss-newton", [&](const Subspace &initial) {
            return fit_gauss_newton_from(problem, initial, config);
        });
    }

    /// Residual f - V(U) c and gradient of 1/2 ||f - V(U) c||^2 with c and
    /// the affine map held fixed. With c = V^+ f this gradient coincides with
    /// the variable-projection gradient.
    struct FixedCoefficientEvaluation
    {
        Eigen::VectorXd residual;
        Eigen::MatrixXd gradient;
    };

    inline FixedCoefficientEvaluation fixed_coefficient_gradient(const ProjectedProblem &problem, const Subspace &subspace,
                                                                 const IndexSet &index_set, const AffineMap &affine,
                                                                 const Eigen::VectorXd &coefficients)
    {
        const Eigen::MatrixXd &x = problem.points();
        FixedCoefficientEvaluation eval;
        eval.residual = problem.values() -
                        build_design(x, subspace, index_set, problem.family(), affine).values * coefficients;
        const DesignDerivative deriv = build_design_derivative(x, subspace, index_set, problem.family(), affine);
        eval.gradient.resize(x.cols(), subspace.dimension());
        for(Index l = 0; l < subspace.dimension(); ++l)
            eval.gradient.col(l) = -x.transpose() * eval.residual.cwiseProduct(deriv.coordinate(l) * coefficients);
        return eval;
    }

    /// Alternating baseline from one given starting subspace: c <- V(U)^+ f,
    /// then inner_steps of Grassmann steepest descent on 1/2 ||f - V(U) c||^2
    /// with c fixed, using the same geodesic Armijo search as Gauss-Newton.
    inline FitResult fit_alternating_from(const ProjectedProblem &problem, const Subspace &initial,
                                          const SolverConfig &config)
    {
        const double values_norm = problem.values().norm();
        detail::Termination termination(config, values_norm);

        FitResult result;
        FitReport &report = result.report;
        VarproState state = solve_coefficients(problem, initial);
        double initial_step = 1.0;

        while(true)
        {
            const IndexSet &index_set = state.design.index_set;
            const AffineMap &affine = state.design.affine;
            const Eigen::VectorXd &c = state.coefficients;

            FixedCoefficientEvaluation eval = fixed_coefficient_gradient(problem, state.subspace, index_set, affine, c);
            const double residual_norm = state.residual_norm();
            report.iterations.push_back({residual_norm, eval.gradient.norm()});
            if(auto status = termination.check(report.iterations))
            {
                report.status = *status;
                break;
            }

            Subspace current = state.subspace;
            double current_norm = eval.residual.norm();
            double first_slope = 0.0;
            int accepted_steps = 0;
            int backtracks = 0;
            double last_step = 0.0;
            for(int s = 0; s < config.inner_steps; ++s)
            {
                if(s > 0)
                    eval = fixed_coefficient_gradient(problem, current, index_set, affine, c);
                TangentDirection direction = tangent_project(current, -eval.gradient);
                const double slope = -direction.delta.squaredNorm();
                if(s == 0)
                    first_slope = slope;
                if(std::sqrt(-slope) <= config.tol_grad * (1.0 + values_norm))
                    break;

                auto outcome = detail::geodesic_armijo(current, direction, slope, current_norm, initial_step, config,
                                                       [&](const Subspace &trial) {
                                                           const Eigen::VectorXd fitted =
                                                               build_design(problem.points(), trial, index_set,
                                                                            problem.family(), affine)
                                                                   .values *
                                                               c;
                                                           return (problem.values() - fitted).norm();
                                                       });
                backtracks += outcome.backtracks;
                if(!outcome.accepted)
                    break;
                ++accepted_steps;
                current = std::move(outcome.subspace);
                current_norm = outcome.residual_norm;
                last_step = outcome.step;
                initial_step = std::min(1.0, outcome.step / config.gamma);
            }

            IterationRecord &record = report.iterations.back();
            record.fell_back_to_gradient = true;
            record.backtracks = backtracks;
            if(accepted_steps == 0)
            {
                report.status = termination.failed_search(first_slope, residual_norm);
                break;
            }
            record.step = last_step;
            record.angle_moved = subspace_angle(state.subspace, current);
            state = solve_coefficients(problem, current);
        }

        report.values_norm = values_norm;
        result.model = RidgeModel::from_state(state, problem.degree());
        return result;
    }

    inline FitResult fit_alternating(const ProjectedProblem &problem, Index n, const SolverConfig &config = {})
    {
        return detail::best_of_restarts(problem, n, config, "alternating", [&](const Subspace &initial) {
            return fit_alternating_from(problem, initial, config);
        });
    }
}

#endif
