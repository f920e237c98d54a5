/// ridge/testbed.hpp
///
/// Synthetic quantities of interest with known ridge structure, active
/// subspace estimators (closed form and finite-difference Monte Carlo), and
/// drivers for the convergence, timing, global-minimizer, conditioning and
/// subspace-recovery studies.

#ifndef RIDGE_TESTBED_HPP_
#define RIDGE_TESTBED_HPP_

#include "basis.hpp"
#include "format.hpp"
#include "grassmann.hpp"
#include "solver.hpp"
#include "vandermonde.hpp"
#include "varpro.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ridge
{
    /// Derives an independent 64-bit seed for (stream, index) from a master seed.
    inline std::uint64_t split_seed(std::uint64_t master, std::uint32_t stream, std::uint32_t index)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(master & 0xffffffffu), static_cast<std::uint32_t>(master >> 32),
                          stream, index};
        std::uint32_t out[2];
        seq.generate(out, out + 2);
        return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    }

    /// M points drawn uniformly from [lower, upper]^m, one per row.
    inline Eigen::MatrixXd sample_uniform(Index samples, Index m, double lower, double upper, std::mt19937_64 &rng)
    {
        std::uniform_real_distribution<double> uniform(lower, upper);
        Eigen::MatrixXd x(samples, m);
        for(Index i = 0; i < samples; ++i)
            for(Index j = 0; j < m; ++j)
                x(i, j) = uniform(rng);
        return x;
    }

    struct TestFunction
    {
        std::string name;
        Index m = 0;
        std::vector<std::pair<std::string, double>> parameters;
        std::function<double(const Eigen::Ref<const Eigen::VectorXd> &)> evaluator;
        double lower = -1.0;
        double upper = 1.0;
        std::optional<Subspace> true_subspace;

        double operator()(const Eigen::Ref<const Eigen::VectorXd> &x) const { return evaluator(x); }

        Eigen::VectorXd evaluate_rows(const Eigen::Ref<const Eigen::MatrixXd> &points) const
        {
            Eigen::VectorXd values(points.rows());
            for(Index i = 0; i < points.rows(); ++i)
                values(i) = evaluator(points.row(i).transpose());
            return values;
        }

        Eigen::MatrixXd sample(Index samples, std::mt19937_64 &rng) const
        {
            return sample_uniform(samples, m, lower, upper, rng);
        }
    };

    /// f(x) = (e_1^T x)^2 + (1^T x / 10)^3 + 1 on [-1, 1]^10; ridge on span{e_1, 1}.
    inline TestFunction cubic_ridge_function()
    {
        constexpr Index m = 10;
        Eigen::MatrixXd span = Eigen::MatrixXd::Zero(m, 2);
        span(0, 0) = 1.0;
        span.col(1).setOnes();
        return {"cubic_ridge", m, {}, [](const Eigen::Ref<const Eigen::VectorXd> &x) {
                    const double s = x.sum() / 10.0;
                    return x(0) * x(0) + s * s * s + 1.0;
                },
                -1.0, 1.0, Subspace::from_span(span)};
    }

    /// f_{n,p}(x) = (1^T x)^p + sum_{j<n} (e_j^T x)^{p-1} on [-1, 1]^10.
    inline TestFunction timing_function(int n, int p)
    {
        constexpr Index m = 10;
        if(n < 1 || n > m || p < 1)
            throw std::invalid_argument("timing_function: need 1 <= n <= 10 and p >= 1");
        Eigen::MatrixXd span = Eigen::MatrixXd::Zero(m, n);
        span.col(0).setOnes();
        for(int j = 1; j < n; ++j)
            span(j - 1, j) = 1.0;
        return {"timing", m, {{"n", n}, {"p", p}}, [n, p](const Eigen::Ref<const Eigen::VectorXd> &x) {
                    double value = std::pow(x.sum(), p);
                    for(int j = 0; j < n - 1; ++j)
                        value += std::pow(x(j), p - 1);
                    return value;
                },
                -1.0, 1.0, Subspace::from_span(span)};
    }

    /// f_n(x) = sum_{j<=n} (e_j^T x)^2 on [-1, 1]^10.
    inline TestFunction quadratic_sum_function(int n)
    {
        constexpr Index m = 10;
        if(n < 1 || n > m)
            throw std::invalid_argument("quadratic_sum_function: need 1 <= n <= 10");
        Eigen::MatrixXd span = Eigen::MatrixXd::Identity(m, n);
        return {"quadratic_sum", m, {{"n", n}}, [n](const Eigen::Ref<const Eigen::VectorXd> &x) {
                    return x.head(n).squaredNorm();
                },
                -1.0, 1.0, Subspace(span)};
    }

    /// f(x) = 1/2 (1^T x)^2 + alpha sum_j cos(beta pi x_j) on [-1, 1]^m.
    inline TestFunction oscillatory_function(Index m, double alpha, double beta)
    {
        if(m < 1)
            throw std::invalid_argument("oscillatory_function: need m >= 1");
        return {"oscillatory", m, {{"m", static_cast<double>(m)}, {"alpha", alpha}, {"beta", beta}},
                [alpha, beta](const Eigen::Ref<const Eigen::VectorXd> &x) {
                    const double s = x.sum();
                    return 0.5 * s * s + alpha * (beta * M_PI * x.array()).cos().sum();
                },
                -1.0, 1.0, Subspace(Eigen::MatrixXd::Constant(m, 1, 1.0 / std::sqrt(static_cast<double>(m))))};
    }

    /// f(x) = |u^T x| + 0.1 (sin(1000 x_2) + 1) on [-1, 1]^100 with u uniform on the sphere.
    inline TestFunction toy_function(std::uint64_t seed = 0)
    {
        constexpr Index m = 100;
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd direction(m);
        for(Index i = 0; i < m; ++i)
            direction(i) = normal(rng);
        direction.normalize();
        return {"toy", m, {{"seed", static_cast<double>(seed)}}, [direction](const Eigen::Ref<const Eigen::VectorXd> &x) {
                    return std::abs(direction.dot(x)) + 0.1 * (std::sin(1000.0 * x(1)) + 1.0);
                },
                -1.0, 1.0, Subspace(Eigen::MatrixXd(direction))};
    }

    inline std::vector<TestFunction> builtin_functions()
    {
        return {cubic_ridge_function(), timing_function(2, 3), quadratic_sum_function(2),
                oscillatory_function(100, 0.02, 1.0), toy_function()};
    }

    struct ClosedFormActiveSubspace
    {
        Eigen::MatrixXd c;
        Eigen::VectorXd leading_eigenvector;
        double leading_eigenvalue = 0.0;
        double second_eigenvalue = 0.0;
    };

    /// C = 1 1^T + (alpha beta pi)^2 I for the oscillatory function.
    inline ClosedFormActiveSubspace active_subspace_closed_form(Index m, double alpha, double beta)
    {
        if(m < 1)
            throw std::invalid_argument("active_subspace_closed_form: need m >= 1");
        if(!(alpha > 0.0))
            throw std::invalid_argument("active_subspace_closed_form: need alpha > 0");
        if(beta < 1.0 || beta != std::floor(beta))
            throw std::invalid_argument("active_subspace_closed_form: beta must be a positive integer");

        const double noise = std::pow(alpha * beta * M_PI, 2);
        ClosedFormActiveSubspace out;
        out.c = Eigen::MatrixXd::Ones(m, m) + noise * Eigen::MatrixXd::Identity(m, m);
        out.leading_eigenvector = Eigen::VectorXd::Constant(m, 1.0 / std::sqrt(static_cast<double>(m)));
        out.leading_eigenvalue = static_cast<double>(m) + noise;
        out.second_eigenvalue = noise;
        return out;
    }

    struct MonteCarloActiveSubspace
    {
        Subspace subspace;
        Index evaluations = 0;
    };

    /// Leading eigenvector of (1/L) sum_i g_i g_i^T with one-sided finite
    /// difference gradients g_i at L uniform points; costs L (m + 1) evaluations.
    inline MonteCarloActiveSubspace active_subspace_monte_carlo(const TestFunction &fn, Index samples, double step,
                                                                std::uint64_t seed)
    {
        if(samples < 1)
            throw std::invalid_argument("active_subspace_monte_carlo: need at least one sample");
        if(!(step > 0.0))
            throw std::invalid_argument("active_subspace_monte_carlo: finite-difference step must be positive");

        std::mt19937_64 rng(seed);
        const Eigen::MatrixXd points = fn.sample(samples, rng);
        Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(fn.m, fn.m);
        Eigen::VectorXd grad(fn.m);
        for(Index i = 0; i < samples; ++i)
        {
            Eigen::VectorXd x = points.row(i).transpose();
            const double base = fn(x);
            for(Index j = 0; j < fn.m; ++j)
            {
                const double saved = x(j);
                x(j) = saved + step;
                grad(j) = (fn(x) - base) / step;
                x(j) = saved;
            }
            outer.noalias() += grad * grad.transpose();
        }
        outer /= static_cast<double>(samples);

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(outer);
        const Eigen::VectorXd leading = eig.eigenvectors().col(fn.m - 1);
        return {Subspace(Eigen::MatrixXd(leading)), samples * (fn.m + 1)};
    }

    // ---------------------------------------------------------------------
    // Experiments

    struct ExperimentConfig
    {
        std::uint64_t seed = 0;
        int replicates = 0;                 ///< 0 selects the experiment's default
        Index samples = 1000;
        double noise = 0.0;                 ///< convergence: std of added Gaussian noise
        int inner_steps = 100;              ///< alternating steepest-descent steps per iteration
        int max_degree = 20;                ///< conditioning
        int dimension = 1;                  ///< conditioning: n = 1 uses U = 1/10, otherwise random
        std::vector<int> dimensions;        ///< global_min / timing n values
        std::vector<int> degrees;           ///< timing p values
        std::vector<int> inner_step_options;///< timing: alternating variants, best time kept
        double alpha = 0.02;
        double beta = 1.0;
        double fd_step = 1e-6;
        std::vector<Index> budgets;         ///< subspace_recovery evaluation budgets, default 101, 202, ..., 1010
        std::vector<std::string> methods;   ///< subspace_recovery: "active_subspace", "ridge"
        double failure_threshold = 1e-6;    ///< global_min: normalized residual counted as success
        SolverConfig solver;
    };

    inline int replicates_or(const ExperimentConfig &config, int fallback)
    {
        return config.replicates > 0 ? config.replicates : fallback;
    }

    struct ConvergenceTrace
    {
        std::string solver;
        int replicate = 0;
        std::vector<double> normalized_residuals;
        FitStatus status = FitStatus::max_iterations;
        double noise_norm = 0.0;
        double values_norm = 0.0;
        double final_residual_norm = 0.0;
    };

    /// Gauss-Newton and alternating fits of n = 2, p = 3 ridges to samples of
    /// the cubic ridge function, one shared data set and matched starting
    /// subspaces per replicate.
    inline std::vector<ConvergenceTrace> convergence_study(const ExperimentConfig &config)
    {
        const TestFunction fn = cubic_ridge_function();
        std::mt19937_64 data_rng(split_seed(config.seed, 1, 0));
        const Eigen::MatrixXd x = fn.sample(config.samples, data_rng);
        Eigen::VectorXd f = fn.evaluate_rows(x);
        Eigen::VectorXd noise = Eigen::VectorXd::Zero(f.size());
        if(config.noise > 0.0)
        {
            std::normal_distribution<double> normal(0.0, config.noise);
            for(Index i = 0; i < noise.size(); ++i)
                noise(i) = normal(data_rng);
            f += noise;
        }
        const ProjectedProblem problem(x, f, 3);

        std::vector<ConvergenceTrace> traces;
        const int replicates = replicates_or(config, 10);
        for(int r = 0; r < replicates; ++r)
        {
            SolverConfig solver = config.solver;
            solver.seed = split_seed(config.seed, 2, static_cast<std::uint32_t>(r));
            solver.restarts = 1;
            solver.inner_steps = config.inner_steps;
            for(int which = 0; which < 2; ++which)
            {
                const FitResult fit = which == 0 ? fit_gauss_newton(problem, 2, solver) : fit_alternating(problem, 2, solver);
                ConvergenceTrace trace{fit.report.solver, r, {}, fit.report.status, noise.norm(), f.norm(),
                                       fit.model.training_residual_norm};
                for(const IterationRecord &it : fit.report.iterations)
                    trace.normalized_residuals.push_back(it.residual_norm / f.norm());
                traces.push_back(std::move(trace));
            }
        }
        return traces;
    }

    struct TimingRow
    {
        std::string solver;
        int n = 0;
        int p = 0;
        int replicate = 0;
        int inner_steps = 0; ///< alternating only
        double seconds = 0.0;
        int steps = 0;
        bool reached = false;
    };

    /// Wall-clock time to reach normalized residual 1e-5 on f_{n,p}.
    inline std::vector<TimingRow> timing_study(const ExperimentConfig &config)
    {
        const std::vector<int> dims = config.dimensions.empty() ? std::vector<int>{1, 2} : config.dimensions;
        const std::vector<int> degrees = config.degrees.empty() ? std::vector<int>{3} : config.degrees;
        const std::vector<int> inner = config.inner_step_options.empty() ? std::vector<int>{1, 10, 100}
                                                                         : config.inner_step_options;
        const int replicates = replicates_or(config, 10);

        std::vector<TimingRow> rows;
        for(int p : degrees)
            for(int n : dims)
            {
                if(p == 1 && n > 1)
                    continue;
                const TestFunction fn = timing_function(n, p);
                std::mt19937_64 data_rng(split_seed(config.seed, 3, static_cast<std::uint32_t>(100 * p + n)));
                const Eigen::MatrixXd x = fn.sample(config.samples, data_rng);
                const ProjectedProblem problem(x, fn.evaluate_rows(x), p);

                for(int r = 0; r < replicates; ++r)
                {
                    SolverConfig solver = config.solver;
                    solver.seed = split_seed(config.seed, 4, static_cast<std::uint32_t>(r));
                    solver.restarts = 1;
                    solver.target_residual = 1e-5;

                    const FitResult gn = fit_gauss_newton(problem, n, solver);
                    rows.push_back({"gauss-newton", n, p, r, 0, gn.report.wall_time, gn.report.steps(),
                                    gn.report.first_iteration_below(1e-5).has_value()});

                    std::optional<TimingRow> best;
                    for(int steps : inner)
                    {
                        solver.inner_steps = steps;
                        const FitResult alt = fit_alternating(problem, n, solver);
                        TimingRow row{"alternating", n, p, r, steps, alt.report.wall_time, alt.report.steps(),
                                      alt.report.first_iteration_below(1e-5).has_value()};
                        const auto better = [](const TimingRow &a, const TimingRow &b) {
                            if(a.reached != b.reached)
                                return a.reached;
                            return a.seconds < b.seconds;
                        };
                        if(!best || better(row, *best))
                            best = row;
                    }
                    rows.push_back(*best);
                }
            }
        return rows;
    }

    struct GlobalMinRow
    {
        int n = 0;
        int replicates = 0;
        int failures = 0;
        double failure_fraction() const { return replicates > 0 ? static_cast<double>(failures) / replicates : 0.0; }
    };

    /// Fraction of random initializations that miss the zero-residual global
    /// minimizer when fitting p = 2 ridges to f_n(x) = sum_{j<=n} x_j^2.
    inline std::vector<GlobalMinRow> global_min_study(const ExperimentConfig &config)
    {
        const std::vector<int> dims = config.dimensions.empty() ? std::vector<int>{1, 2, 3} : config.dimensions;
        const int replicates = replicates_or(config, 100);

        std::vector<GlobalMinRow> rows;
        for(int n : dims)
        {
            const TestFunction fn = quadratic_sum_function(n);
            std::mt19937_64 data_rng(split_seed(config.seed, 5, static_cast<std::uint32_t>(n)));
            const Eigen::MatrixXd x = fn.sample(config.samples, data_rng);
            const ProjectedProblem problem(x, fn.evaluate_rows(x), 2);

            GlobalMinRow row{n, replicates, 0};
            for(int r = 0; r < replicates; ++r)
            {
                SolverConfig solver = config.solver;
                solver.seed = split_seed(config.seed, 6, static_cast<std::uint32_t>(r));
                solver.restarts = 1;
                const FitResult fit = fit_gauss_newton(problem, n, solver);
                if(fit.model.training_residual_norm > config.failure_threshold * problem.values().norm())
                    ++row.failures;
            }
            rows.push_back(row);
        }
        return rows;
    }

    struct ConditioningRow
    {
        std::string basis;
        bool scaled = false;
        int degree = 0;
        double cond = 0.0;
    };

    /// Condition numbers of V(U) for M uniform samples on [0, 1]^100 under
    /// unscaled monomials and scaled monomial, Legendre and Hermite bases.
    inline std::vector<ConditioningRow> conditioning_study(const ExperimentConfig &config)
    {
        constexpr Index m = 100;
        std::mt19937_64 rng(split_seed(config.seed, 7, 0));
        const Eigen::MatrixXd x = sample_uniform(config.samples, m, 0.0, 1.0, rng);
        const Subspace subspace = config.dimension == 1
                                      ? Subspace(Eigen::MatrixXd::Constant(m, 1, 0.1))
                                      : random_subspace(m, config.dimension, rng);
        const Eigen::MatrixXd projections = x * subspace.basis();

        struct Variant
        {
            const char *name;
            BasisFamily family;
            bool scaled;
        };
        const Variant variants[] = {{"monomial", BasisFamily::monomial, false},
                                    {"monomial", BasisFamily::monomial, true},
                                    {"legendre", BasisFamily::legendre, true},
                                    {"hermite", BasisFamily::hermite, true}};

        std::vector<ConditioningRow> rows;
        for(int degree = 1; degree <= config.max_degree; ++degree)
        {
            const IndexSet index_set(config.dimension, degree);
            if(static_cast<Index>(index_set.size()) > config.samples)
                break;
            for(const Variant &v : variants)
            {
                const AffineMap affine = v.scaled ? fit_affine_map(v.family, projections)
                                                  : AffineMap::identity(subspace.dimension());
                const DesignMatrix design = build_design(x, subspace, index_set, v.family, affine);
                rows.push_back({v.name, v.scaled, degree, condition_number(design)});
            }
        }
        return rows;
    }

    struct RecoveryRow
    {
        std::string method;
        Index budget = 0;
        int replicate = 0;
        double angle_degrees = 0.0;
    };

    /// Subspace error against 1/sqrt(m) for the oscillatory function as a
    /// function of the evaluation budget: finite-difference active subspaces
    /// (L = budget / (m + 1) gradients) and n = 1, p = 2 ridge fits (M = budget).
    inline std::vector<RecoveryRow> subspace_recovery_study(const ExperimentConfig &config)
    {
        constexpr Index m = 100;
        const TestFunction fn = oscillatory_function(m, config.alpha, config.beta);
        std::vector<Index> budgets = config.budgets;
        if(budgets.empty())
            for(Index l = 1; l <= 10; ++l)
                budgets.push_back(l * (m + 1));
        const std::vector<std::string> methods =
            config.methods.empty() ? std::vector<std::string>{"active_subspace", "ridge"} : config.methods;
        const int replicates = replicates_or(config, 20);

        std::vector<RecoveryRow> rows;
        for(const std::string &method : methods)
        {
            if(method != "active_subspace" && method != "ridge")
                throw std::invalid_argument("subspace_recovery: unknown method '" + method +
                                            "' (valid: active_subspace, ridge)");
            for(std::size_t b = 0; b < budgets.size(); ++b)
                for(int r = 0; r < replicates; ++r)
                {
                    const std::uint64_t seed =
                        split_seed(config.seed, 8, static_cast<std::uint32_t>(b * 100000 + static_cast<std::size_t>(r)));
                    Subspace estimate;
                    if(method == "active_subspace")
                    {
                        const Index samples = std::max<Index>(1, budgets[b] / (m + 1));
                        estimate = active_subspace_monte_carlo(fn, samples, config.fd_step, seed).subspace;
                    }
                    else
                    {
                        std::mt19937_64 rng(seed);
                        const Eigen::MatrixXd x = fn.sample(budgets[b], rng);
                        const ProjectedProblem problem(x, fn.evaluate_rows(x), 2);
                        SolverConfig solver = config.solver;
                        solver.seed = seed;
                        estimate = fit_gauss_newton(problem, 1, solver).model.subspace;
                    }
                    rows.push_back({method, budgets[b], r, subspace_angle(estimate, *fn.true_subspace) * 180.0 / M_PI});
                }
        }
        return rows;
    }

    /// Tabular experiment output; every row carries the master seed.
    struct ExperimentResult
    {
        std::string name;
        std::uint64_t seed = 0;
        std::vector<std::string> columns;
        std::vector<std::vector<std::string>> rows;

        void write_csv(std::ostream &out) const
        {
            for(std::size_t j = 0; j < columns.size(); ++j)
                out << (j ? "," : "") << columns[j];
            out << ",seed\n";
            for(const auto &row : rows)
            {
                for(std::size_t j = 0; j < row.size(); ++j)
                    out << (j ? "," : "") << row[j];
                out << "," << seed << "\n";
            }
        }
    };

    inline const std::vector<std::string> &experiment_names()
    {
        static const std::vector<std::string> names{"convergence", "timing", "global_min", "conditioning",
                                                    "subspace_recovery"};
        return names;
    }

    inline ExperimentResult run_experiment(std::string_view name, const ExperimentConfig &config)
    {
        ExperimentResult result{std::string(name), config.seed, {}, {}};
        if(name == "convergence")
        {
            result.columns = {"solver", "replicate", "iter", "residual"};
            for(const ConvergenceTrace &trace : convergence_study(config))
                for(std::size_t i = 0; i < trace.normalized_residuals.size(); ++i)
                    result.rows.push_back({trace.solver, std::to_string(trace.replicate), std::to_string(i),
                                           format_double(trace.normalized_residuals[i])});
        }
        else if(name == "timing")
        {
            result.columns = {"solver", "n", "p", "replicate", "inner_steps", "seconds", "steps", "reached"};
            for(const TimingRow &row : timing_study(config))
                result.rows.push_back({row.solver, std::to_string(row.n), std::to_string(row.p),
                                       std::to_string(row.replicate), std::to_string(row.inner_steps),
                                       format_double(row.seconds), std::to_string(row.steps), row.reached ? "1" : "0"});
        }
        else if(name == "global_min")
        {
            result.columns = {"n", "replicates", "failures", "failure_fraction"};
            for(const GlobalMinRow &row : global_min_study(config))
                result.rows.push_back({std::to_string(row.n), std::to_string(row.replicates),
                                       std::to_string(row.failures), format_double(row.failure_fraction())});
        }
        else if(name == "conditioning")
        {
            result.columns = {"basis", "scaled", "degree", "cond"};
            for(const ConditioningRow &row : conditioning_study(config))
                result.rows.push_back({row.basis, row.scaled ? "1" : "0", std::to_string(row.degree),
                                       format_double(row.cond)});
        }
        else if(name == "subspace_recovery")
        {
            result.columns = {"method", "budget", "replicate", "angle_degrees"};
            for(const RecoveryRow &row : subspace_recovery_study(config))
                result.rows.push_back({row.method, std::to_string(row.budget), std::to_string(row.replicate),
                                       format_double(row.angle_degrees)});
        }
        else
        {
            std::string valid;
            for(const std::string &n : experiment_names())
                valid += (valid.empty() ? "" : ", ") + n;
            throw std::invalid_argument("unknown experiment '" + std::string(name) + "' (valid: " + valid + ")");
        }
        return result;
    }
}

#endif
