// ridge: fit, evaluate and inspect polynomial ridge approximations from CSV data.
//
// Exit codes: 0 success, 1 usage or data error, 2 solver failure.

#include <ridge/io.hpp>
#include <ridge/solver.hpp>
#include <ridge/testbed.hpp>
#include <ridge/varpro.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace
{
    constexpr int exit_ok = 0;
    constexpr int exit_usage = 1;
    constexpr int exit_solver = 2;

    /// Raised for bad flag combinations found after CLI11 parsing.
    struct UsageError : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    ridge::CsvTable load_csv(const std::string &path)
    {
        std::ifstream in(path);
        if(!in)
            throw ridge::DataError(path + ": cannot open file");
        return ridge::read_csv(in, path);
    }

    std::string slurp(const std::string &path)
    {
        std::ifstream in(path);
        if(!in)
            throw ridge::DataError(path + ": cannot open file");
        std::ostringstream buffer;
        buffer << in.rdbuf();
        return buffer.str();
    }

    /// Writes to stdout for "-", otherwise to the named file.
    template<typename Writer>
    void emit(const std::string &path, Writer &&write)
    {
        if(path == "-")
        {
            write(std::cout);
            std::cout.flush();
            return;
        }
        std::ofstream out(path);
        if(!out)
            throw ridge::DataError(path + ": cannot open for writing");
        write(out);
    }

    /// Input points for a model: every column except the target, if present.
    Eigen::MatrixXd model_inputs(const ridge::CsvTable &table, const std::string &target, const ridge::RidgeModel &model,
                                 const std::string &source)
    {
        Eigen::MatrixXd points;
        if(table.find(target) >= 0)
            points = ridge::split_target(table, target, source).points;
        else
            points = table.data;
        if(points.cols() != model.m)
            throw ridge::DataError(source + ": " + std::to_string(points.cols()) + " input columns but the model expects " +
                                   std::to_string(model.m));
        return points;
    }

    struct FitOptions
    {
        std::string input;
        std::string target = "f";
        int dim = 0;
        int degree = -1;
        std::string basis = "legendre";
        std::string solver = "gauss-newton";
        std::optional<std::uint64_t> seed;
        std::string output = "-";
        std::string report;
        ridge::SolverConfig config;
    };

    void write_report(std::ostream &out, const ridge::FitResult &fit, const ridge::Dataset &data, std::uint64_t seed,
                      const FitOptions &options)
    {
        const ridge::FitReport &report = fit.report;
        const double fnorm = data.values.norm();
        out << "solver          " << report.solver << "\n"
            << "status          " << ridge::to_string(report.status) << "\n"
            << "samples         " << data.samples() << " (m = " << fit.model.m << ")\n"
            << "model           n = " << fit.model.n << ", p = " << fit.model.p << ", basis "
            << ridge::to_string(fit.model.family) << "\n"
            << "seed            " << seed << "\n"
            << "restart kept    " << report.restart << " of " << options.config.restarts << "\n"
            << "steps           " << report.steps() << "\n"
            << "residual norm   " << fit.model.training_residual_norm << "\n"
            << "normalized      " << (fnorm > 0 ? fit.model.training_residual_norm / fnorm : 0.0) << "\n"
            << "wall time (s)   " << report.wall_time << "\n\n"
            << "iter  residual/||f||    grad norm        step         angle\n";
        for(std::size_t i = 0; i < report.iterations.size(); ++i)
        {
            const ridge::IterationRecord &it = report.iterations[i];
            out << std::setw(4) << i << "  " << std::scientific << std::setprecision(6) << std::setw(14)
                << (fnorm > 0 ? it.residual_norm / fnorm : 0.0) << "  " << std::setw(14) << it.grad_norm << "  "
                << std::setw(11) << std::setprecision(3) << it.step << "  " << std::setw(11) << it.angle_moved
                << (it.fell_back_to_gradient ? "  (gradient)" : "") << "\n";
        }
        out << std::defaultfloat;
    }

    int run_fit(FitOptions options)
    {
        const std::optional<ridge::BasisFamily> family = ridge::parse_basis_family(options.basis);
        if(!family)
            throw UsageError("--basis must be one of monomial, legendre, hermite");
        if(options.solver != "gauss-newton" && options.solver != "alternating")
            throw UsageError("--solver must be gauss-newton or alternating");

        const ridge::Dataset data = ridge::split_target(load_csv(options.input), options.target, options.input);
        if(data.samples() == 0)
            throw ridge::DataError(options.input + ": no data rows");
        if(data.dimension() == 0)
            throw ridge::DataError(options.input + ": no input columns besides the target");

        const std::uint64_t seed =
            options.seed ? *options.seed
                         : (static_cast<std::uint64_t>(std::random_device{}()) << 32) | std::random_device{}();
        options.config.seed = seed;

        const ridge::ProjectedProblem problem(data.points, data.values, options.degree, *family);
        ridge::FitResult fit;
        try
        {
            fit = options.solver == "alternating" ? ridge::fit_alternating(problem, options.dim, options.config)
                                                  : ridge::fit_gauss_newton(problem, options.dim, options.config);
        }
        catch(const std::invalid_argument &e)
        {
            throw UsageError(e.what());
        }

        ridge::ModelDocument doc{fit.model, {data.samples(), fit.model.training_residual_norm, seed, fit.report.solver}};
        const std::string json = ridge::serialize_model(doc);
        emit(options.output, [&](std::ostream &out) { out << json; });

        if(options.report.empty())
            write_report(std::cerr, fit, data, seed, options);
        else
            emit(options.report, [&](std::ostream &out) { write_report(out, fit, data, seed, options); });

        return fit.report.status == ridge::FitStatus::line_search_failure ? exit_solver : exit_ok;
    }

    int run_predict(const std::string &model_path, const std::string &input, const std::string &target,
                    const std::string &output)
    {
        const ridge::ModelDocument doc = ridge::parse_model(slurp(model_path), model_path);
        const ridge::CsvTable table = load_csv(input);
        if(table.empty())
        {
            emit(output, [](std::ostream &) {});
            return exit_ok;
        }
        const Eigen::MatrixXd points = model_inputs(table, target, doc.model, input);
        const Eigen::VectorXd g = ridge::evaluate_model(doc.model, points);

        std::vector<std::string> columns = table.columns;
        columns.push_back("g");
        Eigen::MatrixXd out(table.data.rows(), table.data.cols() + 1);
        out << table.data, g;
        emit(output, [&](std::ostream &os) { ridge::write_csv(os, columns, out); });
        return exit_ok;
    }

    int run_shadow(const std::string &model_path, const std::string &input, const std::string &target,
                   const std::string &output, int curve_points)
    {
        const ridge::ModelDocument doc = ridge::parse_model(slurp(model_path), model_path);
        const ridge::RidgeModel &model = doc.model;
        const ridge::CsvTable table = load_csv(input);

        std::vector<std::string> columns{"kind"};
        for(ridge::Index l = 0; l < model.n; ++l)
            columns.push_back("y" + std::to_string(l + 1));
        columns.push_back("f");
        columns.push_back("g");

        if(table.empty())
        {
            emit(output, [](std::ostream &) {});
            return exit_ok;
        }
        if(table.find(target) < 0)
            throw ridge::DataError(input + ": missing target column '" + target + "'");
        const ridge::Dataset data = ridge::split_target(table, target, input);
        const Eigen::MatrixXd points = model_inputs(table, target, model, input);
        const Eigen::MatrixXd y = points * model.subspace.basis();
        const Eigen::VectorXd g = ridge::evaluate_model(model, points);

        std::vector<ridge::Index> order(static_cast<std::size_t>(y.rows()));
        std::iota(order.begin(), order.end(), ridge::Index{0});
        std::stable_sort(order.begin(), order.end(), [&](ridge::Index a, ridge::Index b) { return y(a, 0) < y(b, 0); });

        emit(output, [&](std::ostream &os) {
            for(std::size_t j = 0; j < columns.size(); ++j)
                os << (j ? "," : "") << columns[j];
            os << "\n";
            for(ridge::Index i : order)
            {
                os << "sample";
                for(ridge::Index l = 0; l < model.n; ++l)
                    os << "," << ridge::format_double(y(i, l));
                os << "," << ridge::format_double(data.values(i)) << "," << ridge::format_double(g(i)) << "\n";
            }
            if(model.n == 1 && y.rows() > 0)
            {
                const double lo = y.col(0).minCoeff();
                const double hi = y.col(0).maxCoeff();
                Eigen::MatrixXd grid(curve_points, 1);
                for(int k = 0; k < curve_points; ++k)
                    grid(k, 0) = curve_points == 1 ? lo : lo + (hi - lo) * k / (curve_points - 1);
                grid(curve_points - 1, 0) = hi;
                const Eigen::VectorXd curve = ridge::evaluate_profile(model, grid);
                for(int k = 0; k < curve_points; ++k)
                    os << "curve," << ridge::format_double(grid(k, 0)) << ",," << ridge::format_double(curve(k)) << "\n";
            }
        });
        return exit_ok;
    }

    template<typename T>
    std::string join(const std::vector<T> &values)
    {
        std::ostringstream out;
        for(std::size_t i = 0; i < values.size(); ++i)
            out << (i ? "," : "") << values[i];
        return out.str();
    }

    void add_solver_flags(CLI::App *cmd, ridge::SolverConfig &config)
    {
        cmd->add_option("--max-iter", config.max_iter, "Maximum outer iterations")->capture_default_str();
        cmd->add_option("--max-backtracks", config.max_backtracks, "Maximum Armijo backtracking steps")
            ->capture_default_str();
        cmd->add_option("--gamma", config.gamma, "Backtracking reduction factor")->capture_default_str();
        cmd->add_option("--beta", config.beta, "Armijo sufficient-decrease tolerance")->capture_default_str();
        cmd->add_option("--tol-grad", config.tol_grad, "Gradient tolerance, relative to 1 + ||f||")
            ->capture_default_str();
        cmd->add_option("--tol-residual-change", config.tol_residual_change,
                        "Residual-change tolerance, relative to ||f||")
            ->capture_default_str();
        cmd->add_option("--tol-subspace", config.tol_subspace, "Subspace step tolerance in radians")
            ->capture_default_str();
        cmd->add_option("--inner-steps", config.inner_steps, "Steepest-descent steps per alternating iteration")
            ->capture_default_str();
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Polynomial ridge approximation f(x) ~ g(U^T x) from sampled data"};
    app.require_subcommand(1);

    FitOptions fit;
    CLI::App *fit_cmd = app.add_subcommand("fit", "Fit a ridge approximation to CSV data and write a model JSON");
    fit_cmd->add_option("input", fit.input, "CSV file with a header row")->required();
    fit_cmd->add_option("--target", fit.target, "Name of the output column")->capture_default_str();
    fit_cmd->add_option("--dim", fit.dim, "Subspace dimension n")->required()->check(CLI::PositiveNumber);
    fit_cmd->add_option("--degree", fit.degree, "Total polynomial degree p")->required()->check(CLI::NonNegativeNumber);
    fit_cmd->add_option("--basis", fit.basis, "monomial, legendre or hermite")->capture_default_str();
    fit_cmd->add_option("--solver", fit.solver, "gauss-newton or alternating")->capture_default_str();
    fit_cmd->add_option("--restarts", fit.config.restarts, "Random initial subspaces; the best fit is kept")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    fit_cmd->add_option("--seed", fit.seed, "Random seed (drawn from entropy when omitted)");
    fit_cmd->add_option("--output,-o", fit.output, "Model JSON destination, - for stdout")->capture_default_str();
    fit_cmd->add_option("--report", fit.report, "Human-readable report destination (default stderr)");
    add_solver_flags(fit_cmd, fit.config);

    std::string model_path, input, target = "f", output = "-";
    CLI::App *predict_cmd = app.add_subcommand("predict", "Evaluate a fitted model at the rows of a CSV file");
    predict_cmd->add_option("model", model_path, "Model JSON written by fit")->required();
    predict_cmd->add_option("input", input, "CSV file of points; a target column is ignored")->required();
    predict_cmd->add_option("--target", target, "Column to ignore if present")->capture_default_str();
    predict_cmd->add_option("--output,-o", output, "Destination, - for stdout")->capture_default_str();

    int curve_points = 200;
    CLI::App *shadow_cmd = app.add_subcommand("shadow", "Emit shadow-plot data: projected coordinates, f and g");
    shadow_cmd->add_option("model", model_path, "Model JSON written by fit")->required();
    shadow_cmd->add_option("input", input, "CSV file with inputs and the target column")->required();
    shadow_cmd->add_option("--target", target, "Name of the observed-value column")->capture_default_str();
    shadow_cmd->add_option("--output,-o", output, "Destination, - for stdout")->capture_default_str();
    shadow_cmd->add_option("--curve-points", curve_points, "Points on the fitted curve for n = 1")
        ->capture_default_str()
        ->check(CLI::Range(2, 1000000));

    std::string experiment;
    ridge::ExperimentConfig bench;
    CLI::App *bench_cmd = app.add_subcommand("bench", "Run a built-in experiment and write CSV results");
    bench_cmd->add_option("experiment", experiment, "One of " + join(ridge::experiment_names()))->required();
    bench_cmd->add_option("--seed", bench.seed, "Master seed")->capture_default_str();
    bench_cmd->add_option("--replicates", bench.replicates, "Replicates (0 selects the experiment default)")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    bench_cmd->add_option("--samples", bench.samples, "Samples M per data set")->capture_default_str()->check(
        CLI::PositiveNumber);
    bench_cmd->add_option("--noise", bench.noise, "convergence: standard deviation of added noise")
        ->capture_default_str();
    bench_cmd->add_option("--max-degree", bench.max_degree, "conditioning: largest degree")->capture_default_str();
    bench_cmd->add_option("--dim", bench.dimension, "conditioning: subspace dimension")->capture_default_str();
    bench_cmd->add_option("--dims", bench.dimensions, "global_min, timing: subspace dimensions")->delimiter(',');
    bench_cmd->add_option("--degrees", bench.degrees, "timing: polynomial degrees")->delimiter(',');
    bench_cmd->add_option("--inner-options", bench.inner_step_options, "timing: alternating inner-step variants")
        ->delimiter(',');
    bench_cmd->add_option("--budgets", bench.budgets, "subspace_recovery: evaluation budgets")->delimiter(',');
    bench_cmd->add_option("--methods", bench.methods, "subspace_recovery: active_subspace, ridge")->delimiter(',');
    bench_cmd->add_option("--alpha", bench.alpha, "subspace_recovery: oscillation amplitude")->capture_default_str();
    bench_cmd->add_option("--beta-freq", bench.beta, "subspace_recovery: oscillation frequency")->capture_default_str();
    bench_cmd->add_option("--fd-step", bench.fd_step, "subspace_recovery: finite-difference step")
        ->capture_default_str();
    bench_cmd->add_option("--failure-threshold", bench.failure_threshold,
                          "global_min: normalized residual above which a fit counts as a failure")
        ->capture_default_str();
    bench_cmd->add_option("--output,-o", output, "Destination, - for stdout")->capture_default_str();
    add_solver_flags(bench_cmd, bench.solver);

    try
    {
        app.parse(argc, argv);
    }
    catch(const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try
    {
        if(*fit_cmd)
            return run_fit(fit);
        if(*predict_cmd)
            return run_predict(model_path, input, target, output);
        if(*shadow_cmd)
            return run_shadow(model_path, input, target, output, curve_points);
        if(*bench_cmd)
        {
            bench.inner_steps = bench.solver.inner_steps;
            const ridge::ExperimentResult result = ridge::run_experiment(experiment, bench);
            emit(output, [&](std::ostream &out) { result.write_csv(out); });
            return exit_ok;
        }
    }
    catch(const UsageError &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }
    catch(const ridge::DataError &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }
    catch(const std::invalid_argument &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }
    catch(const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return exit_solver;
    }
    return exit_usage;
}
