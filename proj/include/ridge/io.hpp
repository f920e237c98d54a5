/// ridge/io.hpp
///
/// CSV ingestion for training and prediction data, and the JSON model
/// document written by `ridge fit`.

#ifndef RIDGE_IO_HPP_
#define RIDGE_IO_HPP_

#include "basis.hpp"
#include "format.hpp"
#include "grassmann.hpp"
#include "solver.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ridge
{
    /// Malformed input data; the message carries a source:line:column prefix when one applies.
    class DataError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// A parsed CSV file: header names and an all-numeric body.
    struct CsvTable
    {
        std::vector<std::string> columns;
        Eigen::MatrixXd data; ///< rows x columns.size()

        /// Position of the named column, or -1.
        Index find(std::string_view name) const
        {
            for(std::size_t j = 0; j < columns.size(); ++j)
                if(columns[j] == name)
                    return static_cast<Index>(j);
            return -1;
        }

        bool empty() const { return columns.empty(); }
    };

    namespace detail
    {
        inline std::string_view trim(std::string_view s)
        {
            while(!s.empty() && (s.front() == ' ' || s.front() == '\t'))
                s.remove_prefix(1);
            while(!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
                s.remove_suffix(1);
            return s;
        }

        inline std::vector<std::string_view> split_commas(std::string_view line)
        {
            std::vector<std::string_view> cells;
            std::size_t start = 0;
            while(true)
            {
                const std::size_t comma = line.find(',', start);
                cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
                if(comma == std::string_view::npos)
                    break;
                start = comma + 1;
            }
            return cells;
        }

        inline std::string location(std::string_view source, std::size_t line, std::size_t column)
        {
            return std::string(source) + ":" + std::to_string(line) + ":" + std::to_string(column) + ": ";
        }
    }

    /// Comma-separated, first row headers, '.' decimal point, scientific
    /// notation accepted. Blank lines are skipped; an empty stream gives an
    /// empty table.
    inline CsvTable read_csv(std::istream &in, std::string_view source = "<input>")
    {
        CsvTable table;
        std::vector<std::vector<double>> rows;
        std::string line;
        std::size_t line_number = 0;
        while(std::getline(in, line))
        {
            ++line_number;
            if(detail::trim(line).empty())
                continue;
            const std::vector<std::string_view> cells = detail::split_commas(line);
            if(table.columns.empty())
            {
                for(std::size_t j = 0; j < cells.size(); ++j)
                {
                    if(cells[j].empty())
                        throw DataError(detail::location(source, line_number, j + 1) + "empty column name");
                    if(table.find(cells[j]) >= 0)
                        throw DataError(detail::location(source, line_number, j + 1) + "duplicate column name '" +
                                        std::string(cells[j]) + "'");
                    table.columns.emplace_back(cells[j]);
                }
                continue;
            }
            if(cells.size() != table.columns.size())
                throw DataError(detail::location(source, line_number, std::min(cells.size(), table.columns.size()) + 1) +
                                "ragged row: expected " + std::to_string(table.columns.size()) + " cells, found " +
                                std::to_string(cells.size()));

            std::vector<double> row(cells.size());
            for(std::size_t j = 0; j < cells.size(); ++j)
            {
                std::string_view cell = cells[j];
                if(!cell.empty() && cell.front() == '+')
                    cell.remove_prefix(1);
                double value = 0.0;
                const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
                if(cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
                    throw DataError(detail::location(source, line_number, j + 1) + "cannot parse '" +
                                    std::string(cells[j]) + "' as a number");
                if(!std::isfinite(value))
                    throw DataError(detail::location(source, line_number, j + 1) + "non-finite value '" +
                                    std::string(cells[j]) + "'");
                row[j] = value;
            }
            rows.push_back(std::move(row));
        }

        table.data.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.columns.size()));
        for(std::size_t i = 0; i < rows.size(); ++i)
            for(std::size_t j = 0; j < rows[i].size(); ++j)
                table.data(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
        return table;
    }

    /// Training data: every non-target column is an input coordinate.
    struct Dataset
    {
        Eigen::MatrixXd points;
        Eigen::VectorXd values;
        std::vector<std::string> input_columns;
        std::string target_column;

        Index samples() const { return points.rows(); }
        Index dimension() const { return points.cols(); }
    };

    inline Dataset split_target(const CsvTable &table, std::string_view target, std::string_view source = "<input>")
    {
        const Index t = table.find(target);
        if(t < 0)
            throw DataError(std::string(source) + ": missing target column '" + std::string(target) + "'");
        Dataset out;
        out.target_column = std::string(target);
        out.values = table.data.col(t);
        out.points.resize(table.data.rows(), table.data.cols() - 1);
        for(Index j = 0, k = 0; j < table.data.cols(); ++j)
        {
            if(j == t)
                continue;
            out.points.col(k++) = table.data.col(j);
            out.input_columns.push_back(table.columns[static_cast<std::size_t>(j)]);
        }
        return out;
    }

    struct TrainingInfo
    {
        Index samples = 0;
        double residual_norm = 0.0;
        std::uint64_t seed = 0;
        std::string solver;
    };

    /// A fitted model plus how it was trained.
    struct ModelDocument
    {
        static constexpr int schema_version = 1;
        RidgeModel model;
        TrainingInfo training;
    };

    /// Pretty-printed JSON with sorted keys and shortest round-trip numbers;
    /// serialize(parse(serialize(doc))) == serialize(doc).
    inline std::string serialize_model(const ModelDocument &doc)
    {
        using nlohmann::json;
        const RidgeModel &model = doc.model;
        const Eigen::MatrixXd &u = model.subspace.basis();

        json rows = json::array();
        for(Index i = 0; i < u.rows(); ++i)
        {
            json row = json::array();
            for(Index j = 0; j < u.cols(); ++j)
                row.push_back(u(i, j));
            rows.push_back(std::move(row));
        }
        const auto to_array = [](const Eigen::VectorXd &v) {
            json a = json::array();
            for(Index i = 0; i < v.size(); ++i)
                a.push_back(v(i));
            return a;
        };

        json j;
        j["schema_version"] = ModelDocument::schema_version;
        j["m"] = model.m;
        j["n"] = model.n;
        j["p"] = model.p;
        j["family"] = std::string(to_string(model.family));
        j["affine"] = {{"a", to_array(model.affine.offset)}, {"d", to_array(model.affine.scale)}};
        j["U"] = std::move(rows);
        j["c"] = to_array(model.coefficients);
        j["training"] = {{"M", doc.training.samples},
                         {"residual_norm", doc.training.residual_norm},
                         {"seed", doc.training.seed},
                         {"solver", doc.training.solver}};
        return j.dump(2) + "\n";
    }

    inline ModelDocument parse_model(std::string_view text, std::string_view source = "<model>")
    {
        using nlohmann::json;
        const std::string where = std::string(source) + ": ";
        json j;
        try
        {
            j = json::parse(text.begin(), text.end());
        }
        catch(const json::parse_error &e)
        {
            throw DataError(where + "invalid JSON: " + e.what());
        }

        try
        {
            const int version = j.at("schema_version").get<int>();
            if(version != ModelDocument::schema_version)
                throw DataError(where + "unsupported schema_version " + std::to_string(version));

            ModelDocument doc;
            RidgeModel &model = doc.model;
            model.m = j.at("m").get<Index>();
            model.n = j.at("n").get<Index>();
            model.p = j.at("p").get<int>();
            const std::string family = j.at("family").get<std::string>();
            const std::optional<BasisFamily> parsed = parse_basis_family(family);
            if(!parsed)
                throw DataError(where + "unknown basis family '" + family + "'");
            model.family = *parsed;
            if(model.n < 1 || model.n > model.m || model.p < 0)
                throw DataError(where + "need 1 <= n <= m and p >= 0");

            const auto read_vector = [&](const json &a, Index expected, const char *name) {
                if(!a.is_array() || static_cast<Index>(a.size()) != expected)
                    throw DataError(where + "'" + name + "' must be an array of length " + std::to_string(expected));
                Eigen::VectorXd v(expected);
                for(Index i = 0; i < expected; ++i)
                    v(i) = a.at(static_cast<std::size_t>(i)).get<double>();
                return v;
            };

            const json &rows = j.at("U");
            if(!rows.is_array() || static_cast<Index>(rows.size()) != model.m)
                throw DataError(where + "'U' must have " + std::to_string(model.m) + " rows");
            Eigen::MatrixXd u(model.m, model.n);
            for(Index i = 0; i < model.m; ++i)
                u.row(i) = read_vector(rows.at(static_cast<std::size_t>(i)), model.n, "U row").transpose();
            try
            {
                model.subspace = Subspace(std::move(u));
            }
            catch(const std::invalid_argument &e)
            {
                throw DataError(where + e.what());
            }

            model.affine.offset = read_vector(j.at("affine").at("a"), model.n, "affine.a");
            model.affine.scale = read_vector(j.at("affine").at("d"), model.n, "affine.d");
            const auto cardinality = static_cast<Index>(total_degree_cardinality(static_cast<int>(model.n), model.p));
            model.coefficients = read_vector(j.at("c"), cardinality, "c");

            const json &training = j.at("training");
            doc.training.samples = training.at("M").get<Index>();
            doc.training.residual_norm = training.at("residual_norm").get<double>();
            doc.training.seed = training.at("seed").get<std::uint64_t>();
            doc.training.solver = training.at("solver").get<std::string>();
            model.training_residual_norm = doc.training.residual_norm;
            return doc;
        }
        catch(const json::exception &e)
        {
            throw DataError(where + "malformed model: " + e.what());
        }
        catch(const std::invalid_argument &e)
        {
            throw DataError(where + e.what());
        }
    }

    /// Writes a header and rows with shortest round-trip numbers.
    inline void write_csv(std::ostream &out, const std::vector<std::string> &columns,
                          const Eigen::Ref<const Eigen::MatrixXd> &data)
    {
        for(std::size_t j = 0; j < columns.size(); ++j)
            out << (j ? "," : "") << columns[j];
        out << "\n";
        for(Index i = 0; i < data.rows(); ++i)
        {
            for(Index j = 0; j < data.cols(); ++j)
                out << (j ? "," : "") << format_double(data(i, j));
            out << "\n";
        }
    }
}

#endif
