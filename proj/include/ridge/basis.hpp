/// ridge/basis.hpp
///
/// Multi-index enumeration, one-dimensional polynomial families and the
/// affine normalization applied to projected coordinates.

#ifndef RIDGE_BASIS_HPP_
#define RIDGE_BASIS_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ridge
{
    using Index = Eigen::Index;

    /// Exponents of one tensor-product basis function.
    using MultiIndex = std::vector<int>;

    /// Number of multi-indices of length n and total degree <= p, i.e. binomial(n+p, p).
    inline std::size_t total_degree_cardinality(int n, int p)
    {
        // Multiplicative form keeps every intermediate an exact integer.
        std::size_t result = 1;
        for(int k = 1; k <= std::min(n, p); ++k)
            result = result * static_cast<std::size_t>(n + p - std::min(n, p) + k) / static_cast<std::size_t>(k);
        return result;
    }

    /// Ordered set of all multi-indices of total degree <= p.
    ///
    /// The order is graded lexicographic: by total degree first, and within a
    /// degree by decreasing first exponent, then decreasing second, and so on.
    /// For n = 2, p = 2 this is (0,0),(1,0),(0,1),(2,0),(1,1),(0,2). Basis
    /// columns, serialized coefficients and tests all rely on this order.
    class IndexSet
    {
    public:
        IndexSet() = default;

        IndexSet(int n, int p)
            : _n(n), _p(p)
        {
            if(n < 1)
                throw std::invalid_argument("IndexSet: dimension n must be >= 1");
            if(p < 0)
                throw std::invalid_argument("IndexSet: degree p must be >= 0");

            _indices.reserve(total_degree_cardinality(n, p));
            MultiIndex current(static_cast<std::size_t>(n), 0);
            for(int degree = 0; degree <= p; ++degree)
                append_degree(current, 0, degree);
        }

        int dimension() const { return _n; }
        int degree() const { return _p; }
        std::size_t size() const { return _indices.size(); }

        const MultiIndex &operator[](std::size_t j) const { return _indices[j]; }
        const std::vector<MultiIndex> &indices() const { return _indices; }

        auto begin() const { return _indices.begin(); }
        auto end() const { return _indices.end(); }

    private:
        void append_degree(MultiIndex &current, int position, int remaining)
        {
            if(position == _n - 1)
            {
                current[static_cast<std::size_t>(position)] = remaining;
                _indices.push_back(current);
                return;
            }
            for(int e = remaining; e >= 0; --e)
            {
                current[static_cast<std::size_t>(position)] = e;
                append_degree(current, position + 1, remaining - e);
            }
            current[static_cast<std::size_t>(position)] = 0;
        }

        int _n = 0;
        int _p = 0;
        std::vector<MultiIndex> _indices;
    };

    inline IndexSet enumerate_indices(int n, int p)
    {
        return IndexSet(n, p);
    }

    /// One-dimensional polynomial family used in every coordinate of the
    /// tensor-product basis.
    enum class BasisFamily
    {
        monomial,
        legendre, ///< classical Legendre, P_k(1) = 1
        hermite   ///< probabilists' Hermite, orthogonal under exp(-y^2/2)
    };

    inline std::string_view to_string(BasisFamily family)
    {
        switch(family)
        {
        case BasisFamily::monomial: return "monomial";
        case BasisFamily::legendre: return "legendre";
        case BasisFamily::hermite: return "hermite";
        }
        return "unknown";
    }

    inline std::optional<BasisFamily> parse_basis_family(std::string_view name)
    {
        if(name == "monomial")
            return BasisFamily::monomial;
        if(name == "legendre")
            return BasisFamily::legendre;
        if(name == "hermite")
            return BasisFamily::hermite;
        return std::nullopt;
    }

    /// Fills values[k] = phi_k(y) for k = 0..values.size()-1 using the
    /// family's three-term recurrence. If derivs is non-empty it must have
    /// the same size and receives phi_k'(y).
    inline void eval_poly_table(BasisFamily family, double y, double *values, double *derivs, int max_degree)
    {
        if(max_degree < 0)
            return;
        values[0] = 1.0;
        if(derivs)
            derivs[0] = 0.0;
        if(max_degree == 0)
            return;

        switch(family)
        {
        case BasisFamily::monomial:
            for(int k = 1; k <= max_degree; ++k)
            {
                values[k] = values[k - 1] * y;
                if(derivs)
                    derivs[k] = k * values[k - 1];
            }
            break;
        case BasisFamily::legendre:
            values[1] = y;
            if(derivs)
                derivs[1] = 1.0;
            for(int k = 1; k < max_degree; ++k)
            {
                // (k+1) P_{k+1} = (2k+1) y P_k - k P_{k-1}
                values[k + 1] = ((2 * k + 1) * y * values[k] - k * values[k - 1]) / (k + 1);
                if(derivs)
                    derivs[k + 1] = ((2 * k + 1) * (values[k] + y * derivs[k]) - k * derivs[k - 1]) / (k + 1);
            }
            break;
        case BasisFamily::hermite:
            values[1] = y;
            if(derivs)
                derivs[1] = 1.0;
            for(int k = 1; k < max_degree; ++k)
            {
                // He_{k+1} = y He_k - k He_{k-1};  He_k' = k He_{k-1}
                values[k + 1] = y * values[k] - k * values[k - 1];
                if(derivs)
                    derivs[k + 1] = (k + 1) * values[k];
            }
            break;
        }
    }

    inline double eval_poly_1d(BasisFamily family, int degree, double y)
    {
        if(degree < 0)
            throw std::invalid_argument("eval_poly_1d: degree must be >= 0");
        std::vector<double> values(static_cast<std::size_t>(degree) + 1);
        eval_poly_table(family, y, values.data(), nullptr, degree);
        return values.back();
    }

    inline double eval_poly_1d_deriv(BasisFamily family, int degree, double y)
    {
        if(degree < 0)
            throw std::invalid_argument("eval_poly_1d_deriv: degree must be >= 0");
        std::vector<double> values(static_cast<std::size_t>(degree) + 1);
        std::vector<double> derivs(values.size());
        eval_poly_table(family, y, values.data(), derivs.data(), degree);
        return derivs.back();
    }

    /// eta(y) = offset + diag(scale) y, applied to projected coordinates
    /// before the basis is evaluated. Every scale entry is positive.
    struct AffineMap
    {
        Eigen::VectorXd offset;
        Eigen::VectorXd scale;

        static AffineMap identity(Index n)
        {
            return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n)};
        }

        Index dimension() const { return offset.size(); }

        Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd> &y) const
        {
            return offset + scale.cwiseProduct(y);
        }

        /// Applies the map to every row of an M x n matrix of projections.
        Eigen::MatrixXd apply_rows(const Eigen::Ref<const Eigen::MatrixXd> &projections) const
        {
            Eigen::MatrixXd out = projections * scale.asDiagonal();
            out.rowwise() += offset.transpose();
            return out;
        }
    };

    /// Spread below this is treated as a degenerate (constant) coordinate.
    inline constexpr double degenerate_spread = 1e-14;

    /// Fits the normalization for a family from M x n projected points:
    /// legendre and monomial map each coordinate's [min, max] onto [-1, 1],
    /// hermite maps it to zero mean and unit (population) standard deviation.
    /// A constant coordinate gets scale 1 and is centred at its value.
    inline AffineMap fit_affine_map(BasisFamily family, const Eigen::Ref<const Eigen::MatrixXd> &projections)
    {
        if(projections.rows() < 1)
            throw std::invalid_argument("fit_affine_map: need at least one point");

        const Index n = projections.cols();
        AffineMap map{Eigen::VectorXd(n), Eigen::VectorXd(n)};
        for(Index l = 0; l < n; ++l)
        {
            const auto column = projections.col(l);
            if(family == BasisFamily::hermite)
            {
                const double mean = column.mean();
                const double stddev = std::sqrt((column.array() - mean).square().mean());
                if(stddev < degenerate_spread)
                {
                    map.scale(l) = 1.0;
                    map.offset(l) = -mean;
                }
                else
                {
                    map.scale(l) = 1.0 / stddev;
                    map.offset(l) = -mean / stddev;
                }
            }
            else
            {
                const double lo = column.minCoeff();
                const double hi = column.maxCoeff();
                if(hi - lo < degenerate_spread)
                {
                    map.scale(l) = 1.0;
                    map.offset(l) = -0.5 * (lo + hi);
                }
                else
                {
                    map.scale(l) = 2.0 / (hi - lo);
                    map.offset(l) = -(hi + lo) / (hi - lo);
                }
            }
        }
        return map;
    }
}

#endif
