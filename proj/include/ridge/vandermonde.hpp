/// ridge/vandermonde.hpp
///
/// The Vandermonde-like matrix V(U) with [V]_ij = psi_j(eta(U^T x_i)), its
/// derivatives with respect to the entries of U, and conditioning diagnostics.

#ifndef RIDGE_VANDERMONDE_HPP_
#define RIDGE_VANDERMONDE_HPP_

#include "basis.hpp"
#include "grassmann.hpp"

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ridge
{
    struct DesignMatrix
    {
        Eigen::MatrixXd values; ///< M x N
        IndexSet index_set;
        BasisFamily family = BasisFamily::legendre;
        AffineMap affine;
    };

    /// Derivatives of V(U) with respect to every entry of U.
    ///
    /// Slice (k, l) is diag(X[:, k]) * coordinate(l), where coordinate(l)
    /// holds d_l phi'_{alpha_jl}(eta_l) prod_{q != l} phi_{alpha_jq}(eta_q).
    /// Only the n coordinate matrices are stored; slices are formed on demand.
    class DesignDerivative
    {
    public:
        DesignDerivative(Eigen::MatrixXd points, std::vector<Eigen::MatrixXd> coordinate)
            : _points(std::move(points)), _coordinate(std::move(coordinate))
        { }

        Index rows() const { return _points.rows(); }
        Index ambient_dimension() const { return _points.cols(); }
        Index dimension() const { return static_cast<Index>(_coordinate.size()); }

        const Eigen::MatrixXd &coordinate(Index l) const { return _coordinate[static_cast<std::size_t>(l)]; }
        const Eigen::MatrixXd &points() const { return _points; }

        /// dV / dU(k, l), an M x N matrix.
        Eigen::MatrixXd slice(Index k, Index l) const
        {
            return _points.col(k).asDiagonal() * coordinate(l);
        }

    private:
        Eigen::MatrixXd _points;
        std::vector<Eigen::MatrixXd> _coordinate;
    };

    namespace detail
    {
        inline void check_design_inputs(const Eigen::Ref<const Eigen::MatrixXd> &points, const Subspace &subspace,
                                        const IndexSet &index_set, const AffineMap &affine)
        {
            if(points.rows() < 1)
                throw std::invalid_argument("design: need at least one point");
            if(points.cols() != subspace.ambient_dimension())
                throw std::invalid_argument("design: points have " + std::to_string(points.cols()) +
                                            " columns but the subspace lives in R^" +
                                            std::to_string(subspace.ambient_dimension()));
            if(index_set.dimension() != subspace.dimension())
                throw std::invalid_argument("design: index set dimension does not match subspace dimension");
            if(affine.dimension() != subspace.dimension())
                throw std::invalid_argument("design: affine map dimension does not match subspace dimension");
        }

        /// Per-point tables phi_k(eta_l) and phi_k'(eta_l), laid out as
        /// [l * (p+1) + k] for one point.
        struct PointTables
        {
            std::vector<double> values;
            std::vector<double> derivs;

            PointTables(Index n, int p)
                : values(static_cast<std::size_t>(n * (p + 1))), derivs(values.size())
            { }

            void fill(BasisFamily family, const Eigen::Ref<const Eigen::VectorXd> &eta, int p, bool with_derivs)
            {
                for(Index l = 0; l < eta.size(); ++l)
                {
                    const auto offset = static_cast<std::size_t>(l * (p + 1));
                    eval_poly_table(family, eta(l), values.data() + offset,
                                    with_derivs ? derivs.data() + offset : nullptr, p);
                }
            }

            double value(Index l, int k, int p) const { return values[static_cast<std::size_t>(l * (p + 1) + k)]; }
            double deriv(Index l, int k, int p) const { return derivs[static_cast<std::size_t>(l * (p + 1) + k)]; }
        };
    }

    /// Normalized coordinates eta(U^T x_i), one row per point.
    inline Eigen::MatrixXd normalized_projections(const Eigen::Ref<const Eigen::MatrixXd> &points, const Subspace &subspace,
                                                  const AffineMap &affine)
    {
        return affine.apply_rows(points * subspace.basis());
    }

    inline DesignMatrix build_design(const Eigen::Ref<const Eigen::MatrixXd> &points, const Subspace &subspace,
                                     const IndexSet &index_set, BasisFamily family, const AffineMap &affine)
    {
        detail::check_design_inputs(points, subspace, index_set, affine);

        const Index rows = points.rows();
        const Index n = subspace.dimension();
        const int p = index_set.degree();
        const auto cols = static_cast<Index>(index_set.size());

        const Eigen::MatrixXd eta = normalized_projections(points, subspace, affine);
        DesignMatrix design{Eigen::MatrixXd(rows, cols), index_set, family, affine};
        detail::PointTables tables(n, p);
        for(Index i = 0; i < rows; ++i)
        {
            tables.fill(family, eta.row(i).transpose(), p, false);
            for(Index j = 0; j < cols; ++j)
            {
                const MultiIndex &alpha = index_set[static_cast<std::size_t>(j)];
                double product = 1.0;
                for(Index l = 0; l < n; ++l)
                    product *= tables.value(l, alpha[static_cast<std::size_t>(l)], p);
                design.values(i, j) = product;
            }
        }
        return design;
    }

    /// Derivatives of V(U) with the affine map held fixed.
    inline DesignDerivative build_design_derivative(const Eigen::Ref<const Eigen::MatrixXd> &points,
                                                    const Subspace &subspace, const IndexSet &index_set,
                                                    BasisFamily family, const AffineMap &affine)
    {
        detail::check_design_inputs(points, subspace, index_set, affine);

        const Index rows = points.rows();
        const Index n = subspace.dimension();
        const int p = index_set.degree();
        const auto cols = static_cast<Index>(index_set.size());

        const Eigen::MatrixXd eta = normalized_projections(points, subspace, affine);
        std::vector<Eigen::MatrixXd> coordinate(static_cast<std::size_t>(n), Eigen::MatrixXd(rows, cols));
        detail::PointTables tables(n, p);
        for(Index i = 0; i < rows; ++i)
        {
            tables.fill(family, eta.row(i).transpose(), p, true);
            for(Index j = 0; j < cols; ++j)
            {
                const MultiIndex &alpha = index_set[static_cast<std::size_t>(j)];
                for(Index l = 0; l < n; ++l)
                {
                    double product = affine.scale(l) * tables.deriv(l, alpha[static_cast<std::size_t>(l)], p);
                    for(Index q = 0; q < n; ++q)
                        if(q != l)
                            product *= tables.value(q, alpha[static_cast<std::size_t>(q)], p);
                    coordinate[static_cast<std::size_t>(l)](i, j) = product;
                }
            }
        }
        return DesignDerivative(points, std::move(coordinate));
    }

    /// sigma_max / sigma_min of the design; +infinity when sigma_min is zero.
    inline double condition_number(const Eigen::Ref<const Eigen::MatrixXd> &matrix)
    {
        if(matrix.rows() < matrix.cols())
            throw std::invalid_argument("condition_number: need at least as many rows as columns, got " +
                                        std::to_string(matrix.rows()) + " x " + std::to_string(matrix.cols()));
        const Eigen::VectorXd sigma = Eigen::JacobiSVD<Eigen::MatrixXd>(matrix).singularValues();
        if(sigma.size() == 0)
            return 1.0;
        const double smallest = sigma(sigma.size() - 1);
        if(smallest == 0.0)
            return std::numeric_limits<double>::infinity();
        return sigma(0) / smallest;
    }

    inline double condition_number(const DesignMatrix &design)
    {
        return condition_number(design.values);
    }
}

#endif
