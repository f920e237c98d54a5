/// ridge/varpro.hpp
///
/// Variable projection for the separable problem min_{U, c} ||f - V(U) c||:
/// the inner least-squares solve for c, the residual r(U) = P_V^perp f, the
/// Golub-Pereyra Jacobian of r with respect to U and the gradient of
/// phi(U) = 1/2 ||r(U)||^2.

#ifndef RIDGE_VARPRO_HPP_
#define RIDGE_VARPRO_HPP_

#include "basis.hpp"
#include "grassmann.hpp"
#include "vandermonde.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace ridge
{
    /// Sample points, observed values and the polynomial space to fit.
    class ProjectedProblem
    {
    public:
        ProjectedProblem(Eigen::MatrixXd points, Eigen::VectorXd values, int degree,
                         BasisFamily family = BasisFamily::legendre)
            : _points(std::move(points)), _values(std::move(values)), _degree(degree), _family(family)
        {
            if(_points.rows() < 1)
                throw std::invalid_argument("ProjectedProblem: need at least one sample");
            if(_points.cols() < 1)
                throw std::invalid_argument("ProjectedProblem: points need at least one coordinate");
            if(_values.size() != _points.rows())
                throw std::invalid_argument("ProjectedProblem: " + std::to_string(_points.rows()) + " points but " +
                                            std::to_string(_values.size()) + " values");
            if(_degree < 0)
                throw std::invalid_argument("ProjectedProblem: degree must be >= 0");
            if(!_points.allFinite() || !_values.allFinite())
                throw std::invalid_argument("ProjectedProblem: points and values must be finite");
        }

        const Eigen::MatrixXd &points() const { return _points; }
        const Eigen::VectorXd &values() const { return _values; }
        int degree() const { return _degree; }
        BasisFamily family() const { return _family; }
        Index samples() const { return _points.rows(); }
        Index ambient_dimension() const { return _points.cols(); }

    private:
        Eigen::MatrixXd _points;
        Eigen::VectorXd _values;
        int _degree;
        BasisFamily _family;
    };

    /// Everything derived from one thin SVD of V(U) at a fixed U.
    struct VarproState
    {
        Subspace subspace;
        DesignMatrix design;
        Eigen::VectorXd coefficients;
        Eigen::VectorXd residual;
        Index rank = 0;

        // Thin SVD of the design restricted to its numerical range:
        // V ~= range_basis * diag(singular_values) * right_basis^T.
        Eigen::MatrixXd range_basis;
        Eigen::VectorXd singular_values;
        Eigen::MatrixXd right_basis;

        bool underdetermined() const { return rank < design.values.cols(); }
        double residual_norm() const { return residual.norm(); }
    };

    /// Singular values at or below max(M, N) * eps * sigma_1 count as zero.
    inline double pseudoinverse_threshold(Index rows, Index cols, double largest)
    {
        return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * largest;
    }

    /// Minimum-norm least-squares coefficients with the affine map held fixed.
    inline VarproState solve_coefficients(const ProjectedProblem &problem, const Subspace &subspace, const AffineMap &affine)
    {
        const IndexSet index_set(static_cast<int>(subspace.dimension()), problem.degree());
        VarproState state{subspace, build_design(problem.points(), subspace, index_set, problem.family(), affine),
                          {}, {}, 0, {}, {}, {}};
        const Eigen::MatrixXd &v = state.design.values;
        if(!v.allFinite())
            throw std::runtime_error("solve_coefficients: design matrix has non-finite entries");

        Eigen::BDCSVD<Eigen::MatrixXd> svd(v, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd &sigma = svd.singularValues();
        const double cutoff = sigma.size() > 0 ? pseudoinverse_threshold(v.rows(), v.cols(), sigma(0)) : 0.0;
        Index rank = 0;
        while(rank < sigma.size() && sigma(rank) > cutoff)
            ++rank;

        state.rank = rank;
        state.range_basis = svd.matrixU().leftCols(rank);
        state.singular_values = sigma.head(rank);
        state.right_basis = svd.matrixV().leftCols(rank);

        const Eigen::VectorXd &f = problem.values();
        const Eigen::VectorXd projected = state.range_basis.transpose() * f;
        state.coefficients = state.right_basis * projected.cwiseQuotient(state.singular_values);
        state.residual = f - state.range_basis * projected;
        return state;
    }

    /// Fits the affine map from the current projections, then solves for c.
    inline VarproState solve_coefficients(const ProjectedProblem &problem, const Subspace &subspace)
    {
        if(subspace.ambient_dimension() != problem.ambient_dimension())
            throw std::invalid_argument("solve_coefficients: subspace lives in R^" +
                                        std::to_string(subspace.ambient_dimension()) + " but points have " +
                                        std::to_string(problem.ambient_dimension()) + " coordinates");
        const AffineMap affine = fit_affine_map(problem.family(), problem.points() * subspace.basis());
        return solve_coefficients(problem, subspace, affine);
    }

    /// d r_i / d U_jk stored as an M x (m n) matrix; column j + m k.
    class JacobianTensor
    {
    public:
        JacobianTensor(Eigen::MatrixXd flat, Index m, Index n)
            : _flat(std::move(flat)), _m(m), _n(n)
        { }

        const Eigen::MatrixXd &flat() const { return _flat; }
        Index samples() const { return _flat.rows(); }
        Index ambient_dimension() const { return _m; }
        Index dimension() const { return _n; }

        /// The m x n slice J_i for sample i.
        Eigen::MatrixXd slice(Index i) const
        {
            return Eigen::Map<const Eigen::MatrixXd>(Eigen::VectorXd(_flat.row(i).transpose()).data(), _m, _n);
        }

        double operator()(Index i, Index j, Index k) const { return _flat(i, j + _m * k); }

    private:
        Eigen::MatrixXd _flat;
        Index _m;
        Index _n;
    };

    /// Golub-Pereyra Jacobian
    ///   J_{., j, k} = -[ P^perp dV c + V^{+T} dV^T r ],   dV = dV / dU_jk,
    /// using the SVD already held by the state. The affine map is fixed.
    inline JacobianTensor jacobian(const ProjectedProblem &problem, const VarproState &state)
    {
        if(state.rank == 0)
            throw std::runtime_error("jacobian: design has rank zero");

        const Index m = problem.ambient_dimension();
        const Index n = state.subspace.dimension();
        const Eigen::MatrixXd &x = problem.points();
        const Eigen::MatrixXd &q = state.range_basis;

        const DesignDerivative deriv = build_design_derivative(x, state.subspace, state.design.index_set,
                                                               state.design.family, state.design.affine);

        const Eigen::MatrixXd weighted_points = state.residual.asDiagonal() * x;
        const Eigen::VectorXd inverse_sigma = state.singular_values.cwiseInverse();

        Eigen::MatrixXd flat(problem.samples(), m * n);
        for(Index l = 0; l < n; ++l)
        {
            const Eigen::MatrixXd &coordinate = deriv.coordinate(l);

            // Column k: dV_kl c = x_{.k} .* (D_l c), then projected off range(V).
            const Eigen::VectorXd moved = coordinate * state.coefficients;
            Eigen::MatrixXd first = moved.asDiagonal() * x;
            first -= q * (q.transpose() * first);

            // Column k: V^{+T} dV_kl^T r with V^{+T} = Q S^{-1} W^T.
            const Eigen::MatrixXd transposed = coordinate.transpose() * weighted_points;
            const Eigen::MatrixXd second = q * (inverse_sigma.asDiagonal() * (state.right_basis.transpose() * transposed));

            flat.middleCols(l * m, m) = -(first + second);
        }
        return JacobianTensor(std::move(flat), m, n);
    }

    /// G = sum_i J_i r_i, the gradient of 1/2 ||r(U)||^2, as an m x n matrix.
    inline Eigen::MatrixXd gradient(const JacobianTensor &jac, const Eigen::Ref<const Eigen::VectorXd> &residual)
    {
        if(residual.size() != jac.samples())
            throw std::invalid_argument("gradient: residual length does not match Jacobian");
        const Eigen::VectorXd g = jac.flat().transpose() * residual;
        return Eigen::Map<const Eigen::MatrixXd>(g.data(), jac.ambient_dimension(), jac.dimension());
    }
}

#endif
