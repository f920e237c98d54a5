/// ridge/grassmann.hpp
///
/// Points on the Grassmann manifold G(n, R^m) represented by m x n matrices
/// with orthonormal columns, together with geodesics, tangent projection and
/// principal angles.

#ifndef RIDGE_GRASSMANN_HPP_
#define RIDGE_GRASSMANN_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace ridge
{
    using Index = Eigen::Index;

    /// Max-norm of U^T U - I.
    inline double orthonormality_error(const Eigen::Ref<const Eigen::MatrixXd> &basis)
    {
        const Index n = basis.cols();
        return (basis.transpose() * basis - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    }

    /// An n-dimensional subspace of R^m held as an orthonormal basis.
    ///
    /// Construction accepts bases whose orthonormality error is at most
    /// repair_tolerance and re-orthonormalizes anything worse than
    /// exact_tolerance; larger violations throw.
    class Subspace
    {
    public:
        static constexpr double exact_tolerance = 1e-12;
        static constexpr double repair_tolerance = 1e-8;

        Subspace() = default;

        explicit Subspace(Eigen::MatrixXd basis)
            : _basis(std::move(basis))
        {
            if(_basis.cols() < 1 || _basis.cols() > _basis.rows())
                throw std::invalid_argument("Subspace: need 1 <= n <= m, got m=" + std::to_string(_basis.rows()) +
                                            " n=" + std::to_string(_basis.cols()));
            if(!_basis.allFinite())
                throw std::invalid_argument("Subspace: basis has non-finite entries");

            const double err = orthonormality_error(_basis);
            if(err > repair_tolerance)
                throw std::invalid_argument("Subspace: columns are not orthonormal (error " + std::to_string(err) + ")");
            if(err > exact_tolerance)
                reorthonormalize();
        }

        /// Orthonormal basis for the column span of an arbitrary full-rank matrix.
        static Subspace from_span(const Eigen::Ref<const Eigen::MatrixXd> &spanning)
        {
            return Subspace(orthonormal_factor(spanning));
        }

        const Eigen::MatrixXd &basis() const { return _basis; }
        Index ambient_dimension() const { return _basis.rows(); }
        Index dimension() const { return _basis.cols(); }

    private:
        static Eigen::MatrixXd orthonormal_factor(const Eigen::Ref<const Eigen::MatrixXd> &a)
        {
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
            Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
            // Fix signs so that diag(R) >= 0; a nearly orthonormal input then
            // comes back nearly unchanged.
            const Eigen::MatrixXd &r = qr.matrixQR();
            for(Index j = 0; j < a.cols(); ++j)
                if(r(j, j) < 0)
                    q.col(j) *= -1.0;
            return q;
        }

        void reorthonormalize()
        {
            _basis = orthonormal_factor(_basis);
        }

        Eigen::MatrixXd _basis;
    };

    /// A direction Delta tangent to the manifold at some U, i.e. U^T Delta = 0.
    struct TangentDirection
    {
        Eigen::MatrixXd delta;

        /// ||U^T Delta||_max / max(1, ||Delta||_max).
        double tangency_error(const Subspace &at) const
        {
            if(delta.size() == 0)
                return 0.0;
            const double scale = std::max(1.0, delta.cwiseAbs().maxCoeff());
            return (at.basis().transpose() * delta).cwiseAbs().maxCoeff() / scale;
        }
    };

    /// Haar-uniform random subspace: thin QR of an m x n standard normal matrix.
    inline Subspace random_subspace(Index m, Index n, std::mt19937_64 &rng)
    {
        if(n < 1 || n > m)
            throw std::invalid_argument("random_subspace: need 1 <= n <= m, got m=" + std::to_string(m) +
                                        " n=" + std::to_string(n));
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::MatrixXd z(m, n);
        for(Index j = 0; j < n; ++j)
            for(Index i = 0; i < m; ++i)
                z(i, j) = normal(rng);
        return Subspace::from_span(z);
    }

    inline Subspace random_subspace(Index m, Index n, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        return random_subspace(m, n, rng);
    }

    /// Projects G onto the tangent space at U: (I - U U^T) G.
    inline TangentDirection tangent_project(const Subspace &at, const Eigen::Ref<const Eigen::MatrixXd> &g)
    {
        const Eigen::MatrixXd &u = at.basis();
        if(g.rows() != u.rows() || g.cols() != u.cols())
            throw std::invalid_argument("tangent_project: shape mismatch");
        return {g - u * (u.transpose() * g)};
    }

    /// The geodesic leaving U0 in direction Delta = Y Sigma Z^T:
    ///   U(t) = U0 Z cos(Sigma t) Z^T + Y sin(Sigma t) Z^T.
    /// The thin SVD is computed once; at() is cheap per trial step.
    class Geodesic
    {
    public:
        Geodesic(const Subspace &start, const TangentDirection &direction)
            : _start(start)
        {
            const Eigen::MatrixXd &delta = direction.delta;
            if(delta.rows() != start.ambient_dimension() || delta.cols() != start.dimension())
                throw std::invalid_argument("Geodesic: direction shape does not match subspace");

            Eigen::JacobiSVD<Eigen::MatrixXd> svd(delta, Eigen::ComputeThinU | Eigen::ComputeThinV);
            _y = svd.matrixU();
            _sigma = svd.singularValues();
            _z = svd.matrixV();
            _start_z = start.basis() * _z;
        }

        Subspace at(double t) const
        {
            if(t == 0.0)
                return _start;
            const Eigen::ArrayXd angle = _sigma.array() * t;
            const Eigen::MatrixXd moved = (_start_z * angle.cos().matrix().asDiagonal() +
                                           _y * angle.sin().matrix().asDiagonal()) *
                                          _z.transpose();
            return Subspace(moved);
        }

        const Eigen::VectorXd &singular_values() const { return _sigma; }

    private:
        Subspace _start;
        Eigen::MatrixXd _y;
        Eigen::VectorXd _sigma;
        Eigen::MatrixXd _z;
        Eigen::MatrixXd _start_z;
    };

    inline Subspace geodesic(const Subspace &start, const TangentDirection &direction, double t)
    {
        return Geodesic(start, direction).at(t);
    }

    /// All principal angles between two equal-dimension subspaces, ascending.
    ///
    /// Cosines come from the singular values of U1^T U2 (clamped to [0, 1]);
    /// angles below pi/4 are instead taken from the sines, the singular values
    /// of (I - U1 U1^T) U2, since arccos cannot resolve angles near zero.
    inline Eigen::VectorXd principal_angles(const Subspace &a, const Subspace &b)
    {
        if(a.ambient_dimension() != b.ambient_dimension() || a.dimension() != b.dimension())
            throw std::invalid_argument("principal_angles: subspaces must have the same m and n");

        const Eigen::MatrixXd &u1 = a.basis();
        const Eigen::MatrixXd &u2 = b.basis();
        const Eigen::MatrixXd cross = u1.transpose() * u2;
        const Eigen::MatrixXd residual = u2 - u1 * cross;

        // Cosines descending, sines ascending: both index angles ascending.
        Eigen::VectorXd cosines = Eigen::JacobiSVD<Eigen::MatrixXd>(cross).singularValues();
        Eigen::VectorXd sines = Eigen::JacobiSVD<Eigen::MatrixXd>(residual).singularValues().reverse();

        const Index n = cosines.size();
        Eigen::VectorXd angles(n);
        for(Index i = 0; i < n; ++i)
        {
            const double c = std::clamp(cosines(i), -1.0, 1.0);
            const double s = std::clamp(sines(i), 0.0, 1.0);
            angles(i) = (c * c >= 0.5) ? std::asin(s) : std::acos(c);
        }
        std::sort(angles.begin(), angles.end());
        return angles.cwiseMax(0.0).cwiseMin(M_PI / 2);
    }

    /// Largest principal angle in radians.
    inline double subspace_angle(const Subspace &a, const Subspace &b)
    {
        return principal_angles(a, b).maxCoeff();
    }

    /// Smallest principal angle in radians.
    inline double smallest_subspace_angle(const Subspace &a, const Subspace &b)
    {
        return principal_angles(a, b).minCoeff();
    }
}

#endif
