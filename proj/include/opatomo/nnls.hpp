#pragma once

// Dense least-squares and non-negative least-squares (Lawson-Hanson active set)
// for the small systems produced by the two-displacement unfolding.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "opatomo/errors.hpp"

namespace opatomo {

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct LeastSquaresSolution {
    DenseVector<Scalar> solution;
    Scalar residual_norm{};
    Eigen::Index rank = 0;
};

/// Minimizer of ||M f - b||^2 by complete orthogonal decomposition. Rank-deficient
/// systems throw SingularSystem unless `allow_rank_deficient`, in which case the
/// minimum-norm minimizer is returned.
template <typename DerivedM, typename DerivedB>
LeastSquaresSolution<typename DerivedM::Scalar> solve_ls(const Eigen::MatrixBase<DerivedM>& M,
                                                         const Eigen::MatrixBase<DerivedB>& b,
                                                         bool allow_rank_deficient = false)
{
    using Scalar = typename DerivedM::Scalar;
    if (M.rows() != b.rows())
        throw InvalidArgument("solve_ls: row count of matrix and right-hand side differ");
    LeastSquaresSolution<Scalar> out;
    if (M.cols() == 0) {
        out.solution.resize(0);
        out.residual_norm = b.norm();
        return out;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> cod(M);
    out.rank = cod.rank();
    if (out.rank < M.cols() && !allow_rank_deficient)
        throw SingularSystem("solve_ls: matrix has rank " + std::to_string(out.rank) + " < "
                             + std::to_string(M.cols()) + " columns");
    out.solution = cod.solve(b);
    out.residual_norm = (M * out.solution - b).norm();
    return out;
}

template <typename Scalar>
struct NnlsSolution {
    DenseVector<Scalar> solution;
    Scalar objective{};   // ||M f - b||^2
    bool converged = true; // false when the outer-iteration cap (10 * cols) was hit
    int iterations = 0;
};

/// min ||M f - b||^2 subject to f >= 0 (Lawson-Hanson). Among equally good
/// candidates the lowest index enters the passive set first.
template <typename DerivedM, typename DerivedB>
NnlsSolution<typename DerivedM::Scalar> solve_nnls(const Eigen::MatrixBase<DerivedM>& M,
                                                   const Eigen::MatrixBase<DerivedB>& b)
{
    using Scalar = typename DerivedM::Scalar;
    using Vector = DenseVector<Scalar>;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (M.rows() != b.rows())
        throw InvalidArgument("solve_nnls: row count of matrix and right-hand side differ");

    const Eigen::Index n = M.cols();
    NnlsSolution<Scalar> out;
    out.solution = Vector::Zero(n);
    const Vector rhs = b;
    Vector gradient = M.transpose() * rhs; // negative gradient of the objective / 2
    const Scalar scale = n > 0 ? gradient.cwiseAbs().maxCoeff() : Scalar(0);
    if (scale == Scalar(0)) {
        out.objective = rhs.squaredNorm();
        return out;
    }
    const Scalar tolerance = Scalar(1e-12) * scale;
    const int max_iterations = static_cast<int>(10 * n);

    std::vector<bool> passive(n, false);
    std::vector<bool> rejected(n, false);
    Vector& x = out.solution;

    auto passive_solve = [&](Vector& s) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index i = 0; i < n; ++i)
            if (passive[i])
                idx.push_back(i);
        Matrix sub(M.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k)
            sub.col(static_cast<Eigen::Index>(k)) = M.col(idx[k]);
        const auto ls = solve_ls(sub, rhs, true);
        s = Vector::Zero(n);
        for (std::size_t k = 0; k < idx.size(); ++k)
            s[idx[k]] = ls.solution[static_cast<Eigen::Index>(k)];
    };

    while (true) {
        Eigen::Index entering = -1;
        for (Eigen::Index i = 0; i < n; ++i)
            if (!passive[i] && !rejected[i] && gradient[i] > tolerance
                && (entering < 0 || gradient[i] > gradient[entering]))
                entering = i;
        if (entering < 0)
            break;
        if (out.iterations >= max_iterations) {
            out.converged = false;
            break;
        }
        ++out.iterations;

        passive[entering] = true;
        Vector s;
        passive_solve(s);
        if (s[entering] <= Scalar(0)) {
            // Numerically ineligible: try the next candidate without touching x.
            passive[entering] = false;
            rejected[entering] = true;
            continue;
        }
        std::fill(rejected.begin(), rejected.end(), false);

        while (true) {
            Scalar step = Scalar(1);
            Eigen::Index blocking = -1;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (passive[i] && s[i] <= Scalar(0)) {
                    const Scalar t = x[i] / (x[i] - s[i]);
                    if (blocking < 0 || t < step) {
                        step = t;
                        blocking = i;
                    }
                }
            }
            if (blocking < 0) {
                x = s;
                break;
            }
            x += step * (s - x);
            x[blocking] = Scalar(0);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (passive[i] && x[i] <= Scalar(0)) {
                    passive[i] = false;
                    x[i] = Scalar(0);
                }
            }
            passive_solve(s);
        }
        gradient = M.transpose() * (rhs - M * x);
    }
    out.objective = (M * x - rhs).squaredNorm();
    return out;
}

} // namespace opatomo
