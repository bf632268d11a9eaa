#include <random>

#include <gtest/gtest.h>

#include "opatomo/errors.hpp"
#include "opatomo/nnls.hpp"
#include "oracles.hpp"

using namespace opatomo;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols)
{
    std::normal_distribution<double> n;
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            m(i, j) = n(rng);
    return m;
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, int size)
{
    std::normal_distribution<double> n;
    Eigen::VectorXd v(size);
    for (int i = 0; i < size; ++i)
        v[i] = n(rng);
    return v;
}

void expect_kkt(const Eigen::MatrixXd& m, const Eigen::VectorXd& b, const Eigen::VectorXd& f)
{
    const Eigen::VectorXd w = m.transpose() * (b - m * f);
    const double tol = 1e-9 * std::max(1.0, (m.transpose() * b).lpNorm<Eigen::Infinity>());
    for (Eigen::Index i = 0; i < f.size(); ++i) {
        EXPECT_GE(f[i], 0.0);
        if (f[i] > 0.0)
            EXPECT_NEAR(w[i], 0.0, tol);
        else
            EXPECT_LE(w[i], tol);
    }
}

} // namespace

TEST(SolveLs, Identity)
{
    const auto r = solve_ls(Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d(1, 2, 3));
    EXPECT_TRUE(r.solution.isApprox(Eigen::Vector3d(1, 2, 3)));
    EXPECT_EQ(r.rank, 3);
}

TEST(SolveLs, OverdeterminedMean)
{
    const auto r = solve_ls(Eigen::MatrixXd::Ones(2, 1), Eigen::Vector2d(1, 3));
    EXPECT_NEAR(r.solution[0], 2.0, 1e-14);
    EXPECT_NEAR(r.residual_norm, std::sqrt(2.0), 1e-14);
}

TEST(SolveLs, MatchesGradientDescent)
{
    std::mt19937_64 rng(101);
    for (int t = 0; t < 20; ++t) {
        const auto m = random_matrix(rng, 6, 4);
        const auto b = random_vector(rng, 6);
        const auto r = solve_ls(m, b);
        const auto ref = oracle::gradient_descent_ls(m, b);
        EXPECT_LT((r.solution - ref).lpNorm<Eigen::Infinity>(), 1e-8);
    }
}

TEST(SolveLs, RankDeficient)
{
    Eigen::MatrixXd m(3, 2);
    m << 1, 2, 2, 4, 3, 6;
    EXPECT_THROW(solve_ls(m, Eigen::Vector3d(1, 1, 1)), SingularSystem);
    const auto r = solve_ls(m, Eigen::Vector3d(1, 2, 3), true);
    EXPECT_EQ(r.rank, 1);
    EXPECT_NEAR(r.residual_norm, 0.0, 1e-12);
    EXPECT_NEAR(r.solution[1], 2.0 * r.solution[0], 1e-12); // minimum norm lies along (1, 2)
}

TEST(SolveLs, ShapeMismatch)
{
    EXPECT_THROW(solve_ls(Eigen::MatrixXd::Identity(3, 3), Eigen::Vector2d(1, 2)), InvalidArgument);
}

TEST(SolveLs, FloatScalar)
{
    const auto r = solve_ls(Eigen::MatrixXf::Identity(2, 2), Eigen::Vector2f(1.5f, -2.f));
    EXPECT_FLOAT_EQ(r.solution[1], -2.f);
}

TEST(SolveNnls, Clipping)
{
    const auto r = solve_nnls(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1, -1));
    EXPECT_NEAR(r.solution[0], 1.0, 1e-14);
    EXPECT_EQ(r.solution[1], 0.0);
    EXPECT_TRUE(r.converged);
}

TEST(SolveNnls, DegenerateFace)
{
    Eigen::MatrixXd m(1, 2);
    m << 1, 1;
    const auto r = solve_nnls(m, Eigen::VectorXd::Constant(1, 2.0));
    EXPECT_NEAR((m * r.solution - Eigen::VectorXd::Constant(1, 2.0)).norm(), 0.0, 1e-14);
    EXPECT_NEAR(r.solution[0], 2.0, 1e-14); // lowest index enters first
    EXPECT_EQ(r.solution[1], 0.0);
}

TEST(SolveNnls, ZeroRightHandSide)
{
    const auto r = solve_nnls(Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d::Zero());
    EXPECT_TRUE(r.solution.isZero());
    EXPECT_EQ(r.iterations, 0);
}

TEST(SolveNnls, MatchesEnumeration)
{
    std::mt19937_64 rng(7);
    for (int t = 0; t < 200; ++t) {
        const auto m = random_matrix(rng, 8, 5);
        const auto b = random_vector(rng, 8);
        const auto r = solve_nnls(m, b);
        const auto ref = oracle::enumerate_nnls(m, b);
        EXPECT_NEAR(r.objective, ref.objective, 1e-8);
        EXPECT_TRUE(r.converged);
        expect_kkt(m, b, r.solution);
    }
}

TEST(SolveNnls, UnderdeterminedMatchesEnumeration)
{
    std::mt19937_64 rng(8);
    for (int t = 0; t < 100; ++t) {
        const auto m = random_matrix(rng, 3, 5);
        const auto b = random_vector(rng, 3);
        EXPECT_NEAR(solve_nnls(m, b).objective, oracle::enumerate_nnls(m, b).objective, 1e-8);
    }
}

TEST(SolveNnls, NotWorseThanClippedLs)
{
    std::mt19937_64 rng(9);
    for (int t = 0; t < 100; ++t) {
        const auto m = random_matrix(rng, 10, 6);
        const auto b = random_vector(rng, 10);
        const Eigen::VectorXd clipped = solve_ls(m, b).solution.cwiseMax(0.0);
        EXPECT_LE(solve_nnls(m, b).objective, (m * clipped - b).squaredNorm() + 1e-12);
    }
}

TEST(SolveNnls, RowPermutationInvariant)
{
    std::mt19937_64 rng(10);
    for (int t = 0; t < 50; ++t) {
        const auto m = random_matrix(rng, 9, 5);
        const auto b = random_vector(rng, 9);
        Eigen::PermutationMatrix<Eigen::Dynamic> perm(9);
        perm.setIdentity();
        std::shuffle(perm.indices().data(), perm.indices().data() + 9, rng);
        const Eigen::MatrixXd pm = perm * m;
        const Eigen::VectorXd pb = perm * b;
        EXPECT_LT((solve_nnls(m, b).solution - solve_nnls(pm, pb).solution).lpNorm<Eigen::Infinity>(), 1e-8);
    }
}

TEST(SolveNnls, RecoversNonNegativeTruth)
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const auto m = random_matrix(rng, 12, 6);
        Eigen::VectorXd truth(6);
        for (int i = 0; i < 6; ++i)
            truth[i] = i % 3 == 0 ? 0.0 : u(rng);
        const auto r = solve_nnls(m, m * truth);
        EXPECT_LT((r.solution - truth).lpNorm<Eigen::Infinity>(), 1e-10);
    }
}

TEST(SolveNnls, RowMajorExpressionInput)
{
    DenseMatrix<double> m(3, 2);
    m << 1, 0, 0, 1, 1, 1;
    const auto r = solve_nnls(m, Eigen::Vector3d(1, 2, 3));
    EXPECT_NEAR(r.solution[0], 1.0, 1e-12);
    EXPECT_NEAR(r.solution[1], 2.0, 1e-12);
}
