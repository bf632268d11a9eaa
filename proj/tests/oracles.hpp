// Independent reference computations used by the tests.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000)
{
    if (n % 2)
        ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i)
        s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Gaussian density.
inline double normal_pdf(double x, double mean, double sd)
{
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
}

// Fock marginal via the explicit physicists' Hermite polynomial (small n only):
// pdf(x) = sqrt(2/pi) / (2^n n!) H_n(sqrt2 x)^2 exp(-2x^2) under Var_vac = 1/4.
inline double fock_pdf_explicit(int n, double x)
{
    const double y = std::sqrt(2.0) * x;
    double h0 = 1.0, h1 = 2.0 * y;
    double hn = n == 0 ? h0 : h1;
    for (int k = 1; k < n; ++k) {
        hn = 2.0 * y * h1 - 2.0 * k * h0;
        h0 = h1;
        h1 = hn;
    }
    double norm = std::pow(2.0, n);
    for (int k = 2; k <= n; ++k)
        norm *= k;
    return std::sqrt(2.0 / M_PI) / norm * hn * hn * std::exp(-2.0 * x * x);
}

// Unconstrained least squares by plain gradient descent on 0.5 ||Mf - b||^2.
inline Eigen::VectorXd gradient_descent_ls(const Eigen::MatrixXd& m, const Eigen::VectorXd& b, int max_iter = 2000000)
{
    const double lipschitz = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
    const double step = 1.0 / (lipschitz * lipschitz);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(m.cols());
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd g = m.transpose() * (m * f - b);
        if (g.lpNorm<Eigen::Infinity>() < 1e-14)
            break;
        f -= step * g;
    }
    return f;
}

struct EnumeratedNnls {
    Eigen::VectorXd solution;
    double objective = std::numeric_limits<double>::infinity();
};

// Exhaustive active-set enumeration: unconstrained LS on every column subset,
// keep the best feasible one.
inline EnumeratedNnls enumerate_nnls(const Eigen::MatrixXd& m, const Eigen::VectorXd& b)
{
    const int n = static_cast<int>(m.cols());
    EnumeratedNnls best;
    for (int mask = 0; mask < (1 << n); ++mask) {
        std::vector<int> cols;
        for (int j = 0; j < n; ++j)
            if (mask & (1 << j))
                cols.push_back(j);
        Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
        if (!cols.empty()) {
            Eigen::MatrixXd sub(m.rows(), cols.size());
            for (std::size_t k = 0; k < cols.size(); ++k)
                sub.col(k) = m.col(cols[k]);
            const Eigen::VectorXd part = sub.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);
            if (part.minCoeff() < 0.0)
                continue;
            for (std::size_t k = 0; k < cols.size(); ++k)
                f[cols[k]] = part[k];
        }
        const double obj = (m * f - b).squaredNorm();
        if (obj < best.objective) {
            best.objective = obj;
            best.solution = f;
        }
    }
    return best;
}

// Folds a mass vector on 2 n1 signed bins [-n1 w, n1 w) through |x + s w| into
// `rows` bins of width w starting at 0, by evaluating each bin centre.
inline Eigen::VectorXd brute_force_fold(const Eigen::VectorXd& mass, long n1, long shift, long rows)
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(rows);
    for (long j = 0; j < 2 * n1; ++j) {
        const double centre = static_cast<double>(j - n1 + shift) + 0.5;
        const long bin = static_cast<long>(std::floor(std::abs(centre)));
        if (bin < rows)
            out[bin] += mass[j];
    }
    return out;
}

} // namespace oracle
