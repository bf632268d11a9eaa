#include "opatomo/squeezing.hpp"

#include <algorithm>
#include <cmath>

#include "opatomo/errors.hpp"
#include "opatomo/nnls.hpp"

namespace opatomo {

std::vector<Eigen::Index> find_local_maxima(const BinnedDistribution& dist, int window)
{
    if (window < 1)
        throw InvalidArgument("maximum window must be >= 1");
    const auto& nu = dist.mass;
    const Eigen::Index n = nu.size();
    std::vector<Eigen::Index> maxima;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(nu[i] > 0.0))
            continue;
        bool is_max = true;
        for (Eigen::Index j = std::max<Eigen::Index>(0, i - window); j <= std::min(n - 1, i + window) && is_max; ++j) {
            if (j == i)
                continue;
            if (nu[j] > nu[i] || (j < i && nu[j] == nu[i]))
                is_max = false;
        }
        if (is_max)
            maxima.push_back(i);
    }
    std::stable_sort(maxima.begin(), maxima.end(), [&](Eigen::Index l, Eigen::Index r) {
        if (nu[l] != nu[r])
            return nu[l] > nu[r];
        return std::abs(dist.grid.center(l)) < std::abs(dist.grid.center(r));
    });
    return maxima;
}

ParabolaFit fit_parabola(const BinnedDistribution& dist, Eigen::Index center_bin, int m)
{
    if (m < 3 || m % 2 == 0)
        throw InvalidArgument("parabola fit needs an odd number of bins >= 3");
    const Eigen::Index half = m / 2;
    if (center_bin - half < 0 || center_bin + half >= dist.mass.size())
        throw OutOfRange("parabola fit window leaves the histogram");

    // Local coordinates around the centre bin make the fit independent of the grid origin.
    Eigen::MatrixXd design(m, 3);
    Eigen::VectorXd values(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const double t = static_cast<double>(k - half) * dist.grid.width;
        design.row(k) << 1.0, t, t * t;
        values[k] = dist.mass[center_bin - half + k] / dist.grid.width;
    }
    const Eigen::Vector3d q = solve_ls(design, values).solution;

    ParabolaFit fit;
    fit.m = m;
    fit.center_bin = center_bin;
    fit.a = -q[2];
    if (!(fit.a > 0.0))
        throw NotConcave("fitted parabola is not concave (a <= 0)");
    const double local_apex = q[1] / (2.0 * fit.a);
    fit.b = dist.grid.center(center_bin) + local_apex;
    fit.c = q[0] + fit.a * local_apex * local_apex;
    return fit;
}

double distillable_variance(const ParabolaFit& fit)
{
    if (!(fit.a > 0.0))
        throw NotConcave("distillable variance needs a > 0");
    if (!(fit.c > 0.0))
        throw NonPositiveApex("distillable variance needs a positive apex density");
    return fit.c / (4.0 * fit.a);
}

double loss_corrected_variance(double distillable, double alpha_in)
{
    return distillable - (1.0 - alpha_in) * 0.125;
}

Distillation distill(const BinnedDistribution& dist, int m, int window, MaximumSelection selection)
{
    auto maxima = find_local_maxima(dist, window);
    if (selection == MaximumSelection::NearestOrigin)
        std::stable_sort(maxima.begin(), maxima.end(), [&](Eigen::Index l, Eigen::Index r) {
            return std::abs(dist.grid.center(l)) < std::abs(dist.grid.center(r));
        });
    for (Eigen::Index center : maxima) {
        try {
            const auto fit = fit_parabola(dist, center, m);
            return {fit, distillable_variance(fit)};
        } catch (const NotConcave&) {
        } catch (const OutOfRange&) {
        } catch (const NonPositiveApex&) {
        }
    }
    throw NotConcave("no local maximum admits a concave parabola fit");
}

BinnedDistribution analytic_bins(const SourceState& state, const BinGrid& grid)
{
    Eigen::VectorXd mass(grid.bins);
    for (Eigen::Index i = 0; i < grid.bins; ++i)
        mass[i] = marginal_pdf(state, grid.center(i)) * grid.width;
    return {grid, mass};
}

} // namespace opatomo
