#include "opatomo/histogram.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "opatomo/errors.hpp"

namespace opatomo {

std::optional<Eigen::Index> BinGrid::index_of(double v) const
{
    const double pos = std::floor((v - origin) / width);
    if (!(pos >= 0.0) || pos >= static_cast<double>(bins))
        return std::nullopt;
    return static_cast<Eigen::Index>(pos);
}

BinGrid BinGrid::symmetric(double width, double extent)
{
    if (!(width > 0.0) || !(extent > 0.0))
        throw InvalidArgument("bin width and extent must be positive");
    const double half = extent / width;
    const auto half_bins = static_cast<Eigen::Index>(std::llround(half));
    if (std::abs(half - static_cast<double>(half_bins)) > 1e-9 * half)
        throw InvalidArgument("extent must be a whole number of bins");
    return {-static_cast<double>(half_bins) * width, width, 2 * half_bins};
}

Eigen::VectorXd QuadratureHistogram::relative_frequencies() const
{
    if (total == 0)
        return Eigen::VectorXd::Zero(counts.size());
    return counts.cast<double>() / static_cast<double>(total);
}

QuadratureHistogram bin_values(const Eigen::Ref<const Eigen::ArrayXd>& values, const BinGrid& grid)
{
    if (!(grid.width > 0.0) || !std::isfinite(grid.origin) || grid.bins < 0)
        throw InvalidArgument("bin grid needs positive width and finite origin");
    QuadratureHistogram hist{grid, CountVector::Zero(grid.bins), values.size(), 0};
    for (double v : values) {
        if (auto i = grid.index_of(v))
            ++hist.counts[*i];
        else
            ++hist.overflow;
    }
    return hist;
}

Eigen::VectorXd bin_probabilities(const SourceState& state, const BinGrid& grid)
{
    Eigen::VectorXd p(grid.bins);
    double left = marginal_cdf(state, grid.edge(0));
    for (Eigen::Index i = 0; i < grid.bins; ++i) {
        const double right = marginal_cdf(state, grid.edge(i + 1));
        p[i] = std::max(0.0, right - left);
        left = right;
    }
    return p;
}

double fidelity(const Eigen::Ref<const Eigen::VectorXd>& nu, const Eigen::Ref<const Eigen::VectorXd>& p)
{
    if (nu.size() != p.size())
        throw InvalidArgument("fidelity: mass vectors differ in length");
    const double overlap = (nu.array().max(0.0) * p.array().max(0.0)).sqrt().sum();
    return std::min(1.0, overlap * overlap);
}

double fidelity(const BinnedDistribution& estimate, const SourceState& state)
{
    return fidelity(estimate.mass, bin_probabilities(state, estimate.grid));
}

double fidelity(const QuadratureHistogram& hist, const SourceState& state)
{
    return fidelity(hist.distribution(), state);
}

void write_histogram_csv(std::ostream& out, const BinnedDistribution& dist)
{
    out << "bin_center,relative_frequency\n";
    char line[96];
    for (Eigen::Index i = 0; i < dist.grid.bins; ++i) {
        std::snprintf(line, sizeof line, "%.17g,%.17g\n", dist.grid.center(i), dist.mass[i]);
        out << line;
    }
}

} // namespace opatomo
