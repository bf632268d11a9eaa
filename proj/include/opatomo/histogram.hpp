#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>

#include <Eigen/Core>

#include "opatomo/source_states.hpp"

namespace opatomo {

/// Fixed-width bins [origin + i w, origin + (i+1) w), i = 0..bins-1.
struct BinGrid {
    double origin = 0.0;
    double width = 0.05;
    Eigen::Index bins = 0;

    double edge(Eigen::Index i) const { return origin + static_cast<double>(i) * width; }
    double center(Eigen::Index i) const { return origin + (static_cast<double>(i) + 0.5) * width; }
    double upper() const { return edge(bins); }

    /// Bin of `v` (left-closed), or nothing when outside the grid.
    std::optional<Eigen::Index> index_of(double v) const;

    /// Symmetric grid [-extent, extent]; extent must be a whole number of bins.
    static BinGrid symmetric(double width, double extent = 6.0);
};

using CountVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// Relative frequencies (or estimated bin masses) on a grid.
struct BinnedDistribution {
    BinGrid grid;
    Eigen::VectorXd mass;

    /// Mass divided by bin width.
    Eigen::VectorXd density() const { return mass / grid.width; }
};

/// Counts on a fixed grid. Values outside the grid are tallied in `overflow`
/// and still count towards `total`, so they lower every relative frequency.
struct QuadratureHistogram {
    BinGrid grid;
    CountVector counts;
    std::int64_t total = 0;
    std::int64_t overflow = 0;

    Eigen::VectorXd relative_frequencies() const;
    BinnedDistribution distribution() const { return {grid, relative_frequencies()}; }
};

QuadratureHistogram bin_values(const Eigen::Ref<const Eigen::ArrayXd>& values, const BinGrid& grid);

/// Exact bin probabilities H(right edge) - H(left edge) of a state on `grid`.
Eigen::VectorXd bin_probabilities(const SourceState& state, const BinGrid& grid);

/// Squared Bhattacharyya coefficient (sum_i sqrt(nu_i p_i))^2 of two mass vectors.
double fidelity(const Eigen::Ref<const Eigen::VectorXd>& nu, const Eigen::Ref<const Eigen::VectorXd>& p);

/// Fidelity of a binned estimate against the state's exact bin probabilities.
double fidelity(const BinnedDistribution& estimate, const SourceState& state);
double fidelity(const QuadratureHistogram& hist, const SourceState& state);

/// CSV rows "bin_center,relative_frequency".
void write_histogram_csv(std::ostream& out, const BinnedDistribution& dist);

} // namespace opatomo
