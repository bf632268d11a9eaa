#pragma once

#include <vector>

#include <Eigen/Core>

#include "opatomo/histogram.hpp"

namespace opatomo {

/// Parabola p(x) = -a (x - b)^2 + c fitted to m consecutive bins in density units.
struct ParabolaFit {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    int m = 0;
    Eigen::Index center_bin = 0;
};

/// Local maxima with a +-window neighbourhood. Plateaus report their leftmost bin.
/// Ordered by mass (descending); ties go to the bin closest to the origin.
std::vector<Eigen::Index> find_local_maxima(const BinnedDistribution& dist, int window);

/// Ordinary least-squares parabola through the m bins centred on `center_bin`.
/// Throws OutOfRange when the bins leave the grid and NotConcave when a <= 0.
ParabolaFit fit_parabola(const BinnedDistribution& dist, Eigen::Index center_bin, int m);

/// Distillable variance p(b) / |2 p''(b)| = c / (4a). Throws NonPositiveApex for c <= 0.
double distillable_variance(const ParabolaFit& fit);

/// Variance-additivity correction for incoupling loss: V_d - (1 - alpha_in) / 8.
double loss_corrected_variance(double distillable, double alpha_in);

enum class MaximumSelection {
    Highest,       // largest mass first
    NearestOrigin, // smallest |bin center| first
};

struct Distillation {
    ParabolaFit fit;
    double variance = 0.0;
};

/// Tries the maxima in selection order and returns the first concave fit.
/// Throws NotConcave when no maximum yields one.
Distillation distill(const BinnedDistribution& dist, int m, int window = 3,
                     MaximumSelection selection = MaximumSelection::Highest);

/// Noiseless analytic bins: pdf at each bin centre times the width.
BinnedDistribution analytic_bins(const SourceState& state, const BinGrid& grid);

} // namespace opatomo
