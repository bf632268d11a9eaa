#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "opatomo/histogram.hpp"
#include "opatomo/measurement_chain.hpp"
#include "opatomo/nnls.hpp"

namespace opatomo {

enum class Method { Standard, Displaced, DoubleDisplacement, Homodyne };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

struct ReconConfig {
    Method method = Method::Displaced;
    double bin_width = 0.05;
    double extent = 6.0;                  // histogram covers [-extent, extent]
    double positivity_threshold = 0.005;  // rho
    std::optional<double> near_zero_cut;  // fold units; default 4 x noise-equivalent std at the fold

    BinGrid grid() const { return BinGrid::symmetric(bin_width, extent); }
};

/// Quadrature estimate from an intensity outcome using nominal G, alpha_in, alpha_out:
/// branch * sqrt(max(N, 0) / (e^{2G} alpha_in alpha_out)) - d / (e^G sqrt(alpha_in)).
double invert_intensity(double photons, const ChainParams& params, int branch = +1);
Eigen::ArrayXd invert_intensity(const Eigen::ArrayXd& photons, const ChainParams& params, int branch = +1);

/// Fold coordinate sqrt(max(N,0) / (e^{2G} alpha_in alpha_out)), i.e. |x + d_q| without noise.
Eigen::ArrayXd fold_coordinates(const Eigen::ArrayXd& photons, const ChainParams& params);

/// Quadrature std at the fold point caused by the post-amplification noise.
double fold_noise_std(const ChainParams& params);

/// True when the fraction of fold values below `cut` does not exceed `threshold`.
bool support_positivity_check(const Eigen::Ref<const Eigen::ArrayXd>& fold_values, double cut, double threshold);
bool support_positivity_check(const Eigen::Ref<const Eigen::ArrayXd>& fold_values, const ReconConfig& cfg,
                              const ChainParams& params);

/// Symmetric-assumption estimate: histogram of |x| mirrored onto both half-axes.
/// Each shot adds one count to its |x| bin and one to the mirror bin (total = 2N).
/// Requires a batch taken without displacement.
QuadratureHistogram standard_reconstruct(const ShotBatch& batch, const ReconConfig& cfg);

/// Single-displacement estimate; throws PositivityViolation when too much mass sits
/// near the fold point and the two-displacement method is required.
QuadratureHistogram displaced_reconstruct(const ShotBatch& batch, const ReconConfig& cfg);

/// Same estimate without the positivity check (used by sweeps reaching small d).
QuadratureHistogram displaced_histogram(const ShotBatch& batch, const ReconConfig& cfg);

/// Linear inversion of homodyne currents.
QuadratureHistogram homodyne_reconstruct(const ShotBatch& batch, const ReconConfig& cfg);

/// Fold matrix mapping 2 n1 signed bins onto n1 bins of |x| (1-based:
/// A_ij = delta_{j, n1+1-i} + delta_{j, n1+i}).
template <typename Scalar = double>
DenseMatrix<Scalar> fold_matrix_a(Eigen::Index n1)
{
    DenseMatrix<Scalar> a = DenseMatrix<Scalar>::Zero(n1, 2 * n1);
    for (Eigen::Index i = 1; i <= n1; ++i) {
        a(i - 1, n1 - i) += Scalar(1);
        a(i - 1, n1 + i - 1) += Scalar(1);
    }
    return a;
}

/// Fold matrix for |x + shift w| onto n2 bins (1-based:
/// B_ij = delta_{j, n1-shift+i} + delta_{j, n1+1-shift-i}); indices outside 1..2 n1 are dropped.
template <typename Scalar = double>
DenseMatrix<Scalar> fold_matrix_b(Eigen::Index n1, Eigen::Index n2, Eigen::Index shift)
{
    DenseMatrix<Scalar> b = DenseMatrix<Scalar>::Zero(n2, 2 * n1);
    for (Eigen::Index i = 1; i <= n2; ++i) {
        for (Eigen::Index j : {n1 - shift + i, n1 + 1 - shift - i})
            if (j >= 1 && j <= 2 * n1)
                b(i - 1, j - 1) += Scalar(1);
    }
    return b;
}

/// Result of the two-displacement unfolding: bin masses on a signed grid.
struct UnfoldResult {
    BinnedDistribution estimate;
    Eigen::Index n1 = 0;
    Eigen::Index n2 = 0;
    bool flipped = false;
    bool converged = true;
};

/// Unfolds histograms of |x| (first) and |x + shift w| (second) with a shared grid
/// starting at 0. Bins with fewer than 2 counts do not extend the support.
/// Throws InconsistentBinning when the grids differ and DegenerateSupport when a sample is empty.
UnfoldResult unfold_two_displacements(const QuadratureHistogram& folded, const QuadratureHistogram& folded_shifted,
                                      Eigen::Index shift_bins);

/// Sample-level variant: `folded` holds |x|, `folded_shifted` holds |x + shift|, shift in
/// quadrature units and a whole number of bins.
UnfoldResult unfold_two_displacements(const Eigen::Ref<const Eigen::ArrayXd>& folded,
                                      const Eigen::Ref<const Eigen::ArrayXd>& folded_shifted, double shift,
                                      double bin_width);

/// Two-batch reconstruction from intensity batches taken at displacements d1 (first)
/// and d2 (second); the result is expressed in input-quadrature coordinates.
UnfoldResult double_displacement_reconstruct(const ShotBatch& first, const ShotBatch& second, const ReconConfig& cfg);

/// Dispatches on cfg.method for single-batch methods.
BinnedDistribution reconstruct(const ShotBatch& batch, const ReconConfig& cfg);

} // namespace opatomo
