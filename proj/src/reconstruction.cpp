#include "opatomo/reconstruction.hpp"

#include <cmath>

#include "opatomo/errors.hpp"

namespace opatomo {

namespace {

double intensity_scale(const ChainParams& p) { return std::exp(2.0 * p.gain) * p.alpha_in * p.alpha_out; }

void require_intensity(const ShotBatch& batch, const char* method)
{
    if (batch.is_homodyne())
        throw InvalidArgument(std::string(method) + " reconstruction needs an intensity batch");
}

Eigen::Index last_occupied(const CountVector& counts)
{
    for (Eigen::Index i = counts.size(); i > 0; --i)
        if (counts[i - 1] >= 2)
            return i;
    return 0;
}

} // namespace

std::string_view to_string(Method method)
{
    switch (method) {
    case Method::Standard:
        return "standard";
    case Method::Displaced:
        return "displaced";
    case Method::DoubleDisplacement:
        return "double_displacement";
    case Method::Homodyne:
        return "homodyne";
    }
    return "unknown";
}

Method parse_method(std::string_view text)
{
    for (Method m : {Method::Standard, Method::Displaced, Method::DoubleDisplacement, Method::Homodyne})
        if (text == to_string(m))
            return m;
    throw InvalidArgument("unknown method '" + std::string(text) + "'");
}

double invert_intensity(double photons, const ChainParams& params, int branch)
{
    const double root = std::sqrt(std::max(photons, 0.0) / intensity_scale(params));
    return (branch >= 0 ? root : -root) - params.displacement_in_quadrature();
}

Eigen::ArrayXd invert_intensity(const Eigen::ArrayXd& photons, const ChainParams& params, int branch)
{
    const double sign = branch >= 0 ? 1.0 : -1.0;
    return sign * fold_coordinates(photons, params) - params.displacement_in_quadrature();
}

Eigen::ArrayXd fold_coordinates(const Eigen::ArrayXd& photons, const ChainParams& params)
{
    return (photons.max(0.0) / intensity_scale(params)).sqrt();
}

double fold_noise_std(const ChainParams& params) { return std::sqrt(params.delta_out / intensity_scale(params)); }

bool support_positivity_check(const Eigen::Ref<const Eigen::ArrayXd>& fold_values, double cut, double threshold)
{
    if (fold_values.size() == 0)
        return true;
    const auto below = (fold_values < cut).count();
    return static_cast<double>(below) <= threshold * static_cast<double>(fold_values.size());
}

bool support_positivity_check(const Eigen::Ref<const Eigen::ArrayXd>& fold_values, const ReconConfig& cfg,
                              const ChainParams& params)
{
    const double cut = cfg.near_zero_cut.value_or(4.0 * fold_noise_std(params));
    return support_positivity_check(fold_values, cut, cfg.positivity_threshold);
}

QuadratureHistogram standard_reconstruct(const ShotBatch& batch, const ReconConfig& cfg)
{
    require_intensity(batch, "standard");
    if (batch.params.displacement != 0.0)
        throw InvalidArgument("standard reconstruction requires a batch without displacement (d = 0)");
    const BinGrid grid = cfg.grid();
    const Eigen::Index half = grid.bins / 2;
    const Eigen::ArrayXd magnitudes = fold_coordinates(batch.outcomes, batch.params);

    QuadratureHistogram hist{grid, CountVector::Zero(grid.bins), 2 * batch.size(), 0};
    for (double v : magnitudes) {
        const double pos = std::floor(v / grid.width);
        if (pos >= static_cast<double>(half)) {
            hist.overflow += 2;
            continue;
        }
        const auto k = static_cast<Eigen::Index>(pos);
        ++hist.counts[half + k];
        ++hist.counts[half - 1 - k];
    }
    return hist;
}

QuadratureHistogram displaced_histogram(const ShotBatch& batch, const ReconConfig& cfg)
{
    require_intensity(batch, "displaced");
    return bin_values(invert_intensity(batch.outcomes, batch.params, +1), cfg.grid());
}

QuadratureHistogram displaced_reconstruct(const ShotBatch& batch, const ReconConfig& cfg)
{
    require_intensity(batch, "displaced");
    const Eigen::ArrayXd fold = fold_coordinates(batch.outcomes, batch.params);
    if (!support_positivity_check(fold, cfg, batch.params)) {
        const double cut = cfg.near_zero_cut.value_or(4.0 * fold_noise_std(batch.params));
        const double fraction = static_cast<double>((fold < cut).count()) / static_cast<double>(fold.size());
        throw PositivityViolation(fraction, cfg.positivity_threshold);
    }
    return bin_values(fold - batch.params.displacement_in_quadrature(), cfg.grid());
}

QuadratureHistogram homodyne_reconstruct(const ShotBatch& batch, const ReconConfig& cfg)
{
    if (!batch.is_homodyne())
        throw InvalidArgument("homodyne reconstruction needs a homodyne batch");
    const auto& p = batch.params;
    const auto& det = std::get<HomodyneDetector>(p.detector);
    const double scale = std::exp(p.gain) * det.lo_strength * std::sqrt(p.alpha_in * det.efficiency);
    const Eigen::ArrayXd estimates = batch.outcomes / scale - p.displacement_in_quadrature();
    return bin_values(estimates, cfg.grid());
}

UnfoldResult unfold_two_displacements(const QuadratureHistogram& folded, const QuadratureHistogram& folded_shifted,
                                      Eigen::Index shift_bins)
{
    const double w = folded.grid.width;
    if (std::abs(folded_shifted.grid.width - w) > 1e-12 * w || folded.grid.origin != 0.0
        || folded_shifted.grid.origin != 0.0)
        throw InconsistentBinning("folded histograms must share bin width and start at 0");
    if (shift_bins <= 0)
        throw InvalidArgument("the two displacements must differ by a positive number of bins");

    UnfoldResult result;
    Eigen::Index n1 = last_occupied(folded.counts);
    Eigen::Index n2 = last_occupied(folded_shifted.counts);
    if (n1 == 0 || n2 == 0)
        throw DegenerateSupport("a folded sample has no occupied bin");

    const QuadratureHistogram* first = &folded;
    const QuadratureHistogram* second = &folded_shifted;
    if (n1 > n2) {
        // x -> -x - shift exchanges the roles of the two samples.
        std::swap(first, second);
        std::swap(n1, n2);
        result.flipped = true;
    }
    result.n1 = n1;
    result.n2 = n2;

    Eigen::VectorXd rhs(n1 + n2);
    rhs.head(n1) = first->counts.head(n1).cast<double>() / static_cast<double>(first->total);
    rhs.tail(n2) = second->counts.head(n2).cast<double>() / static_cast<double>(second->total);

    DenseMatrix<double> system(n1 + n2, 2 * n1);
    system.topRows(n1) = fold_matrix_a<double>(n1);
    system.bottomRows(n2) = fold_matrix_b<double>(n1, n2, shift_bins);

    auto solved = solve_nnls(system, rhs);
    result.converged = solved.converged;
    Eigen::VectorXd mass = solved.solution;
    const double total = mass.sum();
    if (total > 0.0)
        mass /= total;

    BinGrid grid{-static_cast<double>(n1) * w, w, 2 * n1};
    if (result.flipped) {
        grid.origin = -(grid.origin + static_cast<double>(grid.bins) * w) - static_cast<double>(shift_bins) * w;
        mass.reverseInPlace();
    }
    result.estimate = {grid, mass};
    return result;
}

UnfoldResult unfold_two_displacements(const Eigen::Ref<const Eigen::ArrayXd>& folded,
                                      const Eigen::Ref<const Eigen::ArrayXd>& folded_shifted, double shift,
                                      double bin_width)
{
    if (!(bin_width > 0.0))
        throw InvalidArgument("bin width must be positive");
    const double ratio = shift / bin_width;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-6 * std::max(1.0, std::abs(ratio)))
        throw InvalidArgument("displacement difference must be a whole number of bins (got "
                              + std::to_string(ratio) + " bins)");
    if (folded.size() == 0 || folded_shifted.size() == 0)
        throw DegenerateSupport("a folded sample is empty");
    const double top = std::max(folded.maxCoeff(), folded_shifted.maxCoeff());
    const BinGrid grid{0.0, bin_width, static_cast<Eigen::Index>(std::floor(top / bin_width)) + 1};
    return unfold_two_displacements(bin_values(folded, grid), bin_values(folded_shifted, grid),
                                    static_cast<Eigen::Index>(rounded));
}

UnfoldResult double_displacement_reconstruct(const ShotBatch& first, const ShotBatch& second, const ReconConfig& cfg)
{
    require_intensity(first, "double-displacement");
    require_intensity(second, "double-displacement");
    ChainParams a = first.params;
    ChainParams b = second.params;
    a.displacement = b.displacement = 0.0;
    if (!(a == b))
        throw InvalidArgument("double-displacement batches must share all chain parameters except d");

    const ShotBatch* lower = &first;
    const ShotBatch* upper = &second;
    if (second.params.displacement_in_quadrature() < first.params.displacement_in_quadrature())
        std::swap(lower, upper);
    const double base = lower->params.displacement_in_quadrature();
    const double shift = upper->params.displacement_in_quadrature() - base;

    auto result = unfold_two_displacements(fold_coordinates(lower->outcomes, lower->params),
                                           fold_coordinates(upper->outcomes, upper->params), shift, cfg.bin_width);
    result.estimate.grid.origin -= base;
    return result;
}

BinnedDistribution reconstruct(const ShotBatch& batch, const ReconConfig& cfg)
{
    switch (cfg.method) {
    case Method::Standard:
        return standard_reconstruct(batch, cfg).distribution();
    case Method::Displaced:
        return displaced_reconstruct(batch, cfg).distribution();
    case Method::Homodyne:
        return homodyne_reconstruct(batch, cfg).distribution();
    case Method::DoubleDisplacement:
        break;
    }
    throw InvalidArgument("double-displacement reconstruction needs two batches");
}

} // namespace opatomo
