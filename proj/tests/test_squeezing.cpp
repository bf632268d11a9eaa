#include <cmath>

#include <gtest/gtest.h>

#include "opatomo/errors.hpp"
#include "opatomo/squeezing.hpp"
#include "oracles.hpp"

using namespace opatomo;

namespace {

// Bins of width w whose centres are mu + (k - half) w, filled with pdf(centre) * w.
BinnedDistribution centred_gaussian_bins(double mu, double sigma, double w, Eigen::Index bins = 41)
{
    const Eigen::Index half = bins / 2;
    BinGrid g{mu - (static_cast<double>(half) + 0.5) * w, w, bins};
    Eigen::VectorXd mass(bins);
    for (Eigen::Index i = 0; i < bins; ++i)
        mass[i] = oracle::normal_pdf(g.center(i), mu, sigma) * w;
    return {g, mass};
}

BinnedDistribution from_counts(std::initializer_list<double> counts)
{
    Eigen::VectorXd m(counts.size());
    Eigen::Index i = 0;
    for (double c : counts)
        m[i++] = c;
    return {BinGrid{0.0, 1.0, m.size()}, m};
}

const double kSigma = std::exp(-1.0) / 2.0;

} // namespace

TEST(LocalMaxima, Examples)
{
    EXPECT_EQ(find_local_maxima(from_counts({1, 3, 1}), 3), std::vector<Eigen::Index>{1});
    EXPECT_EQ(find_local_maxima(from_counts({1, 3, 3, 1}), 3), std::vector<Eigen::Index>{1});
    EXPECT_TRUE(find_local_maxima(from_counts({0, 0, 0}), 3).empty());
    EXPECT_THROW(find_local_maxima(from_counts({1}), 0), InvalidArgument);
}

TEST(LocalMaxima, OrderedByMassThenOrigin)
{
    // Peaks at bins 1 and 7 (equal mass) and 4 (smaller); grid centred on zero.
    auto d = from_counts({0, 5, 0, 0, 3, 0, 0, 5, 0});
    d.grid.origin = -4.5;
    const auto m = find_local_maxima(d, 1);
    ASSERT_EQ(m.size(), 3u);
    EXPECT_EQ(m[0], 1); // |centre| equal for 1 and 7; stable order keeps the left one
    EXPECT_EQ(m[1], 7);
    EXPECT_EQ(m[2], 4);
}

TEST(LocalMaxima, SampledSqueezedState)
{
    const auto s = preset("sq");
    RngStream rng(31);
    Eigen::ArrayXd xs(100000);
    for (auto& x : xs)
        x = sample_xp(s, rng).first;
    const auto dist = bin_values(xs, BinGrid::symmetric(0.05)).distribution();
    const auto m = find_local_maxima(dist, 3);
    ASSERT_FALSE(m.empty());
    EXPECT_LE(std::abs(dist.grid.center(m[0]) - s.mean()), 2 * 0.05);
    // Anything else is a tail fluctuation, far below the main peak.
    for (std::size_t k = 1; k < m.size(); ++k)
        EXPECT_LT(dist.mass[m[k]], 0.01 * dist.mass[m[0]]);
}

TEST(FitParabola, ExactRecovery)
{
    const double a = 3.5, b = 0.27, c = 2.0, w = 0.1;
    BinGrid g{-1.0, w, 20};
    Eigen::VectorXd mass(20);
    for (Eigen::Index i = 0; i < 20; ++i)
        mass[i] = (c - a * std::pow(g.center(i) - b, 2)) * w;
    for (int m : {3, 5, 7}) {
        const auto fit = fit_parabola({g, mass}, 12, m);
        EXPECT_NEAR(fit.a, a, 1e-12);
        EXPECT_NEAR(fit.b, b, 1e-12);
        EXPECT_NEAR(fit.c, c, 1e-12);
    }
}

TEST(FitParabola, Errors)
{
    const auto d = centred_gaussian_bins(0.0, kSigma, 0.05);
    EXPECT_THROW(fit_parabola(d, 20, 4), InvalidArgument);
    EXPECT_THROW(fit_parabola(d, 20, 1), InvalidArgument);
    EXPECT_THROW(fit_parabola(d, 1, 5), OutOfRange);
    EXPECT_THROW(fit_parabola(from_counts({3, 1, 3}), 1, 3), NotConcave);
}

TEST(DistillableVariance, Formula)
{
    EXPECT_DOUBLE_EQ(distillable_variance(ParabolaFit{1.0, 0.0, 2.0, 3, 0}), 0.5);
    EXPECT_THROW(distillable_variance(ParabolaFit{1.0, 0.0, -1.0, 3, 0}), NonPositiveApex);
    EXPECT_THROW(distillable_variance(ParabolaFit{0.0, 0.0, 1.0, 3, 0}), NotConcave);
}

TEST(DistillableVariance, GaussianCurvatureLimit)
{
    const double target = kSigma * kSigma / 2.0;
    const auto d = centred_gaussian_bins(0.0, kSigma, 0.05);
    const auto out = distill(d, 3);
    EXPECT_NEAR(out.variance / target, 1.0, 0.02);
    EXPECT_NEAR(out.fit.b, 0.0, 1e-12);
}

TEST(DistillableVariance, ErrorGrowsWithM)
{
    const double target = kSigma * kSigma / 2.0;
    const auto d = centred_gaussian_bins(0.0, kSigma, 0.05);
    double previous = 0.0;
    for (int m : {3, 5, 7, 9}) {
        const double err = std::abs(distill(d, m).variance - target);
        EXPECT_GE(err, previous) << m;
        previous = err;
    }
    EXPECT_GT(distill(d, 5).variance, distill(d, 3).variance);
}

TEST(DistillableVariance, ConvergesAsBinsShrink)
{
    const double target = kSigma * kSigma / 2.0;
    double previous = 1.0;
    for (double w : {0.1, 0.05, 0.025}) {
        const double err = std::abs(distill(centred_gaussian_bins(0.0, kSigma, w, 81), 3).variance - target);
        EXPECT_LT(err, previous) << w;
        previous = err;
    }
}

TEST(DistillableVariance, DisplacementInvariant)
{
    auto d = centred_gaussian_bins(0.0, kSigma, 0.05);
    const auto base = distill(d, 5);
    for (double shift : {0.05, 1.3, -7.77, 123.456}) {
        auto moved = d;
        moved.grid.origin += shift;
        const auto out = distill(moved, 5);
        EXPECT_EQ(out.variance, base.variance);
        EXPECT_EQ(out.fit.a, base.fit.a);
        EXPECT_EQ(out.fit.c, base.fit.c);
        EXPECT_NEAR(out.fit.b, base.fit.b + shift, 1e-9);
    }
}

TEST(DistillableVariance, ScaleInvariant)
{
    auto d = centred_gaussian_bins(0.3, kSigma, 0.05);
    const double base = distill(d, 3).variance;
    auto scaled = d;
    scaled.mass *= 4.0;
    EXPECT_EQ(distill(scaled, 3).variance, base);
    scaled.mass = d.mass * 0.37;
    EXPECT_NEAR(distill(scaled, 3).variance, base, 1e-15 * base);
}

TEST(DistillableVariance, LossCorrection)
{
    EXPECT_DOUBLE_EQ(loss_corrected_variance(0.1, 1.0), 0.1);
    EXPECT_DOUBLE_EQ(loss_corrected_variance(0.1, 0.92), 0.1 - 0.01);
}

TEST(Distill, FallsBackToNextMaximum)
{
    // The highest bin sits at the grid edge, so its window leaves the grid.
    auto d = from_counts({9, 1, 0, 2, 5, 2, 0});
    const auto out = distill(d, 3, 1);
    EXPECT_EQ(out.fit.center_bin, 4);
    EXPECT_THROW(distill(from_counts({9, 1, 0}), 3, 1), NotConcave);
}

TEST(Distill, NearestOriginSelection)
{
    const auto s = preset("fock2");
    const auto bins = analytic_bins(s, BinGrid::symmetric(0.05));
    const auto central = distill(bins, 3, 3, MaximumSelection::NearestOrigin);
    EXPECT_NEAR(central.fit.b, 0.0, 1e-9);
    const auto highest = distill(bins, 3, 3, MaximumSelection::Highest);
    EXPECT_GT(std::abs(highest.fit.b), 0.5); // outer lobes of |2> are taller
}

TEST(Distill, FockTwoAnalyticReference)
{
    // Regression value from the analytic bins (w = 0.05, m = 3, central maximum).
    const auto bins = analytic_bins(preset("fock2"), BinGrid::symmetric(0.05));
    const auto out = distill(bins, 3, 3, MaximumSelection::NearestOrigin);
    EXPECT_NEAR(out.variance, 0.0255352059, 1e-9);
}

TEST(AnalyticBins, PdfAtCentres)
{
    const auto s = preset("sq");
    const BinGrid g{-0.5, 0.1, 10};
    const auto b = analytic_bins(s, g);
    for (Eigen::Index i = 0; i < g.bins; ++i)
        EXPECT_DOUBLE_EQ(b.mass[i], marginal_pdf(s, g.center(i)) * 0.1);
}
