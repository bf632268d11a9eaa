#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "opatomo/errors.hpp"
#include "opatomo/histogram.hpp"
#include "opatomo/source_states.hpp"
#include "oracles.hpp"

using namespace opatomo;

namespace {

std::vector<SourceState> catalog()
{
    std::vector<SourceState> states;
    for (double g : {0.0, 1.0, 2.0})
        states.push_back(SourceState::gaussian({{1.0, 0.0, 0.0, g, 0.0}}));
    for (const auto& name : preset_names())
        states.push_back(preset(name));
    return states;
}

double sample_var(const std::vector<double>& v, double* mean_out = nullptr)
{
    double m = 0.0;
    for (double x : v)
        m += x;
    m /= v.size();
    double s = 0.0;
    for (double x : v)
        s += (x - m) * (x - m);
    if (mean_out)
        *mean_out = m;
    return s / (v.size() - 1);
}

} // namespace

TEST(SourceStates, PdfIntegratesToOne)
{
    for (const auto& s : catalog()) {
        const double total = oracle::simpson([&](double x) { return marginal_pdf(s, x); }, -12.0, 12.0, 40000);
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(SourceStates, CdfIsAntiderivativeOfPdf)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pick(-4.0, 4.0);
    for (const auto& s : catalog()) {
        for (int i = 0; i < 100; ++i) {
            const double x = pick(rng);
            const double integral =
                oracle::simpson([&](double t) { return marginal_pdf(s, t); }, -14.0, x, 20000);
            EXPECT_NEAR(marginal_cdf(s, x), integral, 1e-7);
        }
    }
}

TEST(SourceStates, CdfLimitsAndNan)
{
    const auto s = preset("fock2");
    EXPECT_EQ(marginal_cdf(s, -std::numeric_limits<double>::infinity()), 0.0);
    EXPECT_EQ(marginal_cdf(s, std::numeric_limits<double>::infinity()), 1.0);
    EXPECT_THROW(marginal_cdf(s, std::nan("")), InvalidArgument);
}

TEST(SourceStates, FockPdfMatchesExplicitHermite)
{
    for (int n : {0, 1, 2, 4, 7})
        for (double x = -3.0; x <= 3.0; x += 0.37)
            EXPECT_NEAR(marginal_pdf(SourceState::fock(n), x), oracle::fock_pdf_explicit(n, x), 1e-12);
}

TEST(SourceStates, HighFockIndexStaysFinite)
{
    const auto s = SourceState::fock(kMaxFockIndex);
    const double total = oracle::simpson([&](double x) { return marginal_pdf(s, x); }, -12.0, 12.0, 40000);
    EXPECT_NEAR(total, 1.0, 1e-9);
    EXPECT_NEAR(s.variance(), (2.0 * kMaxFockIndex + 1.0) / 4.0, 1e-12);
    EXPECT_THROW(SourceState::fock(kMaxFockIndex + 1), InvalidArgument);
}

TEST(SourceStates, FockMarginalInvariantUnderRotation)
{
    const auto base = SourceState::fock(2);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> pick(-3.0, 3.0);
    for (double theta : {0.0, 0.7, M_PI / 2}) {
        const auto r = base.rotated(theta);
        for (int i = 0; i < 50; ++i) {
            const double x = pick(rng);
            EXPECT_EQ(marginal_pdf(r, x), marginal_pdf(base, x));
        }
    }
}

TEST(SourceStates, VacuumSampleVariance)
{
    const auto s = SourceState::gaussian({{1.0, 0.0, 0.0, 0.0, 0.0}});
    RngStream rng(1);
    std::vector<double> xs(1000000);
    for (auto& x : xs)
        x = sample_xp(s, rng).first;
    EXPECT_NEAR(sample_var(xs), 0.25, 0.002);
}

TEST(SourceStates, FockOneSampleMoments)
{
    const auto s = SourceState::fock(1);
    RngStream rng(2);
    std::vector<double> xs(1000000);
    for (auto& x : xs)
        x = sample_xp(s, rng).first;
    double mean = 0.0;
    const double var = sample_var(xs, &mean);
    EXPECT_NEAR(mean, 0.0, 0.005);
    EXPECT_NEAR(var, 0.75, 0.005);
}

TEST(SourceStates, SqueezedEllipse)
{
    const auto s = preset("sq");
    RngStream rng(3);
    std::vector<double> xs(1000000), ps(1000000);
    for (std::size_t i = 0; i < xs.size(); ++i)
        std::tie(xs[i], ps[i]) = sample_xp(s, rng);
    EXPECT_NEAR(sample_var(xs) / (std::exp(-2.0) / 4.0), 1.0, 0.01);
    EXPECT_NEAR(sample_var(ps) / (std::exp(2.0) / 4.0), 1.0, 0.01);
}

TEST(SourceStates, SampledHistogramMatchesPdf)
{
    for (const auto& name : preset_names()) {
        const auto s = preset(name);
        RngStream rng(derive_seed(9, name.size()));
        Eigen::ArrayXd xs(1000000);
        for (auto& x : xs)
            x = sample_xp(s, rng).first;
        EXPECT_GE(fidelity(bin_values(xs, BinGrid::symmetric(0.05)), s), 0.999) << name;
    }
}

TEST(SourceStates, MomentsMatchNumericIntegration)
{
    for (const auto& s : catalog()) {
        const double mean = oracle::simpson([&](double x) { return x * marginal_pdf(s, x); }, -12.0, 12.0, 40000);
        const double second =
            oracle::simpson([&](double x) { return x * x * marginal_pdf(s, x); }, -12.0, 12.0, 40000);
        EXPECT_NEAR(s.mean(), mean, 1e-9);
        EXPECT_NEAR(s.variance(), second - mean * mean, 1e-9);
    }
}

TEST(SourceStates, RotatedGaussianMarginal)
{
    // Squeezed along x; at theta = pi/2 the measured quadrature is the anti-squeezed one.
    const auto s = SourceState::gaussian({{1.0, 0.3, -0.2, 1.0, 0.0}}, M_PI / 2);
    EXPECT_NEAR(s.variance(), std::exp(2.0) / 4.0, 1e-12);
    EXPECT_NEAR(std::abs(s.mean()), 0.2, 1e-12);
}

TEST(SourceStates, Validation)
{
    EXPECT_THROW(SourceState::gaussian({{0.5, 0, 0, 1, 0}}), InvalidArgument);
    EXPECT_THROW(SourceState::gaussian({{1.0, 0, 0, -1, 0}}), InvalidArgument);
    EXPECT_THROW(SourceState::gaussian({{0.0, 0, 0, 1, 0}, {1.0, 0, 0, 1, 0}}), InvalidArgument);
    EXPECT_THROW(SourceState::fock(-1), InvalidArgument);
    EXPECT_THROW(SourceState::fock(1, 7.0), InvalidArgument);
    EXPECT_THROW(preset("nope"), InvalidArgument);
}

TEST(SourceStates, ParseState)
{
    const auto mix = parse_state("gauss:0.5,0.2,0,2,0;0.5,-0.2,0,1,0");
    const auto ref = preset("mix_disp");
    for (double x = -1.0; x <= 1.0; x += 0.1)
        EXPECT_NEAR(marginal_pdf(mix, x), marginal_pdf(ref, x), 1e-14);
    EXPECT_TRUE(parse_state("fock:3").is_fock());
    EXPECT_NEAR(parse_state("fock:3").variance(), 1.75, 1e-12);
    EXPECT_THROW(parse_state("fock:x"), InvalidArgument);
    EXPECT_THROW(parse_state("gauss:1,0,0"), InvalidArgument);
    EXPECT_THROW(parse_state("gauss:1,0,0,a,0"), InvalidArgument);
}

TEST(SourceStates, WithXStd)
{
    for (double sd : {0.1, 0.4, 0.5, 0.6, 1.3}) {
        const auto s = SourceState::gaussian({GaussianComponent::with_x_std(1.0, -1.0, sd)});
        EXPECT_NEAR(s.variance(), sd * sd, 1e-12);
        EXPECT_NEAR(s.mean(), -1.0, 1e-12);
    }
}
