#include "opatomo/source_states.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "opatomo/errors.hpp"

namespace opatomo {

namespace detail {

// Inverse-CDF table for Fock sampling; immutable after construction.
struct FockTable {
    double lo = 0.0;
    double step = 0.0;
    std::vector<double> cdf;
};

} // namespace detail

namespace {

constexpr int kFockGridPoints = 1 << 14;

double fock_cdf_xi(int n, double xi)
{
    // F_n(xi) = F_{n-1}(xi) - psi_n psi_{n-1} / sqrt(2n), F_0 = (1 + erf xi)/2.
    auto psi = hermite_functions(n, xi);
    double value = 0.5 * std::erfc(-xi);
    for (int k = 1; k <= n; ++k)
        value -= psi[k] * psi[k - 1] / std::sqrt(2.0 * k);
    return std::clamp(value, 0.0, 1.0);
}

double fock_pdf(int n, double x)
{
    const double xi = std::numbers::sqrt2 * x;
    const double psi = hermite_functions(n, xi)[n];
    return std::numbers::sqrt2 * psi * psi;
}

std::shared_ptr<const detail::FockTable> build_fock_table(int n)
{
    auto table = std::make_shared<detail::FockTable>();
    const double half_width = std::sqrt(2.0 * n + 1.0) + 6.0;
    table->lo = -half_width;
    table->step = 2.0 * half_width / (kFockGridPoints - 1);
    table->cdf.resize(kFockGridPoints);
    for (int k = 0; k < kFockGridPoints; ++k)
        table->cdf[k] = fock_cdf_xi(n, std::numbers::sqrt2 * (table->lo + k * table->step));
    // Monotone by construction up to rounding; enforce it for the binary search.
    for (int k = 1; k < kFockGridPoints; ++k)
        table->cdf[k] = std::max(table->cdf[k], table->cdf[k - 1]);
    return table;
}

double inverse_cdf(const detail::FockTable& table, double u)
{
    const auto& cdf = table.cdf;
    u = std::clamp(u, cdf.front(), cdf.back());
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - cdf.begin()) - 1));
    k = std::min(k, cdf.size() - 2);
    const double span = cdf[k + 1] - cdf[k];
    const double t = span > 0.0 ? (u - cdf[k]) / span : 0.0;
    return table.lo + (static_cast<double>(k) + t) * table.step;
}

struct Marginal {
    double mean;
    double variance;
};

Marginal component_marginal(const GaussianComponent& c, double theta)
{
    const double rel = theta - c.squeeze_angle;
    const double vs = std::exp(-2.0 * c.squeezing) * kVacuumVariance;
    const double va = std::exp(2.0 * c.squeezing) * kVacuumVariance;
    const double cr = std::cos(rel);
    const double sr = std::sin(rel);
    return {c.mean_x * std::cos(theta) + c.mean_p * std::sin(theta), vs * cr * cr + va * sr * sr};
}

double normal_pdf(double x, double mean, double variance)
{
    const double z = x - mean;
    return std::exp(-0.5 * z * z / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

double normal_cdf(double x, double mean, double variance)
{
    return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

void require_finite(double x)
{
    if (!std::isfinite(x))
        throw InvalidArgument("quadrature value must be finite");
}

} // namespace

GaussianComponent GaussianComponent::with_x_std(double weight, double mean_x, double std_x)
{
    if (!(std_x > 0.0))
        throw InvalidArgument("standard deviation must be positive");
    // std_x = e^{-g}/2 along a squeezed x axis; wider than vacuum means the p axis is squeezed.
    const double g = -std::log(2.0 * std_x);
    GaussianComponent c;
    c.weight = weight;
    c.mean_x = mean_x;
    if (g >= 0.0) {
        c.squeezing = g;
    } else {
        c.squeezing = -g;
        c.squeeze_angle = std::numbers::pi / 2.0;
    }
    return c;
}

std::vector<double> hermite_functions(int n, double xi)
{
    std::vector<double> psi(static_cast<std::size_t>(n) + 1);
    psi[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * xi * xi);
    if (n >= 1)
        psi[1] = std::numbers::sqrt2 * xi * psi[0];
    for (int k = 1; k < n; ++k)
        psi[k + 1] = std::sqrt(2.0 / (k + 1)) * xi * psi[k] - std::sqrt(static_cast<double>(k) / (k + 1)) * psi[k - 1];
    return psi;
}

SourceState::SourceState(Variant variant, double measurement_angle)
    : variant_(std::move(variant)), theta_(measurement_angle)
{
    if (!(theta_ >= 0.0 && theta_ < 2.0 * std::numbers::pi))
        throw InvalidArgument("measurement angle must lie in [0, 2pi)");
    if (auto* fock = std::get_if<Fock>(&variant_)) {
        if (fock->n < 0 || fock->n > kMaxFockIndex)
            throw InvalidArgument("Fock index must lie in [0, 20]");
        fock_table_ = build_fock_table(fock->n);
        return;
    }
    const auto& components = std::get<SqueezedGaussian>(variant_).components;
    if (components.empty())
        throw InvalidArgument("Gaussian state needs at least one component");
    double total = 0.0;
    for (const auto& c : components) {
        if (!(c.weight > 0.0 && c.weight <= 1.0))
            throw InvalidArgument("component weights must lie in (0, 1]");
        if (!(c.squeezing >= 0.0) || !std::isfinite(c.squeezing) || !std::isfinite(c.mean_x)
            || !std::isfinite(c.mean_p) || !std::isfinite(c.squeeze_angle))
            throw InvalidArgument("component parameters must be finite with squeezing >= 0");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw InvalidArgument("component weights must sum to 1");
}

SourceState SourceState::gaussian(std::vector<GaussianComponent> components, double measurement_angle)
{
    return SourceState(SqueezedGaussian{std::move(components)}, measurement_angle);
}

SourceState SourceState::fock(int n, double measurement_angle) { return SourceState(Fock{n}, measurement_angle); }

SourceState SourceState::rotated(double measurement_angle) const
{
    SourceState copy = *this;
    if (!(measurement_angle >= 0.0 && measurement_angle < 2.0 * std::numbers::pi))
        throw InvalidArgument("measurement angle must lie in [0, 2pi)");
    copy.theta_ = measurement_angle;
    return copy;
}

double SourceState::mean() const
{
    if (is_fock())
        return 0.0;
    double m = 0.0;
    for (const auto& c : std::get<SqueezedGaussian>(variant_).components)
        m += c.weight * component_marginal(c, theta_).mean;
    return m;
}

double SourceState::variance() const
{
    if (const auto* fock = std::get_if<Fock>(&variant_))
        return (2.0 * fock->n + 1.0) * kVacuumVariance;
    const double m = mean();
    double second = 0.0;
    for (const auto& c : std::get<SqueezedGaussian>(variant_).components) {
        auto [mu, var] = component_marginal(c, theta_);
        second += c.weight * (var + mu * mu);
    }
    return second - m * m;
}

double marginal_pdf(const SourceState& state, double x)
{
    require_finite(x);
    if (const auto* fock = std::get_if<Fock>(&state.variant_))
        return fock_pdf(fock->n, x);
    double density = 0.0;
    for (const auto& c : std::get<SqueezedGaussian>(state.variant_).components) {
        auto [mu, var] = component_marginal(c, state.theta_);
        density += c.weight * normal_pdf(x, mu, var);
    }
    return density;
}

double marginal_cdf(const SourceState& state, double x)
{
    if (std::isnan(x))
        throw InvalidArgument("quadrature value must not be NaN");
    if (std::isinf(x))
        return x > 0 ? 1.0 : 0.0;
    if (const auto* fock = std::get_if<Fock>(&state.variant_))
        return fock_cdf_xi(fock->n, std::numbers::sqrt2 * x);
    double total = 0.0;
    for (const auto& c : std::get<SqueezedGaussian>(state.variant_).components) {
        auto [mu, var] = component_marginal(c, state.theta_);
        total += c.weight * normal_cdf(x, mu, var);
    }
    return total;
}

std::pair<double, double> sample_xp(const SourceState& state, RngStream& rng)
{
    if (state.fock_table_) {
        const double x = inverse_cdf(*state.fock_table_, rng.uniform());
        const double p = inverse_cdf(*state.fock_table_, rng.uniform());
        return {x, p};
    }
    const auto& components = std::get<SqueezedGaussian>(state.variant_).components;
    std::size_t pick = 0;
    if (components.size() > 1) {
        double u = rng.uniform();
        while (pick + 1 < components.size() && u >= components[pick].weight) {
            u -= components[pick].weight;
            ++pick;
        }
    }
    const auto& c = components[pick];
    const double along = rng.normal() * std::exp(-c.squeezing) * 0.5;
    const double across = rng.normal() * std::exp(c.squeezing) * 0.5;
    const double ca = std::cos(c.squeeze_angle);
    const double sa = std::sin(c.squeeze_angle);
    const double x0 = c.mean_x + along * ca - across * sa;
    const double p0 = c.mean_p + along * sa + across * ca;
    const double ct = std::cos(state.theta_);
    const double st = std::sin(state.theta_);
    return {x0 * ct + p0 * st, -x0 * st + p0 * ct};
}

SourceState preset(std::string_view name)
{
    auto squeezed = [](double weight, double mean_x, double g) {
        GaussianComponent c;
        c.weight = weight;
        c.mean_x = mean_x;
        c.squeezing = g;
        return c;
    };
    if (name == "sq")
        return SourceState::gaussian({squeezed(1.0, 0.0, 1.0)});
    if (name == "sq_disp")
        return SourceState::gaussian({squeezed(1.0, 0.5, 1.0)});
    if (name == "mix")
        return SourceState::gaussian({squeezed(0.5, 0.0, 2.0), squeezed(0.5, 0.0, 1.0)});
    if (name == "mix_disp")
        return SourceState::gaussian({squeezed(0.5, 0.2, 2.0), squeezed(0.5, -0.2, 1.0)});
    if (name == "fock1")
        return SourceState::fock(1);
    if (name == "fock2")
        return SourceState::fock(2);
    if (name == "fock4")
        return SourceState::fock(4);
    throw InvalidArgument("unknown state preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() { return {"sq", "sq_disp", "mix", "mix_disp", "fock1", "fock2", "fock4"}; }

bool is_preset(std::string_view name)
{
    auto names = preset_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

SourceState parse_state(std::string_view text)
{
    constexpr std::string_view prefix = "gauss:";
    if (text.starts_with("fock:")) {
        const std::string digits(text.substr(5));
        std::size_t used = 0;
        int n = -1;
        try {
            n = std::stoi(digits, &used);
        } catch (const std::exception&) {
        }
        if (used == 0 || used != digits.size())
            throw InvalidArgument("state: cannot parse Fock index '" + digits + "'");
        return SourceState::fock(n);
    }
    if (!text.starts_with(prefix))
        return preset(text);
    std::vector<GaussianComponent> components;
    std::string body(text.substr(prefix.size()));
    std::stringstream all(body);
    std::string item;
    while (std::getline(all, item, ';')) {
        if (item.empty())
            continue;
        std::stringstream fields(item);
        std::string field;
        std::vector<double> values;
        while (std::getline(fields, field, ',')) {
            try {
                values.push_back(std::stod(field));
            } catch (const std::exception&) {
                throw InvalidArgument("state: cannot parse number '" + field + "'");
            }
        }
        if (values.size() != 5)
            throw InvalidArgument("state: each component needs weight,mean_x,mean_p,g,angle");
        components.push_back({values[0], values[1], values[2], values[3], values[4]});
    }
    return SourceState::gaussian(std::move(components));
}

} // namespace opatomo
