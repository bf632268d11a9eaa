#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "opatomo/rng.hpp"

namespace opatomo {

/// Quadrature convention used throughout: vacuum variance 1/4 per quadrature,
/// so that <x^2> + <p^2> = 1/2 for vacuum.
inline constexpr double kVacuumVariance = 0.25;

/// Largest supported Fock index.
inline constexpr int kMaxFockIndex = 20;

/// One squeezed Gaussian in phase space. The squeezed axis points along
/// `squeeze_angle`; variance along it is e^{-2g}/4, along the orthogonal axis e^{2g}/4.
struct GaussianComponent {
    double weight = 1.0;
    double mean_x = 0.0;
    double mean_p = 0.0;
    double squeezing = 0.0;
    double squeeze_angle = 0.0;

    /// Component whose x-marginal (at zero measurement angle) has standard deviation `std_x`.
    static GaussianComponent with_x_std(double weight, double mean_x, double std_x);
};

struct SqueezedGaussian {
    std::vector<GaussianComponent> components;
};

struct Fock {
    int n = 0;
};

namespace detail {
struct FockTable;
}

/// Analytic description of an input state through its quadrature marginals.
/// Immutable once constructed; copies share the cached Fock tables.
class SourceState {
public:
    using Variant = std::variant<SqueezedGaussian, Fock>;

    /// Throws InvalidArgument when the invariants (weights, n <= 20, theta range) fail.
    SourceState(Variant variant, double measurement_angle = 0.0);

    static SourceState gaussian(std::vector<GaussianComponent> components, double measurement_angle = 0.0);
    static SourceState fock(int n, double measurement_angle = 0.0);

    const Variant& variant() const noexcept { return variant_; }
    double measurement_angle() const noexcept { return theta_; }
    bool is_fock() const noexcept { return std::holds_alternative<Fock>(variant_); }

    /// Mean and variance of the measured quadrature.
    double mean() const;
    double variance() const;

    /// Same state measured at a different angle.
    SourceState rotated(double measurement_angle) const;

    friend double marginal_pdf(const SourceState& state, double x);
    friend double marginal_cdf(const SourceState& state, double x);
    friend std::pair<double, double> sample_xp(const SourceState& state, RngStream& rng);

private:
    Variant variant_;
    double theta_;
    std::shared_ptr<const detail::FockTable> fock_table_;
};

/// Density of the measured quadrature.
double marginal_pdf(const SourceState& state, double x);

/// Cumulative distribution of the measured quadrature.
double marginal_cdf(const SourceState& state, double x);

/// Joint draw of the measured quadrature x (angle theta) and its conjugate p (theta + pi/2).
/// Gaussian states are sampled exactly; Fock states draw x and p independently
/// from their common marginal.
std::pair<double, double> sample_xp(const SourceState& state, RngStream& rng);

/// Normalized Hermite functions psi_0..psi_n at xi (unit-variance-1/2 convention).
std::vector<double> hermite_functions(int n, double xi);

/// Named catalog states: sq, sq_disp, mix, mix_disp, fock1, fock2, fock4.
SourceState preset(std::string_view name);
std::vector<std::string> preset_names();
bool is_preset(std::string_view name);

/// Parses "gauss:w,mx,mp,g,angle;w,mx,mp,g,angle;...", "fock:n" or a preset name.
SourceState parse_state(std::string_view text);

} // namespace opatomo
