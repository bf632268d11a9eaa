#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "opatomo/measurement_chain.hpp"
#include "opatomo/reconstruction.hpp"
#include "opatomo/source_states.hpp"
#include "opatomo/squeezing.hpp"

namespace opatomo {

/// Chain parameters that can be swept by name.
/// Names: d, G, alpha_in, delta_in, alpha_out, delta_alpha_out, delta_out, gain_std, efficiency.
void set_parameter(ChainParams& params, const std::string& name, double value);
double get_parameter(const ChainParams& params, const std::string& name);
bool is_parameter(const std::string& name);

struct SweepSpec {
    std::string state_name = "sq";
    SourceState state = preset("sq");
    std::vector<Method> methods{Method::Standard, Method::Displaced};
    std::string parameter = "d";
    std::vector<double> grid;
    ChainParams base = [] {
        ChainParams p;
        p.displacement = 100.0;
        return p;
    }();
    ReconConfig recon;
    /// Detector used by Method::Homodyne jobs (the base detector is intensity).
    HomodyneDetector homodyne{1.0, 0.5, 0.5, 0.1};
    Eigen::Index shots = 100000;
    int repeats = 8;
    std::uint64_t seed = 1;
    unsigned threads = 0;

    /// Throws InvalidArgument on an empty/unsorted grid, R < 1, or unknown parameter.
    void validate() const;
};

struct SweepRow {
    std::string parameter;
    double value = 0.0;
    std::string series;
    double mean_infidelity = 0.0;
    double std_infidelity = 0.0;
    double aux = 0.0; // experiment-specific (positivity pass fraction for displaced rows)
};

struct SweepResult {
    std::string experiment;
    std::string state_name;
    std::string hash;
    std::vector<SweepRow> rows;
    std::map<std::string, double> summary;

    /// Rows of one series for one parameter, in grid order.
    std::vector<SweepRow> series(const std::string& name, const std::string& parameter = {}) const;
};

/// Log-spaced grid of `points` values from 10^lo to 10^hi.
std::vector<double> log_grid(double lo_exponent, double hi_exponent, int points);
/// Linearly spaced grid including both ends.
std::vector<double> linear_grid(double lo, double hi, int points);

/// Default grids: d in 10^0..10^4 (25 points), G in 1..7 (25 points).
std::vector<double> default_displacement_grid();
std::vector<double> default_gain_grid();

/// Seed of repeat r; shared by every grid point and method so comparisons are paired.
std::uint64_t repeat_seed(std::uint64_t master, int repeat);

/// 1 - F of one reconstruction. Standard runs at d = 0; DoubleDisplacement splits the
/// shots over d = 0 and d snapped to a whole number of bins.
double run_infidelity(const SourceState& state, const ChainParams& params, Method method, const ReconConfig& recon,
                      Eigen::Index shots, std::uint64_t seed, bool* positivity_passed = nullptr);

/// Infidelity vs displacement; Standard is evaluated at d = 0 and repeated on every row.
SweepResult sweep_displacement(const SweepSpec& spec);

/// Infidelity vs gain. The displacement follows d(G) = d_base e^{G - G_base} so the
/// quadrature-equivalent displacement stays fixed. Summary: gsat_<method>.
SweepResult sweep_gain(const SweepSpec& spec);

/// Infidelity vs one imperfection parameter. Summary: knee (first value above twice the
/// first grid point's infidelity) and growth ratios.
SweepResult robustness_sweep(const SweepSpec& spec);

/// Homodyne vs OPA: (i) displacement sweep over spec.grid, (ii) gain sweep over
/// `gain_grid` for each efficiency, with OPA standard/displaced at the base alpha_out.
SweepResult homodyne_comparison(const SweepSpec& spec, const std::vector<double>& gain_grid,
                                const std::vector<double>& efficiencies = {1.0, 0.9, 0.5, 0.1});

struct SqueezeSpec {
    std::vector<std::string> states{"sq", "sq_disp", "mix", "mix_disp", "fock2", "fock4"};
    std::vector<int> bins{3, 5, 7, 9, 11};
    std::vector<double> alpha_in_values{0.95, 1.0};
    ChainParams base = [] {
        ChainParams p;
        p.displacement = 100.0;
        return p;
    }();
    ReconConfig recon;
    int window = 3;
    Eigen::Index shots = 100000;
    int repeats = 8;
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

struct SqueezeRow {
    std::string state;
    int m = 0;
    std::string series; // "alpha_in=<v>" or "analytic"
    double variance = 0.0;
    double variance_std = 0.0;
    double corrected = 0.0;
    double apex = 0.0;
    int failures = 0; // repeats without a concave fit
};

/// Distillable variance per state, m and alpha_in (with delta_in = 1 - alpha_in),
/// plus the noiseless analytic reference. Fock states use the maximum nearest the origin.
std::vector<SqueezeRow> squeezing_table(const SqueezeSpec& spec);

/// Smallest d in base * {1, 2, 4, ..., 64} whose pilot batch passes the positivity check.
double choose_displacement(const SourceState& state, const ChainParams& params, const ReconConfig& recon,
                           Eigen::Index pilot_shots, std::uint64_t seed);

/// Stable 8-hex-digit hash of a sweep specification.
std::string spec_hash(const SweepSpec& spec, const std::string& experiment);

void write_sweep_csv(std::ostream& out, const SweepResult& result);
void write_squeeze_csv(std::ostream& out, const std::vector<SqueezeRow>& rows);

} // namespace opatomo
