#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "opatomo/rng.hpp"
#include "opatomo/source_states.hpp"

namespace opatomo {

struct IntensityDetector {
    bool operator==(const IntensityDetector&) const = default;
};

/// Balanced detection against a local oscillator.
struct HomodyneDetector {
    double lo_strength = 1.0;          // alpha_LO
    double efficiency = 1.0;           // eta_LO, plays the role of alpha_out
    double vacuum_noise_std = 0.5;     // sigma_0
    double electronic_noise_std = 0.0; // epsilon_elec

    bool operator==(const HomodyneDetector&) const = default;
};

using Detector = std::variant<IntensityDetector, HomodyneDetector>;

/// Physical parameters of the loss / noise / gain / displacement / detection chain.
/// Defaults are the realistic stable operating point (G=4, alpha_out=0.1, ...).
struct ChainParams {
    double gain = 4.0;              // G
    double gain_std = 0.01;         // per-shot std of G
    double alpha_in = 0.99;         // incoupling transmittance
    double delta_in = 0.01;         // std of pre-amplification noise
    double alpha_out = 0.1;         // outcoupling transmittance
    double delta_alpha_out = 1e-3;  // per-shot std of alpha_out
    double delta_out = 3.0;         // std of post-amplification noise
    double displacement = 0.0;      // d, amplified-quadrature units
    Detector detector = IntensityDetector{};

    bool is_homodyne() const noexcept { return std::holds_alternative<HomodyneDetector>(detector); }

    /// Throws InvalidArgument naming the offending field.
    void validate() const;

    /// Displacement expressed in input-quadrature units, d / (e^G sqrt(alpha_in)).
    double displacement_in_quadrature() const;

    bool operator==(const ChainParams&) const = default;
};

/// Photon number registered by the intensity detector for input quadratures (x, p).
/// Every shot draws the same sequence of standard normals (noise_x, noise_p, gain,
/// alpha_out, noise_out) regardless of which std is zero, so runs differing only in a
/// noise magnitude stay paired.
double intensity_shot(double x, double p, const ChainParams& params, RngStream& rng);

/// Photocurrent difference of the homodyne detector; affine in x.
double homodyne_shot(double x, const ChainParams& params, RngStream& rng);

/// Raw outcomes of N independent shots together with their provenance.
struct ShotBatch {
    Eigen::ArrayXd outcomes;
    ChainParams params;
    std::uint64_t seed = 0;

    Eigen::Index size() const noexcept { return outcomes.size(); }
    bool is_homodyne() const noexcept { return params.is_homodyne(); }
};

/// Shots per independently seeded block. Block b draws the state from stream 2b and
/// the chain noise from stream 2b+1, so partitioning never changes the outcome.
inline constexpr Eigen::Index kShotBlock = 4096;

/// Runs N shots. `threads` = 0 picks the hardware concurrency; results do not depend on it.
ShotBatch run_batch(const SourceState& state, const ChainParams& params, Eigen::Index shots, std::uint64_t seed,
                    unsigned threads = 0);

/// CSV: '#'-prefixed header lines with parameters and seed, then "outcome" and one value per line.
void write_batch_csv(std::ostream& out, const ShotBatch& batch, const std::string& extra_header = {});

/// Reads the outcome column of a batch CSV; header comments are returned verbatim (without '#').
Eigen::ArrayXd read_batch_outcomes(std::istream& in, std::string* header_comments = nullptr);

} // namespace opatomo
