#pragma once

#include <cstdint>
#include <string>

#include "opatomo/measurement_chain.hpp"
#include "opatomo/reconstruction.hpp"

namespace opatomo {

/// Everything needed to reproduce one CLI run.
struct RunConfig {
    std::string state = "sq"; // preset name or "gauss:w,mx,mp,g,angle;..." / "fock:n"
    ChainParams params;
    Method method = Method::Displaced;
    Eigen::Index shots = 100000;
    double bin_width = 0.05;
    std::uint64_t seed = 1;
    std::string output_dir = ".";

    /// Throws InvalidArgument naming the offending field.
    void validate() const;
    ReconConfig recon() const;

    bool operator==(const RunConfig&) const = default;
};

/// JSON with every field; doubles keep full precision.
std::string to_json(const RunConfig& config, int indent = 2);

/// Missing keys keep their defaults; unknown keys and bad types throw InvalidArgument.
RunConfig run_config_from_json(const std::string& text);

} // namespace opatomo
