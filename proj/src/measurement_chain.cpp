#include "opatomo/measurement_chain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <thread>
#include <vector>

#include "opatomo/errors.hpp"

namespace opatomo {

namespace {

constexpr double kMinTransmittance = 1e-12;

void require(bool ok, const char* field, const char* what)
{
    if (!ok)
        throw InvalidArgument(std::string(field) + ": " + what);
}

bool in_unit_interval(double v) { return v > 0.0 && v <= 1.0; }

double draw_gain(const ChainParams& params, RngStream& rng)
{
    return std::max(0.0, params.gain + params.gain_std * rng.normal());
}

} // namespace

void ChainParams::validate() const
{
    require(std::isfinite(gain) && gain >= 0.0, "gain", "must be finite and >= 0");
    require(gain_std >= 0.0, "gain_std", "must be >= 0");
    require(in_unit_interval(alpha_in), "alpha_in", "must lie in (0, 1]");
    require(delta_in >= 0.0, "delta_in", "must be >= 0");
    require(in_unit_interval(alpha_out), "alpha_out", "must lie in (0, 1]");
    require(delta_alpha_out >= 0.0, "delta_alpha_out", "must be >= 0");
    require(delta_out >= 0.0, "delta_out", "must be >= 0");
    require(std::isfinite(displacement), "displacement", "must be finite");
    if (const auto* h = std::get_if<HomodyneDetector>(&detector)) {
        require(h->lo_strength > 0.0 && std::isfinite(h->lo_strength), "lo_strength", "must be > 0");
        require(in_unit_interval(h->efficiency), "efficiency", "must lie in (0, 1]");
        require(h->vacuum_noise_std >= 0.0, "vacuum_noise_std", "must be >= 0");
        require(h->electronic_noise_std >= 0.0, "electronic_noise_std", "must be >= 0");
    }
}

double ChainParams::displacement_in_quadrature() const
{
    return displacement / (std::exp(gain) * std::sqrt(alpha_in));
}

double intensity_shot(double x, double p, const ChainParams& params, RngStream& rng)
{
    const double sqrt_in = std::sqrt(params.alpha_in);
    const double X = sqrt_in * x + params.delta_in * rng.normal();
    const double P = sqrt_in * p + params.delta_in * rng.normal();
    const double g = draw_gain(params, rng);
    const double alpha =
        std::clamp(params.alpha_out + params.delta_alpha_out * rng.normal(), kMinTransmittance, 1.0);
    const double noise = params.delta_out * rng.normal();
    const double amplified = std::exp(g) * X + params.displacement;
    const double attenuated = std::exp(-g) * P;
    return alpha * (amplified * amplified + attenuated * attenuated - 0.5) + noise;
}

double homodyne_shot(double x, const ChainParams& params, RngStream& rng)
{
    const auto& det = std::get<HomodyneDetector>(params.detector);
    const double X = std::sqrt(params.alpha_in) * x + params.delta_in * rng.normal();
    const double g = draw_gain(params, rng);
    const double noise = std::sqrt(1.0 - det.efficiency) * det.vacuum_noise_std * rng.normal()
        + det.electronic_noise_std * rng.normal();
    return (std::sqrt(det.efficiency) * (std::exp(g) * X + params.displacement) + noise) * det.lo_strength;
}

ShotBatch run_batch(const SourceState& state, const ChainParams& params, Eigen::Index shots, std::uint64_t seed,
                    unsigned threads)
{
    if (shots < 1)
        throw InvalidArgument("shots: must be >= 1");
    params.validate();

    ShotBatch batch;
    batch.params = params;
    batch.seed = seed;
    batch.outcomes.resize(shots);

    const Eigen::Index blocks = (shots + kShotBlock - 1) / kShotBlock;
    const bool homodyne = params.is_homodyne();
    auto run_block = [&](Eigen::Index b) {
        RngStream state_rng(seed, 2 * static_cast<std::uint64_t>(b));
        RngStream noise_rng(seed, 2 * static_cast<std::uint64_t>(b) + 1);
        const Eigen::Index end = std::min(shots, (b + 1) * kShotBlock);
        for (Eigen::Index i = b * kShotBlock; i < end; ++i) {
            auto [x, p] = sample_xp(state, state_rng);
            batch.outcomes[i] = homodyne ? homodyne_shot(x, params, noise_rng) : intensity_shot(x, p, params, noise_rng);
        }
    };

    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<Eigen::Index>(threads, blocks));
    if (threads <= 1) {
        for (Eigen::Index b = 0; b < blocks; ++b)
            run_block(b);
        return batch;
    }
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (unsigned t = 0; t < threads; ++t)
        workers.emplace_back([&, t] {
            for (Eigen::Index b = t; b < blocks; b += threads)
                run_block(b);
        });
    workers.clear();
    return batch;
}

void write_batch_csv(std::ostream& out, const ShotBatch& batch, const std::string& extra_header)
{
    const auto& p = batch.params;
    char line[512];
    std::snprintf(line, sizeof line,
                  "# seed=%llu shots=%lld detector=%s\n"
                  "# gain=%.17g gain_std=%.17g alpha_in=%.17g delta_in=%.17g alpha_out=%.17g "
                  "delta_alpha_out=%.17g delta_out=%.17g displacement=%.17g\n",
                  static_cast<unsigned long long>(batch.seed), static_cast<long long>(batch.size()),
                  p.is_homodyne() ? "homodyne" : "intensity", p.gain, p.gain_std, p.alpha_in, p.delta_in, p.alpha_out,
                  p.delta_alpha_out, p.delta_out, p.displacement);
    out << line;
    if (const auto* h = std::get_if<HomodyneDetector>(&p.detector)) {
        std::snprintf(line, sizeof line,
                      "# lo_strength=%.17g efficiency=%.17g vacuum_noise_std=%.17g electronic_noise_std=%.17g\n",
                      h->lo_strength, h->efficiency, h->vacuum_noise_std, h->electronic_noise_std);
        out << line;
    }
    if (!extra_header.empty())
        out << "# " << extra_header << '\n';
    out << "outcome\n";
    for (Eigen::Index i = 0; i < batch.size(); ++i) {
        std::snprintf(line, sizeof line, "%.17g\n", batch.outcomes[i]);
        out << line;
    }
}

Eigen::ArrayXd read_batch_outcomes(std::istream& in, std::string* header_comments)
{
    std::vector<double> values;
    std::string row;
    bool seen_header = false;
    while (std::getline(in, row)) {
        if (row.empty())
            continue;
        if (row.front() == '#') {
            if (header_comments)
                *header_comments += row.substr(row.find_first_not_of("# ") == std::string::npos
                                                   ? row.size()
                                                   : row.find_first_not_of("# "))
                    + '\n';
            continue;
        }
        if (!seen_header) {
            seen_header = true;
            if (row == "outcome")
                continue;
        }
        try {
            values.push_back(std::stod(row));
        } catch (const std::exception&) {
            throw InvalidArgument("batch file: cannot parse outcome '" + row + "'");
        }
    }
    return Eigen::Map<Eigen::ArrayXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

} // namespace opatomo
