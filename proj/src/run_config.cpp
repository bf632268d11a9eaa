#include "opatomo/run_config.hpp"

#include <json.hpp>

#include "opatomo/errors.hpp"
#include "opatomo/source_states.hpp"

namespace opatomo {

using nlohmann::json;

void RunConfig::validate() const
{
    try {
        parse_state(state);
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(std::string("state: ") + e.what());
    }
    params.validate();
    if (shots < 1)
        throw InvalidArgument("shots: must be >= 1");
    if (!(bin_width > 0.0))
        throw InvalidArgument("bin_width: must be > 0");
    try {
        recon().grid();
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(std::string("bin_width: ") + e.what());
    }
    if (output_dir.empty())
        throw InvalidArgument("output_dir: must not be empty");
}

ReconConfig RunConfig::recon() const
{
    ReconConfig cfg;
    cfg.method = method;
    cfg.bin_width = bin_width;
    return cfg;
}

std::string to_json(const RunConfig& c, int indent)
{
    const auto& p = c.params;
    json j = {
        {"state", c.state},
        {"method", std::string(to_string(c.method))},
        {"shots", c.shots},
        {"bin_width", c.bin_width},
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"G", p.gain},
        {"gain_std", p.gain_std},
        {"alpha_in", p.alpha_in},
        {"delta_in", p.delta_in},
        {"alpha_out", p.alpha_out},
        {"delta_alpha_out", p.delta_alpha_out},
        {"delta_out", p.delta_out},
        {"d", p.displacement},
        {"detector", p.is_homodyne() ? "homodyne" : "intensity"},
    };
    if (const auto* h = std::get_if<HomodyneDetector>(&p.detector)) {
        j["lo_strength"] = h->lo_strength;
        j["efficiency"] = h->efficiency;
        j["vacuum_noise_std"] = h->vacuum_noise_std;
        j["electronic_noise_std"] = h->electronic_noise_std;
    }
    return j.dump(indent);
}

RunConfig run_config_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
    if (!j.is_object())
        throw InvalidArgument("config: expected a JSON object");

    RunConfig c;
    auto& p = c.params;
    HomodyneDetector h;
    bool homodyne = false;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "state")
                c.state = value.get<std::string>();
            else if (key == "method")
                c.method = parse_method(value.get<std::string>());
            else if (key == "shots")
                c.shots = value.get<Eigen::Index>();
            else if (key == "bin_width")
                c.bin_width = value.get<double>();
            else if (key == "seed")
                c.seed = value.get<std::uint64_t>();
            else if (key == "output_dir")
                c.output_dir = value.get<std::string>();
            else if (key == "G")
                p.gain = value.get<double>();
            else if (key == "gain_std")
                p.gain_std = value.get<double>();
            else if (key == "alpha_in")
                p.alpha_in = value.get<double>();
            else if (key == "delta_in")
                p.delta_in = value.get<double>();
            else if (key == "alpha_out")
                p.alpha_out = value.get<double>();
            else if (key == "delta_alpha_out")
                p.delta_alpha_out = value.get<double>();
            else if (key == "delta_out")
                p.delta_out = value.get<double>();
            else if (key == "d")
                p.displacement = value.get<double>();
            else if (key == "detector") {
                const auto kind = value.get<std::string>();
                if (kind != "intensity" && kind != "homodyne")
                    throw InvalidArgument("must be 'intensity' or 'homodyne'");
                homodyne = kind == "homodyne";
            } else if (key == "lo_strength")
                h.lo_strength = value.get<double>();
            else if (key == "efficiency")
                h.efficiency = value.get<double>();
            else if (key == "vacuum_noise_std")
                h.vacuum_noise_std = value.get<double>();
            else if (key == "electronic_noise_std")
                h.electronic_noise_std = value.get<double>();
            else
                throw InvalidArgument("unknown key");
        } catch (const json::exception& e) {
            throw InvalidArgument(key + ": " + e.what());
        } catch (const InvalidArgument& e) {
            throw InvalidArgument(key + ": " + e.what());
        }
    }
    if (homodyne)
        p.detector = h;
    return c;
}

} // namespace opatomo
