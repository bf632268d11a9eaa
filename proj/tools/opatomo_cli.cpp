// Command-line front end: simulate batches, reconstruct them, run sweeps.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "opatomo/errors.hpp"
#include "opatomo/experiments.hpp"
#include "opatomo/histogram.hpp"
#include "opatomo/measurement_chain.hpp"
#include "opatomo/reconstruction.hpp"
#include "opatomo/run_config.hpp"
#include "opatomo/source_states.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace opatomo;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitPositivity = 3;

struct Cli {
    RunConfig cfg;
    std::string method = "displaced";
    std::string detector = "intensity";
    HomodyneDetector homodyne;
    int threads = 0;
    int d_bins = -1;

    // reconstruct
    std::vector<std::string> batches;
    // simulate
    std::string out;
    // sweep
    std::string kind;
    std::string param;
    std::vector<double> grid;
    std::vector<std::string> methods;
    int repeats = 8;
    // squeeze
    std::vector<int> bins{3, 5, 7, 9, 11};
    std::vector<std::string> states;
    std::vector<double> alpha_in_values{0.95, 1.0};

    RunConfig resolved() const
    {
        RunConfig c = cfg;
        c.method = parse_method(method);
        if (detector == "homodyne")
            c.params.detector = homodyne;
        if (d_bins >= 0)
            c.params.displacement =
                d_bins * c.bin_width * std::exp(c.params.gain) * std::sqrt(c.params.alpha_in);
        c.validate();
        return c;
    }
};

std::string fnv_hex(const std::string& text)
{
    std::uint32_t h = 2166136261u;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 16777619u;
    }
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", h);
    return buf;
}

std::string file_token(const std::string& text)
{
    std::string s;
    for (char ch : text)
        s += std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' ? ch : '-';
    return s;
}

std::ofstream open_output(const fs::path& path)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + path.string());
    return f;
}

// Hash key of a config; the output directory does not change results.
std::string config_key(RunConfig c)
{
    c.output_dir = ".";
    return to_json(c, -1);
}

double sweep_reference_d(const RunConfig& c) { return c.params.displacement > 0.0 ? c.params.displacement : 100.0; }

json summary_json(const std::map<std::string, double>& summary)
{
    json j = json::object();
    for (const auto& [k, v] : summary)
        j[k] = std::isfinite(v) ? json(v) : json(nullptr);
    return j;
}

int cmd_simulate(const Cli& cli)
{
    const RunConfig c = cli.resolved();
    const auto batch = run_batch(parse_state(c.state), c.params, c.shots, c.seed, static_cast<unsigned>(cli.threads));
    const std::string compact = to_json(c, -1);
    const fs::path csv = cli.out.empty() ? fs::path(c.output_dir) / ("batch_" + fnv_hex(config_key(c)) + ".csv")
                                         : fs::path(cli.out);
    fs::path meta = csv;
    meta.replace_extension(".json");
    {
        auto f = open_output(csv);
        write_batch_csv(f, batch, "config=" + compact);
    }
    open_output(meta) << to_json(c) << '\n';
    std::cout << csv.string() << '\n' << meta.string() << '\n';
    return 0;
}

struct LoadedBatch {
    RunConfig config;
    ShotBatch batch;
};

LoadedBatch load_batch(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw InvalidArgument("batch: cannot open '" + path + "'");
    std::string header;
    Eigen::ArrayXd outcomes = read_batch_outcomes(f, &header);
    std::istringstream lines(header);
    std::string line;
    while (std::getline(lines, line))
        if (line.rfind("config=", 0) == 0) {
            RunConfig c = run_config_from_json(line.substr(7));
            return {c, ShotBatch{std::move(outcomes), c.params, c.seed}};
        }
    throw InvalidArgument("batch: '" + path + "' has no embedded config line");
}

int cmd_reconstruct(const Cli& cli)
{
    const RunConfig c = cli.resolved();
    if (cli.batches.empty())
        throw InvalidArgument("batch: at least one batch file is required");
    std::vector<LoadedBatch> loaded;
    for (const auto& path : cli.batches)
        loaded.push_back(load_batch(path));

    ReconConfig recon = c.recon();
    BinnedDistribution estimate;
    Eigen::Index shots = 0;
    if (c.method == Method::DoubleDisplacement) {
        if (loaded.size() != 2)
            throw InvalidArgument("method: double_displacement needs exactly two batches");
        estimate = double_displacement_reconstruct(loaded[0].batch, loaded[1].batch, recon).estimate;
        shots = loaded[0].batch.size() + loaded[1].batch.size();
    } else {
        if (loaded.size() != 1)
            throw InvalidArgument("method: " + std::string(to_string(c.method)) + " takes exactly one batch");
        estimate = reconstruct(loaded[0].batch, recon);
        shots = loaded[0].batch.size();
    }

    const std::string& state_text = loaded[0].config.state;
    const double f = fidelity(estimate, parse_state(state_text));
    std::string key = config_key(c);
    for (const auto& b : loaded)
        key += config_key(b.config);
    const std::string hash = fnv_hex(key);
    const std::string method(to_string(c.method));

    const fs::path csv = fs::path(c.output_dir) / ("reconstruct_" + method + "_" + hash + ".csv");
    {
        auto out = open_output(csv);
        out << "bin_center,estimated_density,method,params_hash\n";
        const Eigen::VectorXd density = estimate.density();
        char row[96];
        for (Eigen::Index i = 0; i < density.size(); ++i) {
            std::snprintf(row, sizeof row, "%.17g,%.17g,", estimate.grid.center(i), density[i]);
            out << row << method << ',' << hash << '\n';
        }
    }
    json report = {{"fidelity", f}, {"infidelity", 1.0 - f}, {"method", method}, {"N", shots},
                   {"state", state_text}, {"params_hash", hash}, {"histogram", csv.string()}};
    fs::path meta = csv;
    meta.replace_extension(".json");
    open_output(meta) << report.dump(2) << '\n';
    std::cout << report.dump(2) << '\n';
    return 0;
}

std::vector<double> robustness_grid(const RunConfig& c, const std::string& param)
{
    const double base = get_parameter(c.params, param);
    std::vector<double> factors{0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0};
    if (param == "delta_in")
        factors = {1.0, 3.0, 10.0, 30.0, 100.0};
    std::vector<double> grid;
    for (double f : factors)
        grid.push_back(f * base);
    return grid;
}

int cmd_sweep(const Cli& cli)
{
    const RunConfig c = cli.resolved();
    SweepSpec spec;
    spec.state_name = c.state;
    spec.state = parse_state(c.state);
    spec.base = c.params;
    spec.base.detector = IntensityDetector{};
    spec.base.displacement = sweep_reference_d(c);
    if (c.params.is_homodyne())
        spec.homodyne = std::get<HomodyneDetector>(c.params.detector);
    spec.recon = c.recon();
    spec.shots = c.shots;
    spec.repeats = cli.repeats;
    spec.seed = c.seed;
    spec.threads = static_cast<unsigned>(cli.threads);
    if (!cli.methods.empty()) {
        spec.methods.clear();
        for (const auto& m : cli.methods)
            spec.methods.push_back(parse_method(m));
    }

    SweepResult result;
    if (cli.kind == "displacement") {
        spec.grid = cli.grid.empty() ? default_displacement_grid() : cli.grid;
        result = sweep_displacement(spec);
    } else if (cli.kind == "gain") {
        spec.parameter = "G";
        spec.grid = cli.grid.empty() ? default_gain_grid() : cli.grid;
        result = sweep_gain(spec);
    } else if (cli.kind == "robustness") {
        if (cli.param.empty())
            throw InvalidArgument("param: robustness sweeps need --param");
        spec.parameter = cli.param;
        if (cli.methods.empty())
            spec.methods = {Method::Displaced};
        spec.grid = cli.grid.empty() ? robustness_grid(c, cli.param) : cli.grid;
        result = robustness_sweep(spec);
    } else if (cli.kind == "homodyne") {
        spec.grid = cli.grid.empty() ? default_displacement_grid() : cli.grid;
        result = homodyne_comparison(spec, default_gain_grid());
    } else {
        throw InvalidArgument("kind: unknown sweep kind '" + cli.kind + "'");
    }

    const std::string stem = result.experiment + "_" + file_token(result.state_name) + "_" + result.hash;
    const fs::path csv = fs::path(c.output_dir) / (stem + ".csv");
    {
        auto out = open_output(csv);
        write_sweep_csv(out, result);
    }
    json summary = {{"experiment", result.experiment}, {"state", result.state_name}, {"hash", result.hash},
                    {"csv", csv.string()}, {"summary", summary_json(result.summary)}};
    open_output(fs::path(c.output_dir) / (stem + ".json")) << summary.dump(2) << '\n';
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int cmd_squeeze(const Cli& cli)
{
    const RunConfig c = cli.resolved();
    SqueezeSpec spec;
    spec.states = cli.states.empty() ? std::vector<std::string>{c.state} : cli.states;
    for (const auto& s : spec.states)
        parse_state(s);
    spec.bins = cli.bins;
    spec.alpha_in_values = cli.alpha_in_values;
    spec.base = c.params;
    spec.base.detector = IntensityDetector{};
    spec.base.displacement = sweep_reference_d(c);
    spec.recon = c.recon();
    spec.shots = c.shots;
    spec.repeats = cli.repeats;
    spec.seed = c.seed;
    spec.threads = static_cast<unsigned>(cli.threads);

    std::string key = config_key(c);
    for (const auto& s : spec.states)
        key += "|" + s;
    for (int m : spec.bins)
        key += "|" + std::to_string(m);
    for (double a : spec.alpha_in_values)
        key += "|" + std::to_string(a);
    key += "|" + std::to_string(spec.repeats);
    const std::string hash = fnv_hex(key);

    const auto rows = squeezing_table(spec);
    const std::string stem =
        "squeeze_" + file_token(spec.states.size() == 1 ? spec.states.front() : std::string("multi")) + "_" + hash;
    const fs::path csv = fs::path(c.output_dir) / (stem + ".csv");
    {
        auto out = open_output(csv);
        write_squeeze_csv(out, rows);
    }
    json table = json::array();
    for (const auto& r : rows) {
        auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
        table.push_back({{"state", r.state}, {"m", r.m}, {"series", r.series}, {"V_d", num(r.variance)},
                         {"V_d_corrected", num(r.corrected)}, {"apex", num(r.apex)}, {"failed_fits", r.failures}});
    }
    json summary = {{"experiment", "squeeze"}, {"hash", hash}, {"csv", csv.string()}, {"rows", table}};
    open_output(fs::path(c.output_dir) / (stem + ".json")) << summary.dump(2) << '\n';
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int cmd_presets()
{
    std::printf("%-10s %12s %12s\n", "name", "mean", "variance");
    for (const auto& name : preset_names()) {
        const auto s = preset(name);
        std::printf("%-10s %12.6g %12.6g\n", name.c_str(), s.mean(), s.variance());
    }
    return 0;
}

void add_chain_options(CLI::App& app, Cli& cli)
{
    auto& c = cli.cfg;
    auto& p = c.params;
    app.add_option("--state", c.state, "State preset, fock:n, or gauss:w,mx,mp,g,angle;...")->capture_default_str();
    app.add_option("--method", cli.method, "standard | displaced | double_displacement | homodyne")
        ->capture_default_str();
    app.add_option("--shots,-N", c.shots, "Shots per batch")->capture_default_str();
    app.add_option("--bin_width,-w", c.bin_width, "Histogram bin width")->capture_default_str();
    app.add_option("--seed", c.seed, "Master seed")->capture_default_str();
    app.add_option("--output_dir,-o", c.output_dir, "Directory for output files")->capture_default_str();
    app.add_option("--threads", cli.threads, "Worker threads (0 = hardware)")->capture_default_str();
    app.add_option("--G", p.gain, "OPA gain")->capture_default_str();
    app.add_option("--gain_std", p.gain_std, "Per-shot gain std")->capture_default_str();
    app.add_option("--alpha_in", p.alpha_in, "Incoupling transmittance")->capture_default_str();
    app.add_option("--delta_in", p.delta_in, "Pre-amplification noise std")->capture_default_str();
    app.add_option("--alpha_out", p.alpha_out, "Outcoupling transmittance")->capture_default_str();
    app.add_option("--delta_alpha_out", p.delta_alpha_out, "Per-shot outcoupling std")->capture_default_str();
    app.add_option("--delta_out", p.delta_out, "Post-amplification noise std")->capture_default_str();
    app.add_option("--d", p.displacement, "Displacement after amplification")->capture_default_str();
    app.add_option("--d_bins", cli.d_bins, "Displacement as a whole number of input-quadrature bins (overrides --d)");
    app.add_option("--detector", cli.detector, "intensity | homodyne")
        ->check(CLI::IsMember({"intensity", "homodyne"}))
        ->capture_default_str();
    app.add_option("--lo_strength", cli.homodyne.lo_strength, "Homodyne LO strength")->capture_default_str();
    app.add_option("--efficiency", cli.homodyne.efficiency, "Homodyne efficiency")->capture_default_str();
    app.add_option("--vacuum_noise_std", cli.homodyne.vacuum_noise_std, "Homodyne vacuum noise std")
        ->capture_default_str();
    app.add_option("--electronic_noise_std", cli.homodyne.electronic_noise_std, "Homodyne electronic noise std")
        ->capture_default_str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Quadrature tomography with an optical parametric amplifier"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file; command-line options override it");
    Cli cli;
    add_chain_options(app, cli);

    auto* simulate = app.add_subcommand("simulate", "Simulate one batch of shots");
    simulate->add_option("--out", cli.out, "Explicit CSV path");
    auto* recon = app.add_subcommand("reconstruct", "Reconstruct a histogram from batch files");
    recon->add_option("--batch,-b", cli.batches, "Batch CSV (twice for double_displacement)")->required();
    auto* sweep = app.add_subcommand("sweep", "Infidelity sweeps");
    sweep->add_option("--kind", cli.kind, "displacement | gain | robustness | homodyne")
        ->required()
        ->check(CLI::IsMember({"displacement", "gain", "robustness", "homodyne"}));
    sweep->add_option("--param", cli.param, "Parameter for robustness sweeps")
        ->check(CLI::IsMember({"delta_in", "delta_out", "gain_std", "delta_alpha_out", "alpha_in", "alpha_out"}));
    sweep->add_option("--grid", cli.grid, "Explicit grid values")->delimiter(',');
    sweep->add_option("--methods", cli.methods, "Methods to compare")->delimiter(',');
    sweep->add_option("--repeats,-R", cli.repeats, "Independent repeats")->capture_default_str();
    auto* squeeze = app.add_subcommand("squeeze", "Distillable squeezing table");
    squeeze->add_option("--m", cli.bins, "Fit widths (odd)")->delimiter(',')->capture_default_str();
    squeeze->add_option("--states", cli.states, "States (default: --state)")->delimiter(',');
    squeeze->add_option("--alpha_in_values", cli.alpha_in_values, "Incoupling values")->delimiter(',');
    squeeze->add_option("--repeats,-R", cli.repeats, "Independent repeats")->capture_default_str();
    app.add_subcommand("presets", "List state presets");
    for (auto* sub : app.get_subcommands({}))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalid;
    }

    try {
        if (*simulate)
            return cmd_simulate(cli);
        if (*recon)
            return cmd_reconstruct(cli);
        if (*sweep)
            return cmd_sweep(cli);
        if (*squeeze)
            return cmd_squeeze(cli);
        return cmd_presets();
    } catch (const PositivityViolation& e) {
        std::cerr << "error: " << e.what()
                  << "\nhint: take a second batch at another displacement and rerun with --method "
                     "double_displacement --batch first.csv --batch second.csv\n";
        return kExitPositivity;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
