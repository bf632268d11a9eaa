#include "opatomo/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <ostream>
#include <thread>

#include "opatomo/errors.hpp"
#include "opatomo/rng.hpp"

namespace opatomo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string label(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// Runs body(i) for i in [0, n). Each index writes only its own slot, so the result
// does not depend on scheduling; the lowest-index exception is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body)
{
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::vector<std::exception_ptr> errors(n);
    auto guarded = [&](std::size_t i) {
        try {
            body(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            guarded(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++)
                    guarded(i);
            });
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

struct Point {
    std::string parameter;
    double value;
    std::string series;
    ChainParams params;
    Method method;
};

struct Stats {
    double mean = 0.0;
    double std = 0.0;
};

Stats stats(const std::vector<double>& v)
{
    Stats s;
    if (v.empty())
        return {kNaN, kNaN};
    for (double x : v)
        s.mean += x;
    s.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v)
            ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

std::vector<SweepRow> evaluate(const SweepSpec& spec, const std::vector<Point>& points)
{
    const auto repeats = static_cast<std::size_t>(spec.repeats);
    std::vector<double> infid(points.size() * repeats);
    std::vector<char> passed(points.size() * repeats, 1);
    parallel_for(infid.size(), spec.threads, [&](std::size_t job) {
        const Point& pt = points[job / repeats];
        const auto r = static_cast<int>(job % repeats);
        bool ok = true;
        infid[job] = run_infidelity(spec.state, pt.params, pt.method, spec.recon, spec.shots,
                                    repeat_seed(spec.seed, r), &ok);
        passed[job] = ok;
    });

    std::vector<SweepRow> rows;
    rows.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::vector<double> v(infid.begin() + i * repeats, infid.begin() + (i + 1) * repeats);
        const Stats s = stats(v);
        double pass = 0.0;
        for (std::size_t r = 0; r < repeats; ++r)
            pass += passed[i * repeats + r];
        rows.push_back({points[i].parameter, points[i].value, points[i].series, s.mean, s.std,
                        pass / static_cast<double>(repeats)});
    }
    return rows;
}

ChainParams with_detector(ChainParams p, Method method, const HomodyneDetector& homodyne)
{
    if (method == Method::Homodyne)
        p.detector = homodyne;
    else
        p.detector = IntensityDetector{};
    return p;
}

// d(G) keeping d / e^G fixed.
double scaled_displacement(const ChainParams& base, double gain)
{
    return base.displacement * std::exp(gain - base.gain);
}

// Smallest grid value whose mean is within `factor` of the last grid value's mean.
double saturation_point(const std::vector<SweepRow>& rows, double factor)
{
    if (rows.empty())
        return kNaN;
    const double target = factor * rows.back().mean_infidelity;
    for (const auto& r : rows)
        if (r.mean_infidelity <= target)
            return r.value;
    return rows.back().value;
}

double first_above(const std::vector<SweepRow>& rows, double factor)
{
    if (rows.empty())
        return kNaN;
    const double limit = factor * rows.front().mean_infidelity;
    for (const auto& r : rows)
        if (r.mean_infidelity > limit)
            return r.value;
    return kNaN;
}

SweepResult make_result(const SweepSpec& spec, const std::string& experiment)
{
    spec.validate();
    SweepResult result;
    result.experiment = experiment;
    result.state_name = spec.state_name;
    result.hash = spec_hash(spec, experiment);
    return result;
}

} // namespace

bool is_parameter(const std::string& name)
{
    for (const char* n : {"d", "G", "alpha_in", "delta_in", "alpha_out", "delta_alpha_out", "delta_out", "gain_std",
                          "efficiency"})
        if (name == n)
            return true;
    return false;
}

void set_parameter(ChainParams& p, const std::string& name, double value)
{
    if (name == "d")
        p.displacement = value;
    else if (name == "G")
        p.gain = value;
    else if (name == "alpha_in")
        p.alpha_in = value;
    else if (name == "delta_in")
        p.delta_in = value;
    else if (name == "alpha_out")
        p.alpha_out = value;
    else if (name == "delta_alpha_out")
        p.delta_alpha_out = value;
    else if (name == "delta_out")
        p.delta_out = value;
    else if (name == "gain_std")
        p.gain_std = value;
    else if (name == "efficiency") {
        if (!p.is_homodyne())
            throw InvalidArgument("efficiency applies to the homodyne detector only");
        std::get<HomodyneDetector>(p.detector).efficiency = value;
    } else
        throw InvalidArgument("unknown chain parameter '" + name + "'");
}

double get_parameter(const ChainParams& p, const std::string& name)
{
    if (name == "d")
        return p.displacement;
    if (name == "G")
        return p.gain;
    if (name == "alpha_in")
        return p.alpha_in;
    if (name == "delta_in")
        return p.delta_in;
    if (name == "alpha_out")
        return p.alpha_out;
    if (name == "delta_alpha_out")
        return p.delta_alpha_out;
    if (name == "delta_out")
        return p.delta_out;
    if (name == "gain_std")
        return p.gain_std;
    if (name == "efficiency") {
        if (!p.is_homodyne())
            throw InvalidArgument("efficiency applies to the homodyne detector only");
        return std::get<HomodyneDetector>(p.detector).efficiency;
    }
    throw InvalidArgument("unknown chain parameter '" + name + "'");
}

void SweepSpec::validate() const
{
    if (grid.empty())
        throw InvalidArgument("grid must not be empty");
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw InvalidArgument("grid must be sorted ascending");
    if (repeats < 1)
        throw InvalidArgument("repeats must be >= 1");
    if (shots < 1)
        throw InvalidArgument("shots must be >= 1");
    if (methods.empty())
        throw InvalidArgument("at least one method is required");
    if (!is_parameter(parameter))
        throw InvalidArgument("unknown sweep parameter '" + parameter + "'");
    base.validate();
}

std::vector<SweepRow> SweepResult::series(const std::string& name, const std::string& parameter) const
{
    std::vector<SweepRow> out;
    for (const auto& r : rows)
        if (r.series == name && (parameter.empty() || r.parameter == parameter))
            out.push_back(r);
    return out;
}

std::vector<double> log_grid(double lo, double hi, int points)
{
    if (points < 2)
        return {std::pow(10.0, lo)};
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i)
        g[i] = std::pow(10.0, lo + (hi - lo) * i / (points - 1));
    return g;
}

std::vector<double> linear_grid(double lo, double hi, int points)
{
    if (points < 2)
        return {lo};
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i)
        g[i] = lo + (hi - lo) * i / (points - 1);
    return g;
}

std::vector<double> default_displacement_grid() { return log_grid(0.0, 4.0, 25); }
std::vector<double> default_gain_grid() { return linear_grid(1.0, 7.0, 25); }

std::uint64_t repeat_seed(std::uint64_t master, int repeat)
{
    return derive_seed(master, static_cast<std::uint64_t>(repeat));
}

double run_infidelity(const SourceState& state, const ChainParams& params, Method method, const ReconConfig& recon,
                      Eigen::Index shots, std::uint64_t seed, bool* positivity_passed)
{
    if (positivity_passed)
        *positivity_passed = true;
    switch (method) {
    case Method::Standard: {
        ChainParams p = params;
        p.displacement = 0.0;
        return 1.0 - fidelity(standard_reconstruct(run_batch(state, p, shots, seed, 1), recon), state);
    }
    case Method::Displaced: {
        const ShotBatch batch = run_batch(state, params, shots, seed, 1);
        if (positivity_passed)
            *positivity_passed = support_positivity_check(fold_coordinates(batch.outcomes, params), recon, params);
        return 1.0 - fidelity(displaced_histogram(batch, recon), state);
    }
    case Method::Homodyne:
        return 1.0 - fidelity(homodyne_reconstruct(run_batch(state, params, shots, seed, 1), recon), state);
    case Method::DoubleDisplacement: {
        ChainParams lower = params;
        lower.displacement = 0.0;
        ChainParams upper = params;
        const double scale = std::exp(params.gain) * std::sqrt(params.alpha_in);
        const double bins = std::max(1.0, std::round(params.displacement_in_quadrature() / recon.bin_width));
        upper.displacement = bins * recon.bin_width * scale;
        const auto first = run_batch(state, lower, shots / 2, derive_seed(seed, 0), 1);
        const auto second = run_batch(state, upper, shots - shots / 2, derive_seed(seed, 1), 1);
        return 1.0 - fidelity(double_displacement_reconstruct(first, second, recon).estimate, state);
    }
    }
    throw InvalidArgument("unknown method");
}

SweepResult sweep_displacement(const SweepSpec& spec)
{
    SweepResult result = make_result(spec, "displacement");
    std::vector<Point> points;
    bool standard = false;
    for (Method m : spec.methods) {
        if (m == Method::Standard) {
            standard = true;
            ChainParams p = spec.base;
            p.displacement = 0.0;
            points.push_back({"d", 0.0, "standard", p, m});
            continue;
        }
        for (double d : spec.grid) {
            ChainParams p = with_detector(spec.base, m, spec.homodyne);
            p.displacement = d;
            points.push_back({"d", d, std::string(to_string(m)), p, m});
        }
    }
    auto rows = evaluate(spec, points);
    for (auto& r : rows) {
        if (r.series != "standard") {
            result.rows.push_back(r);
            continue;
        }
        for (double d : spec.grid) {
            SweepRow copy = r;
            copy.value = d;
            result.rows.push_back(copy);
        }
    }
    for (Method m : spec.methods) {
        const auto s = result.series(std::string(to_string(m)));
        auto best = std::min_element(s.begin(), s.end(), [](const SweepRow& a, const SweepRow& b) {
            return a.mean_infidelity < b.mean_infidelity;
        });
        result.summary["min_" + std::string(to_string(m))] = best->mean_infidelity;
        result.summary["argmin_" + std::string(to_string(m))] = best->value;
    }
    if (standard && std::find(spec.methods.begin(), spec.methods.end(), Method::Displaced) != spec.methods.end())
        result.summary["ratio_standard_displaced"] =
            result.summary["min_standard"] / result.summary["min_displaced"];
    return result;
}

SweepResult sweep_gain(const SweepSpec& spec)
{
    SweepSpec s = spec;
    s.parameter = "G";
    SweepResult result = make_result(s, "gain");
    std::vector<Point> points;
    for (Method m : spec.methods)
        for (double g : spec.grid) {
            ChainParams p = with_detector(spec.base, m, spec.homodyne);
            p.gain = g;
            p.displacement = m == Method::Standard ? 0.0 : scaled_displacement(spec.base, g);
            points.push_back({"G", g, std::string(to_string(m)), p, m});
        }
    result.rows = evaluate(s, points);
    for (Method m : spec.methods) {
        const auto rows = result.series(std::string(to_string(m)));
        result.summary["gsat_" + std::string(to_string(m))] = saturation_point(rows, 1.5);
        result.summary["gmax_" + std::string(to_string(m))] = rows.back().mean_infidelity;
        double lowest = rows.front().mean_infidelity;
        for (const auto& r : rows)
            lowest = std::min(lowest, r.mean_infidelity);
        result.summary["min_" + std::string(to_string(m))] = lowest;
    }
    return result;
}

SweepResult robustness_sweep(const SweepSpec& spec)
{
    SweepResult result = make_result(spec, "robustness_" + spec.parameter);
    std::vector<Point> points;
    for (Method m : spec.methods)
        for (double v : spec.grid) {
            ChainParams p = with_detector(spec.base, m, spec.homodyne);
            if (m == Method::Standard)
                p.displacement = 0.0;
            set_parameter(p, spec.parameter, v);
            points.push_back({spec.parameter, v, std::string(to_string(m)), p, m});
        }
    result.rows = evaluate(spec, points);
    for (Method m : spec.methods) {
        const auto rows = result.series(std::string(to_string(m)));
        const std::string name(to_string(m));
        result.summary["knee_" + name] = first_above(rows, 2.0);
        result.summary["ratio_last_first_" + name] = rows.back().mean_infidelity / rows.front().mean_infidelity;
        bool increasing = true;
        for (std::size_t i = 1; i < rows.size(); ++i)
            increasing = increasing && rows[i].mean_infidelity > rows[i - 1].mean_infidelity;
        result.summary["strictly_increasing_" + name] = increasing ? 1.0 : 0.0;
    }
    return result;
}

SweepResult homodyne_comparison(const SweepSpec& spec, const std::vector<double>& gain_grid,
                                const std::vector<double>& efficiencies)
{
    SweepResult result = make_result(spec, "homodyne");
    std::vector<Point> points;
    ChainParams standard = spec.base;
    standard.displacement = 0.0;
    points.push_back({"d", 0.0, "standard", standard, Method::Standard});
    for (Method m : {Method::Homodyne, Method::Displaced})
        for (double d : spec.grid) {
            ChainParams p = with_detector(spec.base, m, spec.homodyne);
            p.displacement = d;
            points.push_back({"d", d, std::string(to_string(m)), p, m});
        }
    for (double g : gain_grid) {
        for (double eta : efficiencies) {
            ChainParams p = with_detector(spec.base, Method::Homodyne, spec.homodyne);
            std::get<HomodyneDetector>(p.detector).efficiency = eta;
            p.gain = g;
            p.displacement = scaled_displacement(spec.base, g);
            points.push_back({"G", g, "homodyne_eta=" + label(eta), p, Method::Homodyne});
        }
        ChainParams p = spec.base;
        p.gain = g;
        p.displacement = 0.0;
        points.push_back({"G", g, "standard", p, Method::Standard});
        p.displacement = scaled_displacement(spec.base, g);
        points.push_back({"G", g, "displaced", p, Method::Displaced});
    }
    auto rows = evaluate(spec, points);
    for (auto& r : rows) {
        if (r.parameter == "d" && r.series == "standard") {
            for (double d : spec.grid) {
                SweepRow copy = r;
                copy.value = d;
                result.rows.push_back(copy);
            }
        } else {
            result.rows.push_back(r);
        }
    }

    // Flatness over d in [1, 1e3] and comparison with the displaced plateau.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double hom_mean = 0.0;
    double hom_std = 0.0;
    int count = 0;
    for (const auto& r : result.series("homodyne", "d"))
        if (r.value >= 1.0 && r.value <= 1e3) {
            lo = std::min(lo, r.mean_infidelity);
            hi = std::max(hi, r.mean_infidelity);
            hom_mean += r.mean_infidelity;
            hom_std += r.std_infidelity;
            ++count;
        }
    if (count > 0) {
        result.summary["homodyne_spread"] = hi - lo;
        result.summary["homodyne_mean"] = hom_mean / count;
        result.summary["homodyne_repeat_std"] = hom_std / count;
    }
    const auto displaced = result.series("displaced", "d");
    const auto best = std::min_element(displaced.begin(), displaced.end(), [](const SweepRow& a, const SweepRow& b) {
        return a.mean_infidelity < b.mean_infidelity;
    });
    if (best != displaced.end()) {
        result.summary["displaced_plateau"] = best->mean_infidelity;
        result.summary["displaced_plateau_std"] = best->std_infidelity;
        result.summary["argmin_displaced"] = best->value;
    }
    for (double eta : efficiencies) {
        const auto g = result.series("homodyne_eta=" + label(eta), "G");
        result.summary["gsat_homodyne_eta=" + fmt(eta)] = saturation_point(g, 1.5);
        if (!g.empty())
            result.summary["gmax_homodyne_eta=" + fmt(eta)] = g.back().mean_infidelity;
    }
    return result;
}

double choose_displacement(const SourceState& state, const ChainParams& params, const ReconConfig& recon,
                           Eigen::Index pilot_shots, std::uint64_t seed)
{
    if (!(params.displacement > 0.0))
        throw InvalidArgument("automatic displacement needs a positive starting d");
    double d = params.displacement;
    for (int k = 0; k <= 6; ++k, d *= 2.0) {
        ChainParams p = params;
        p.displacement = d;
        const auto batch = run_batch(state, p, pilot_shots, seed, 1);
        if (support_positivity_check(fold_coordinates(batch.outcomes, p), recon, p))
            return d;
    }
    return d / 2.0;
}

std::vector<SqueezeRow> squeezing_table(const SqueezeSpec& spec)
{
    if (spec.repeats < 1 || spec.shots < 1)
        throw InvalidArgument("shots and repeats must be >= 1");
    for (int m : spec.bins)
        if (m < 3 || m % 2 == 0)
            throw InvalidArgument("bin counts must be odd and >= 3");

    struct Case {
        std::string name;
        SourceState state;
        double alpha_in;
        ChainParams params;
        MaximumSelection selection;
    };
    std::vector<Case> cases;
    for (const auto& name : spec.states) {
        const SourceState state = parse_state(name);
        const auto selection = state.is_fock() ? MaximumSelection::NearestOrigin : MaximumSelection::Highest;
        for (double alpha : spec.alpha_in_values) {
            ChainParams p = spec.base;
            p.alpha_in = alpha;
            p.delta_in = 1.0 - alpha;
            p.validate();
            cases.push_back({name, state, alpha, p, selection});
        }
    }
    // Displacement per case from a pilot batch on its own seed stream.
    parallel_for(cases.size(), spec.threads, [&](std::size_t i) {
        cases[i].params.displacement = choose_displacement(cases[i].state, cases[i].params, spec.recon,
                                                           std::max<Eigen::Index>(spec.shots / 10, 1000),
                                                           derive_seed(spec.seed, 1000 + i));
    });

    const auto repeats = static_cast<std::size_t>(spec.repeats);
    const std::size_t nm = spec.bins.size();
    // variance / apex per (case, repeat, m); NaN marks a failed fit.
    std::vector<double> var(cases.size() * repeats * nm, kNaN);
    std::vector<double> apex(var.size(), kNaN);
    parallel_for(cases.size() * repeats, spec.threads, [&](std::size_t job) {
        const Case& c = cases[job / repeats];
        const auto r = static_cast<int>(job % repeats);
        const auto batch = run_batch(c.state, c.params, spec.shots, repeat_seed(spec.seed, r), 1);
        const auto dist = displaced_histogram(batch, spec.recon).distribution();
        for (std::size_t k = 0; k < nm; ++k) {
            try {
                const auto out = distill(dist, spec.bins[k], spec.window, c.selection);
                var[job * nm + k] = out.variance;
                apex[job * nm + k] = out.fit.b;
            } catch (const Error&) {
            }
        }
    });

    std::vector<SqueezeRow> rows;
    for (std::size_t s = 0; s < spec.states.size(); ++s) {
        const auto& name = spec.states[s];
        const SourceState state = parse_state(name);
        const auto reference = analytic_bins(state, spec.recon.grid());
        const auto selection = state.is_fock() ? MaximumSelection::NearestOrigin : MaximumSelection::Highest;
        for (std::size_t k = 0; k < nm; ++k) {
            for (std::size_t ci = 0; ci < cases.size(); ++ci) {
                if (cases[ci].name != name)
                    continue;
                std::vector<double> v;
                double apex_sum = 0.0;
                for (std::size_t r = 0; r < repeats; ++r) {
                    const std::size_t idx = (ci * repeats + r) * nm + k;
                    if (std::isfinite(var[idx])) {
                        v.push_back(var[idx]);
                        apex_sum += apex[idx];
                    }
                }
                const Stats st = stats(v);
                SqueezeRow row;
                row.state = name;
                row.m = spec.bins[k];
                row.series = "alpha_in=" + label(cases[ci].alpha_in);
                row.variance = st.mean;
                row.variance_std = st.std;
                row.corrected = loss_corrected_variance(st.mean, cases[ci].alpha_in);
                row.apex = v.empty() ? kNaN : apex_sum / static_cast<double>(v.size());
                row.failures = static_cast<int>(repeats - v.size());
                rows.push_back(row);
            }
            SqueezeRow row;
            row.state = name;
            row.m = spec.bins[k];
            row.series = "analytic";
            try {
                const auto out = distill(reference, spec.bins[k], spec.window, selection);
                row.variance = row.corrected = out.variance;
                row.apex = out.fit.b;
            } catch (const Error&) {
                row.variance = row.corrected = row.apex = kNaN;
                row.failures = 1;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

std::string spec_hash(const SweepSpec& spec, const std::string& experiment)
{
    std::string text = experiment + "|" + spec.state_name + "|" + spec.parameter + "|";
    for (Method m : spec.methods)
        text += std::string(to_string(m)) + ",";
    for (double v : spec.grid)
        text += fmt(v) + ",";
    const auto& p = spec.base;
    for (double v : {p.gain, p.gain_std, p.alpha_in, p.delta_in, p.alpha_out, p.delta_alpha_out, p.delta_out,
                     p.displacement, spec.recon.bin_width, spec.recon.extent, spec.recon.positivity_threshold,
                     spec.recon.near_zero_cut.value_or(-1.0), spec.homodyne.lo_strength, spec.homodyne.efficiency,
                     spec.homodyne.vacuum_noise_std, spec.homodyne.electronic_noise_std})
        text += fmt(v) + ",";
    text += std::to_string(spec.shots) + "," + std::to_string(spec.repeats) + "," + std::to_string(spec.seed);

    std::uint32_t h = 2166136261u;
    for (unsigned char c : text) {
        h ^= c;
        h *= 16777619u;
    }
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", h);
    return buf;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result)
{
    out << "parameter,value,series,mean_infidelity,std_infidelity,aux\n";
    for (const auto& r : result.rows)
        out << r.parameter << ',' << fmt(r.value) << ',' << r.series << ',' << fmt(r.mean_infidelity) << ','
            << fmt(r.std_infidelity) << ',' << fmt(r.aux) << '\n';
}

void write_squeeze_csv(std::ostream& out, const std::vector<SqueezeRow>& rows)
{
    out << "state,m,series,V_d_raw,V_d_std,V_d_corrected,apex_location,failed_fits\n";
    for (const auto& r : rows)
        out << r.state << ',' << r.m << ',' << r.series << ',' << fmt(r.variance) << ',' << fmt(r.variance_std) << ','
            << fmt(r.corrected) << ',' << fmt(r.apex) << ',' << r.failures << '\n';
}

} // namespace opatomo
