#pragma once

// Command implementations for the memchan CLI. Kept in a header so the test
// suite can drive them without spawning processes.

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "memchan/memchan.hpp"

namespace memchan::cli {

using json = nlohmann::ordered_json;

/// Environment variable naming the default output directory.
inline constexpr const char *output_dir_env = "MEMCHAN_OUTPUT_DIR";

/// Locale-independent real parser. Accepts decimals and fractions "a/b".
[[nodiscard]] inline double parse_real(std::string_view text) {
    auto parse_plain = [](std::string_view s) {
        double value = 0.0;
        const char *first = s.data();
        const char *last = s.data() + s.size();
        if (!s.empty() && *first == '+') {
            ++first;
        }
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc{} || ptr != last || first == last) {
            throw InvalidParameter("cannot parse number '" + std::string(s) + "'");
        }
        return value;
    };
    if (const auto slash = text.find('/'); slash != std::string_view::npos) {
        const double num = parse_plain(text.substr(0, slash));
        const double den = parse_plain(text.substr(slash + 1));
        if (den == 0.0) {
            throw InvalidParameter("zero denominator in '" + std::string(text) + "'");
        }
        return num / den;
    }
    return parse_plain(text);
}

[[nodiscard]] inline int parse_int(std::string_view text) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw InvalidParameter("cannot parse integer '" + std::string(text) + "'");
    }
    return value;
}

/// Expands "start:stop:count" into an inclusive grid; anything else is a
/// single value.
[[nodiscard]] inline std::vector<double> parse_real_list(const std::vector<std::string> &items) {
    std::vector<double> out;
    for (const std::string &item : items) {
        const auto first = item.find(':');
        if (first == std::string::npos) {
            out.push_back(parse_real(item));
            continue;
        }
        const auto second = item.find(':', first + 1);
        if (second == std::string::npos) {
            throw InvalidParameter("range '" + item + "' must look like start:stop:count");
        }
        const double lo = parse_real(std::string_view(item).substr(0, first));
        const double hi = parse_real(std::string_view(item).substr(first + 1, second - first - 1));
        const int count = parse_int(std::string_view(item).substr(second + 1));
        const std::vector<double> grid = detail::linspace(lo, hi, count);
        out.insert(out.end(), grid.begin(), grid.end());
    }
    return out;
}

/// Integers, with "lo:hi" expanding to every value in between.
[[nodiscard]] inline std::vector<int> parse_int_list(const std::vector<std::string> &items) {
    std::vector<int> out;
    for (const std::string &item : items) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            out.push_back(parse_int(item));
            continue;
        }
        const int lo = parse_int(std::string_view(item).substr(0, colon));
        const int hi = parse_int(std::string_view(item).substr(colon + 1));
        for (int v = lo; v <= hi; ++v) {
            out.push_back(v);
        }
    }
    return out;
}

/// Shortest round-trip decimal form, independent of the global locale.
[[nodiscard]] inline std::string format_real(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

struct RunConfig {
    std::string subcommand;
    std::vector<std::string> n{};
    std::string nbar = "2";
    std::string noise = "2/3";
    std::vector<std::string> memory{};
    std::vector<std::string> r{};
    std::string y = "0";
    std::string epsilon = "auto";
    std::string theta = "auto";
    int r_grid = 65;
    int y_grid = 129;
    std::string y_sign = "both";
    int n_max_guard = 12;
    std::size_t samples = 200000;
    std::uint64_t seed = 20061024;
    std::string out;
    std::string format;
    unsigned threads = 0;
};

/// RunConfig with every default and "auto" resolved to concrete values.
struct Resolved {
    std::vector<int> n;
    double nbar = 0.0;
    double noise = 0.0;
    std::vector<double> memory;
    std::vector<double> r;
    double y = 0.0;
    std::optional<double> epsilon;
    std::optional<double> theta;
    SearchSettings settings;
};

[[nodiscard]] inline std::optional<double> parse_auto(const std::string &text) {
    if (text == "auto") {
        return std::nullopt;
    }
    return parse_real(text);
}

[[nodiscard]] inline Resolved resolve(const RunConfig &cfg) {
    const bool sweep = cfg.subcommand == "sweep-r" || cfg.subcommand == "sweep-n";
    Resolved res;
    res.n = cfg.n.empty() ? (sweep ? std::vector<int>{2, 3, 4, 5} : std::vector<int>{2}) : parse_int_list(cfg.n);
    res.nbar = parse_real(cfg.nbar);
    res.noise = parse_real(cfg.noise);
    res.memory = cfg.memory.empty() ? (sweep ? std::vector<double>{0.0, 0.1, 0.2} : std::vector<double>{0.0})
                                    : parse_real_list(cfg.memory);
    if (cfg.r.empty()) {
        res.r = cfg.subcommand == "sweep-r" ? detail::linspace(0.0, 0.6, 61) : std::vector<double>{0.0};
    } else {
        res.r = parse_real_list(cfg.r);
    }
    res.y = parse_real(cfg.y);
    res.epsilon = parse_auto(cfg.epsilon);
    res.theta = parse_auto(cfg.theta);
    res.settings.r_points = cfg.r_grid;
    res.settings.y_points = cfg.y_grid;
    res.settings.theta = res.theta;
    res.settings.threads = cfg.threads;
    if (cfg.y_sign == "both") {
        res.settings.y_sign = YSign::both;
    } else if (cfg.y_sign == "positive") {
        res.settings.y_sign = YSign::positive;
    } else if (cfg.y_sign == "negative") {
        res.settings.y_sign = YSign::negative;
    } else {
        throw InvalidParameter("--y-sign must be both, positive or negative");
    }
    if (cfg.r_grid < 1 || cfg.y_grid < 1) {
        throw InvalidParameter("grid densities must be positive");
    }
    for (int n : res.n) {
        if (n < 1) {
            throw InvalidParameter("--n must be >= 1");
        }
        if (n > cfg.n_max_guard) {
            throw InvalidParameter("n = " + std::to_string(n) + " exceeds --n-max-guard " +
                                   std::to_string(cfg.n_max_guard));
        }
    }
    if (res.memory.empty() || res.r.empty()) {
        throw InvalidParameter("empty memory or r list");
    }
    return res;
}

[[nodiscard]] inline json config_json(const RunConfig &cfg, const Resolved &res) {
    json j;
    j["subcommand"] = cfg.subcommand;
    j["n"] = res.n;
    j["nbar"] = res.nbar;
    j["noise"] = res.noise;
    j["noise_input"] = cfg.noise;
    j["memory"] = res.memory;
    if (cfg.subcommand == "sweep-r" || cfg.subcommand == "rate" || cfg.subcommand == "feasible" ||
        cfg.subcommand == "validate") {
        j["r"] = res.r;
    }
    if (cfg.subcommand == "rate" || cfg.subcommand == "validate") {
        j["y"] = res.y;
    }
    j["epsilon"] = res.epsilon ? json(*res.epsilon) : json(format_real(default_epsilon(res.noise)) + " (auto)");
    j["epsilon_resolved"] = res.epsilon ? *res.epsilon : default_epsilon(res.noise);
    j["theta"] = res.theta ? json(*res.theta) : json("auto: 1 if nbar - nbar_r >= 1/2 else 2*(nbar - nbar_r)");
    j["y_grid"] = res.settings.y_points;
    j["r_grid"] = res.settings.r_points;
    j["y_tolerance"] = res.settings.y_tolerance;
    j["r_tolerance"] = res.settings.r_tolerance;
    j["y_sign"] = cfg.y_sign;
    j["n_max_guard"] = cfg.n_max_guard;
    if (cfg.subcommand == "validate") {
        j["samples"] = cfg.samples;
        j["seed"] = cfg.seed;
        j["generator"] = std::string(mc_generator_name);
    }
    return j;
}

[[nodiscard]] inline json spectrum_json(const SymplecticSpectrum &s) { return json(s.values); }

[[nodiscard]] inline ChannelParams channel_for(const Resolved &res, int n, double memory) {
    return ChannelParams::make(n, res.noise, memory, res.epsilon);
}

struct CommandOutput {
    int exit_code = 0;
    std::string body;
    /// Default file extension when written under the output directory.
    std::string extension = "json";
};

[[nodiscard]] inline CommandOutput cmd_rate(const RunConfig &cfg) {
    const Resolved res = resolve(cfg);
    const ChannelParams channel = channel_for(res, res.n.front(), res.memory.front());
    const InputParams input{res.nbar, res.r.front(), res.y, res.theta};
    const RateResult result = transmission_rate(channel, input);

    json j;
    j["command"] = "rate";
    j["config"] = config_json(cfg, res);
    j["rate_bits_per_use"] = result.rate;
    j["avg_output_spectrum"] = spectrum_json(result.avg_spectrum);
    j["output_spectrum"] = spectrum_json(result.out_spectrum);
    j["squeezed_photons"] = result.squeezed_photons;
    j["epsilon"] = channel.epsilon;
    j["theta"] = result.theta;
    j["slack"] = {
        {"noise_diagonal", noise_slack(channel)},
        {"modulation_diagonal", modulation_slack(channel.n, input)},
        {"photon_budget", residual_budget(channel.n, input)},
    };
    j["clamped_to_vacuum"] = result.avg_spectrum.clamped || result.out_spectrum.clamped;
    return {0, j.dump(2) + "\n"};
}

[[nodiscard]] inline CommandOutput cmd_feasible(const RunConfig &cfg) {
    const Resolved res = resolve(cfg);
    json regions = json::array();
    for (int n : res.n) {
        for (double s : res.memory) {
            const ChannelParams channel = channel_for(res, n, s);
            const FeasibleRegion region = feasible_region(channel, res.nbar, res.theta);
            const double r = res.r.front();
            auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
            json entry;
            entry["n"] = n;
            entry["memory"] = s;
            entry["epsilon"] = channel.epsilon;
            entry["s_max"] = finite_or_null(region.s_max);
            entry["r_min"] = region.r_min;
            entry["r_max"] = region.r_max;
            entry["r"] = r;
            entry["y_max_at_r"] = region.y_max(r);
            entry["y_max_at_r_max"] = region.y_max(region.r_max);
            entry["squeezed_photons_at_r"] = squeezed_photons(n, r);
            entry["noise_slack"] = noise_slack(channel);
            regions.push_back(entry);
        }
    }
    json j;
    j["command"] = "feasible";
    j["config"] = config_json(cfg, res);
    j["regions"] = regions;
    j["note"] = "s_max null means unbounded";
    return {0, j.dump(2) + "\n"};
}

[[nodiscard]] inline CommandOutput sweep_output(const RunConfig &cfg, const Resolved &res, const SweepResult &sweep) {
    const bool by_n = sweep.axis == SweepAxis::n;
    const std::string format = cfg.format.empty() ? "csv" : cfg.format;
    if (format == "json") {
        json rows = json::array();
        for (const SweepRow &row : sweep.rows) {
            rows.push_back({{"s", row.memory},
                            {"n", row.n},
                            {by_n ? "r_opt" : "r", row.r},
                            {"y_opt", row.y_opt},
                            {"rate", row.rate}});
        }
        json j;
        j["command"] = cfg.subcommand;
        j["config"] = config_json(cfg, res);
        j["rows"] = rows;
        return {0, j.dump(2) + "\n", "json"};
    }
    if (format != "csv") {
        throw InvalidParameter("--format must be csv or json");
    }
    std::ostringstream os;
    os << "# memchan " << cfg.subcommand << "\n";
    os << "# config: " << config_json(cfg, res).dump() << "\n";
    os << (by_n ? "s,n,r_opt,y_opt,rate\n" : "s,n,r,y_opt,rate\n");
    for (const SweepRow &row : sweep.rows) {
        os << format_real(row.memory) << ',' << row.n << ',' << format_real(row.r) << ','
           << format_real(row.y_opt) << ',' << format_real(row.rate) << '\n';
    }
    return {0, os.str(), "csv"};
}

[[nodiscard]] inline CommandOutput cmd_sweep_r(const RunConfig &cfg) {
    const Resolved res = resolve(cfg);
    std::vector<ChannelParams> channels;
    for (double s : res.memory) {
        for (int n : res.n) {
            channels.push_back(channel_for(res, n, s));
        }
    }
    const SweepResult sweep = sweep_r(channels, res.nbar, res.r, res.settings);
    return sweep_output(cfg, res, sweep);
}

[[nodiscard]] inline CommandOutput cmd_sweep_n(const RunConfig &cfg) {
    const Resolved res = resolve(cfg);
    SweepResult all;
    all.axis = SweepAxis::n;
    all.nbar = res.nbar;
    all.noise = res.noise;
    for (double s : res.memory) {
        const ChannelParams tmpl = channel_for(res, res.n.front(), s);
        for (int n : res.n) {
            (void)channel_for(res, n, s);
        }
        const SweepResult part = sweep_n(tmpl, res.nbar, res.n, res.settings);
        all.rows.insert(all.rows.end(), part.rows.begin(), part.rows.end());
    }
    return sweep_output(cfg, res, all);
}

[[nodiscard]] inline double spectrum_distance(const SymplecticSpectrum &a, const SymplecticSpectrum &b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        worst = std::max(worst, std::abs(a.values[k] - b.values[k]));
    }
    return worst;
}

/// Monte Carlo comparison thresholds.
inline constexpr double mc_max_standard_score = 5.0;
inline constexpr double mc_entropy_tolerance_bits = 0.02;
inline constexpr double dual_method_tolerance = 1e-10;

[[nodiscard]] inline CommandOutput cmd_validate(const RunConfig &cfg) {
    RunConfig local = cfg;
    // The reference case for validation unless overridden.
    if (local.memory.empty()) {
        local.memory = {"0.2"};
    }
    if (local.r.empty()) {
        local.r = {"0.1"};
    }
    if (local.y == "0") {
        local.y = "0.2";
    }
    const Resolved res = resolve(local);
    const ChannelParams channel = channel_for(res, res.n.front(), res.memory.front());
    const InputParams input{res.nbar, res.r.front(), res.y, res.theta};
    const std::size_t count = local.samples;

    json checks = json::array();
    bool all_pass = true;
    auto record = [&](const std::string &name, double value, double threshold, bool pass) {
        checks.push_back({{"check", name}, {"value", value}, {"threshold", threshold}, {"pass", pass}});
        all_pass = all_pass && pass;
    };

    const BlockCovariance out = output_covariance(channel, input.r);
    const BlockCovariance avg = averaged_output_covariance(channel, input);

    const CovarianceEstimate est_out =
        estimate_output_covariance(channel, input, count, local.seed, false, local.threads);
    const CovarianceEstimate est_avg =
        estimate_output_covariance(channel, input, count, local.seed, true, local.threads);

    const double z_out = max_standard_score(est_out.full, out.full(), count);
    const double z_avg = max_standard_score(est_avg.full, avg.full(), count);
    record("mc_output_covariance_max_standard_score", z_out, mc_max_standard_score, z_out <= mc_max_standard_score);
    record("mc_averaged_output_covariance_max_standard_score", z_avg, mc_max_standard_score,
           z_avg <= mc_max_standard_score);

    const double ds_out = std::abs(gaussian_entropy(est_out.blocks()) - gaussian_entropy(out));
    const double ds_avg = std::abs(gaussian_entropy(est_avg.blocks()) - gaussian_entropy(avg));
    record("mc_output_entropy_abs_error_bits", ds_out, mc_entropy_tolerance_bits, ds_out <= mc_entropy_tolerance_bits);
    record("mc_averaged_output_entropy_abs_error_bits", ds_avg, mc_entropy_tolerance_bits,
           ds_avg <= mc_entropy_tolerance_bits);

    double dual = std::max(spectrum_distance(symplectic_eigenvalues(out), generic_symplectic_eigenvalues(out)),
                           spectrum_distance(symplectic_eigenvalues(avg), generic_symplectic_eigenvalues(avg)));
    std::mt19937_64 engine(local.seed);
    std::uniform_int_distribution<int> modes(1, 8);
    for (int trial = 0; trial < 200; ++trial) {
        const BlockCovariance cov = random_physical_covariance(modes(engine), engine);
        dual = std::max(dual, spectrum_distance(symplectic_eigenvalues(cov), generic_symplectic_eigenvalues(cov)));
    }
    record("symplectic_dual_method_max_deviation", dual, dual_method_tolerance, dual < dual_method_tolerance);

    json j;
    j["command"] = "validate";
    j["config"] = config_json(local, res);
    j["checks"] = checks;
    j["pass"] = all_pass;
    return {all_pass ? 0 : 3, j.dump(2) + "\n"};
}

[[nodiscard]] inline CommandOutput dispatch(const RunConfig &cfg) {
    if (cfg.subcommand == "rate") {
        return cmd_rate(cfg);
    }
    if (cfg.subcommand == "sweep-r") {
        return cmd_sweep_r(cfg);
    }
    if (cfg.subcommand == "sweep-n") {
        return cmd_sweep_n(cfg);
    }
    if (cfg.subcommand == "feasible") {
        return cmd_feasible(cfg);
    }
    if (cfg.subcommand == "validate") {
        return cmd_validate(cfg);
    }
    throw InvalidParameter("unknown subcommand '" + cfg.subcommand + "'");
}

/// Where output goes: --out (relative paths land under $MEMCHAN_OUTPUT_DIR
/// when set), else $MEMCHAN_OUTPUT_DIR/<subcommand>.<ext>, else stdout.
[[nodiscard]] inline std::optional<std::filesystem::path> output_path(const RunConfig &cfg,
                                                                      const std::string &extension) {
    const char *dir = std::getenv(output_dir_env);
    if (!cfg.out.empty()) {
        std::filesystem::path p(cfg.out);
        if (p.is_relative() && dir != nullptr && *dir != '\0') {
            return std::filesystem::path(dir) / p;
        }
        return p;
    }
    if (dir != nullptr && *dir != '\0') {
        return std::filesystem::path(dir) / (cfg.subcommand + "." + extension);
    }
    return std::nullopt;
}

/// Full CLI: parses arguments, runs the command and writes its output.
/// Returns the process exit code.
inline int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"memchan: classical transmission rates of Gaussian channels with correlated additive noise"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto add_common = [&cfg](CLI::App *sub) {
        sub->add_option("--n", cfg.n, "Number of channel uses (repeatable; lo:hi ranges allowed)");
        sub->add_option("--nbar", cfg.nbar, "Photon budget per mode")->capture_default_str();
        sub->add_option("--noise", cfg.noise, "Added thermal photons per mode N (decimal or a/b)")
            ->capture_default_str();
        sub->add_option("--memory", cfg.memory, "Memory degree s (repeatable; start:stop:count ranges allowed)");
        sub->add_option("--r", cfg.r, "Squeezing r (sweep-r: repeatable values or start:stop:count)");
        sub->add_option("--y", cfg.y, "Modulation correlation y")->capture_default_str();
        sub->add_option("--epsilon", cfg.epsilon, "Noise regulator: auto or a value")->capture_default_str();
        sub->add_option("--theta", cfg.theta, "Modulation regulator: auto or a value")->capture_default_str();
        sub->add_option("--r-grid", cfg.r_grid, "Coarse grid points in r")->capture_default_str();
        sub->add_option("--y-grid", cfg.y_grid, "Coarse grid points in y")->capture_default_str();
        sub->add_option("--y-sign", cfg.y_sign, "y search interval: both, positive or negative")
            ->capture_default_str();
        sub->add_option("--n-max-guard", cfg.n_max_guard, "Largest accepted n")->capture_default_str();
        sub->add_option("--samples", cfg.samples, "Monte Carlo sample count")->capture_default_str();
        sub->add_option("--seed", cfg.seed, "Monte Carlo seed")->capture_default_str();
        sub->add_option("--out", cfg.out, "Output file (default: stdout or $MEMCHAN_OUTPUT_DIR)");
        sub->add_option("--format", cfg.format, "Output format for sweeps: csv or json");
        sub->add_option("--threads", cfg.threads, "Worker threads (0 = hardware concurrency)")
            ->capture_default_str();
    };
    const std::pair<const char *, const char *> subcommands[] = {
        {"rate", "Rate and output spectra at one input point"},
        {"sweep-r", "Rate maximized over y along an r grid"},
        {"sweep-n", "Rate maximized over (r, y) for each n"},
        {"feasible", "Admissible memory, squeezing and correlation ranges"},
        {"validate", "Monte Carlo and dual-method checks of the analytic model"},
    };
    for (const auto &[name, help] : subcommands) {
        add_common(app.add_subcommand(name, help));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e, out, err);
    }
    for (CLI::App *sub : app.get_subcommands()) {
        cfg.subcommand = sub->get_name();
    }

    try {
        const CommandOutput result = dispatch(cfg);
        if (const auto path = output_path(cfg, result.extension)) {
            if (path->has_parent_path()) {
                std::filesystem::create_directories(path->parent_path());
            }
            std::ofstream file(*path);
            if (!file) {
                err << "error: cannot open " << path->string() << " for writing\n";
                return 1;
            }
            file << result.body;
            err << "wrote " << path->string() << "\n";
        } else {
            out << result.body;
        }
        if (result.exit_code != 0) {
            err << "error: validation failed\n";
        }
        return result.exit_code;
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace memchan::cli
