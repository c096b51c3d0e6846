#include "lyapstream/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "lyapstream/config.hpp"
#include "lyapstream/controller.hpp"
#include "lyapstream/simulator.hpp"

namespace lyapstream {

namespace fs = std::filesystem;

namespace {

constexpr double kOracleTolerance = 1e-6;

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

double to_double(std::string_view text) {
    double v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
        throw ConfigError(fmt::format("'{}' is not a number", text));
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

struct CommonOptions {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string mode;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "JSON configuration file");
    cmd->add_option("--override", o.overrides, "key=value override, repeatable")->take_all();
    cmd->add_option("--seed", o.seed, "random seed");
}

SimConfig resolve(const CommonOptions& o) {
    std::vector<std::string> overrides = o.overrides;
    if (o.seed) overrides.push_back(fmt::format("sim.seed={}", *o.seed));
    if (!o.mode.empty()) overrides.push_back(fmt::format("controller.mode=\"{}\"", o.mode));
    const fs::path path(o.config);
    const auto doc = load_config_json(o.config.empty() ? nullptr : &path, overrides);
    SimConfig cfg = config_from_json(doc);
    if (!cfg.table_path.empty() && !fs::exists(cfg.table_path))
        throw IoError(fmt::format("quality table '{}' not found", cfg.table_path));
    return cfg;
}

std::ofstream open_output(const fs::path& dir, const char* name) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw IoError(fmt::format("cannot open '{}' for writing", (dir / name).string()));
    return f;
}

void finish(std::ofstream& f, const fs::path& path) {
    f.flush();
    if (!f) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

QualityTable table_of(const SimConfig& cfg) {
    return cfg.table_path.empty() ? default_table() : load_table(cfg.table_path);
}

void print_table(std::ostream& out, const QualityTable& t) {
    fmt::print(out, "{:<14}", "PSNR/SSIM");
    for (int d : t.depths()) fmt::print(out, "{:>14}", fmt::format("d={}", d));
    out << '\n';
    for (int r : t.rates()) {
        fmt::print(out, "{:<14}", fmt::format("r={}", r));
        for (int d : t.depths()) fmt::print(out, "{:>14}", fmt::format("{:.2f}/{:.3f}", t.psnr(r, d), t.ssim(r, d)));
        out << '\n';
    }
    fmt::print(out, "{:<14}", "cycles [1e9]");
    for (int d : t.depths())
        fmt::print(out, "{:>14}", d == 0 ? std::string("-") : fmt::format("{:.3f}", t.cycles(d) / 1e9));
    out << '\n';
    fmt::print(out, "{:<14}", "depth weight");
    for (int d : t.depths())
        fmt::print(out, "{:>14}", d == 0 ? std::string("-") : fmt::format("{}", t.depth_weight(d)));
    out << '\n';
}

}  // namespace

std::vector<double> parse_values(std::string_view spec) {
    std::vector<double> out;
    if (spec.find(':') != std::string_view::npos) {
        auto parts = split(spec, ':');
        if (parts.size() != 3) throw ConfigError(fmt::format("range '{}' must be start:stop:step", spec));
        const double start = to_double(parts[0]);
        const double stop = to_double(parts[1]);
        const double step = to_double(parts[2]);
        if (!(step > 0.0) || stop < start) throw ConfigError(fmt::format("range '{}' is empty or has a nonpositive step", spec));
        const double slack = step * 1e-9;
        for (std::int64_t i = 0;; ++i) {
            const double v = start + static_cast<double>(i) * step;
            if (v > stop + slack) break;
            out.push_back(v);
        }
    } else {
        for (auto part : split(spec, ',')) out.push_back(to_double(part));
    }
    return out;
}

std::vector<std::uint64_t> parse_seeds(std::string_view spec) {
    std::vector<std::uint64_t> out;
    for (auto part : split(spec, ',')) {
        std::uint64_t v{};
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size())
            throw ConfigError(fmt::format("'{}' is not a seed", part));
        out.push_back(v);
    }
    return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Lyapunov-controlled adaptive video streaming with super-resolution"};
    app.require_subcommand(1);

    const std::vector<std::string> modes{"proposed", "buffered", "comp1", "comp2"};

    CommonOptions run_opts;
    std::string run_out = ".";
    auto* run_cmd = app.add_subcommand("run", "simulate one configuration; writes trace.csv and summary.csv");
    add_common(run_cmd, run_opts);
    run_cmd->add_option("--out", run_out, "output directory");
    run_cmd->add_option("--mode", run_opts.mode, "controller")->check(CLI::IsMember(modes));

    CommonOptions sweep_opts;
    std::string sweep_out = ".";
    std::string axis_text;
    std::string values_text;
    std::string seeds_text;
    int jobs = 1;
    auto* sweep_cmd = app.add_subcommand("sweep", "sweep SNR or V; writes sweep.csv and sweep_means.csv");
    add_common(sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--out", sweep_out, "output directory");
    sweep_cmd->add_option("--mode", sweep_opts.mode, "controller")->check(CLI::IsMember(modes));
    sweep_cmd->add_option("--axis", axis_text, "snr or v")->required()->check(CLI::IsMember({"snr", "v"}));
    sweep_cmd->add_option("--values", values_text, "start:stop:step or a,b,c")->required();
    sweep_cmd->add_option("--seeds", seeds_text, "comma-separated seeds (default: the config seed)");
    sweep_cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    CommonOptions oracle_opts;
    std::size_t n_states = 1000;
    int oracle_jobs = 1;
    auto* oracle_cmd = app.add_subcommand("oracle-check", "compare the controller against exhaustive search");
    add_common(oracle_cmd, oracle_opts);
    oracle_cmd->add_option("--mode", oracle_opts.mode, "controller")->check(CLI::IsMember({"proposed", "buffered"}));
    oracle_cmd->add_option("--states", n_states, "number of random states");
    oracle_cmd->add_option("--jobs", oracle_jobs, "worker threads")->check(CLI::PositiveNumber);

    CommonOptions table_opts;
    auto* table_cmd = app.add_subcommand("table", "print the quality table");
    table_cmd->add_option("--config", table_opts.config, "JSON configuration file");
    table_cmd->add_option("--override", table_opts.overrides, "key=value override, repeatable")->take_all();

    std::vector<const char*> argv{"lyapstream"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitBadConfig;
    }

    try {
        if (*run_cmd) {
            const SimConfig cfg = resolve(run_opts);
            const RunResult result = run(cfg, true);
            const fs::path dir(run_out);
            auto trace = open_output(dir, "trace.csv");
            write_trace_csv(trace, result.trace);
            finish(trace, dir / "trace.csv");
            auto summary = open_output(dir, "summary.csv");
            write_summary_header(summary);
            write_summary_row(summary, std::nullopt, cfg.seed, result.summary);
            finish(summary, dir / "summary.csv");
            const auto& m = result.summary;
            fmt::print(out, "{} seed={} T={}: avg_q={:.4f} avg_z={:.4f} avg_psnr={:.4f} avg_p={:.4f} avg_u={:.4f} delay_rate={:.4f} throughput={:.4f}\n",
                       to_string(cfg.controller.mode), cfg.seed, cfg.horizon_slots, m.avg_q_chunks,
                       m.avg_z_seconds, m.avg_psnr_db, m.avg_power_w, m.avg_cores,
                       m.delay_occurrence_rate, m.throughput_chunks_per_slot);
        } else if (*sweep_cmd) {
            const SimConfig cfg = resolve(sweep_opts);
            const auto axis = *parse_axis(axis_text);
            const auto values = parse_values(values_text);
            const auto seeds = seeds_text.empty() ? std::vector<std::uint64_t>{cfg.seed} : parse_seeds(seeds_text);
            const auto rows = sweep(cfg, axis, values, seeds, jobs);
            const fs::path dir(sweep_out);
            auto f = open_output(dir, "sweep.csv");
            write_sweep_csv(f, rows);
            finish(f, dir / "sweep.csv");
            auto g = open_output(dir, "sweep_means.csv");
            write_means_csv(g, sweep_means(rows));
            finish(g, dir / "sweep_means.csv");
            fmt::print(out, "{} runs written to {}\n", rows.size(), (dir / "sweep.csv").string());
        } else if (*oracle_cmd) {
            const SimConfig cfg = resolve(oracle_opts);
            const QualityModel quality(table_of(cfg), cfg.sizes, cfg.compute);
            const ChannelModel channel(cfg.channel);
            const Controller controller(quality, channel, cfg.channel.slot_seconds, cfg.controller);
            const auto probes = random_probe_states(channel, n_states, cfg.seed);
            const auto result = oracle_check(controller, probes, oracle_jobs);
            fmt::print(out, "max relative gap {:.3e} over {} states\n", std::max(result.max_gap, 0.0), result.states);
            if (result.max_gap > kOracleTolerance) {
                err << fmt::format("error: gap {:.3e} exceeds {:.0e} at state {}\n", result.max_gap,
                                   kOracleTolerance, result.worst_index);
                return kExitOracleGap;
            }
        } else if (*table_cmd) {
            const SimConfig cfg = resolve(table_opts);
            print_table(out, table_of(cfg));
        }
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitBadConfig;
    } catch (const TableError& e) {
        err << "error: " << e.what() << '\n';
        return kExitBadConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitBadConfig;
    }
    return kExitOk;
}

}  // namespace lyapstream
