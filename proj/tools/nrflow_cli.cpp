// Command-line front end: run scenarios, summarize traces, render figures.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nrflow/nrflow.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct RunOptions {
    std::string config;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha;
    std::optional<double> horizon;
    std::optional<double> duration;
    bool no_cbf_long = false;
    bool no_cbf_lat = false;
};

int run_command(const RunOptions& opt) {
    nrflow::ScenarioConfig cfg = nrflow::load_config(opt.config);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.alpha) cfg.controller.alpha = *opt.alpha;
    if (opt.horizon) cfg.controller.horizon = *opt.horizon;
    if (opt.duration) {
        if (!(*opt.duration > 0.0)) throw nrflow::ConfigError("--duration must be > 0");
        cfg.duration = *opt.duration;
    }
    if (opt.no_cbf_long) cfg.cbf.longitudinal_enabled = false;
    if (opt.no_cbf_lat) cfg.cbf.lateral_enabled = false;
    if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;
    cfg.validate();

    const auto start = std::chrono::steady_clock::now();
    const nrflow::SimTrace trace = nrflow::run_simulation(cfg);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const std::filesystem::path dir = cfg.output_dir;
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir / "resolved_config.json");
        os << nrflow::resolved_json(cfg).dump(2) << '\n';
    }
    if (trace.empty()) {
        nrflow::emit_outputs(trace, nullptr, {dir});
        std::cout << "empty trace written to " << dir.string() << "\n";
        return 0;
    }
    const nrflow::Metrics m = nrflow::compute_metrics(trace, cfg.transient_window);
    nrflow::emit_outputs(trace, &m, {dir});
    std::cout << nrflow::metrics_json(m).dump(2) << "\n";
    std::cout << "simulated " << cfg.duration << " s in " << secs << " s; outputs in "
              << dir.string() << "\n";
    return 0;
}

int metrics_command(const std::string& csv, double window, const std::string& out_dir) {
    const nrflow::SimTrace trace = nrflow::read_trace_csv(csv);
    const nrflow::Metrics m = nrflow::compute_metrics(trace, window);
    const std::string text = nrflow::metrics_json(m).dump(2);
    std::cout << text << "\n";
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream os(std::filesystem::path(out_dir) / "metrics.json");
        if (!os) throw nrflow::Error("cannot write metrics.json in " + out_dir);
        os << text << '\n';
    }
    return 0;
}

int plot_command(const std::string& csv, const std::string& out_dir) {
    const nrflow::SimTrace trace = nrflow::read_trace_csv(csv);
    const std::filesystem::path dir =
        out_dir.empty() ? std::filesystem::path(csv).parent_path() : std::filesystem::path(out_dir);
    nrflow::write_trace_figures(trace, dir.empty() ? "." : dir);
    std::cout << "figures written to " << (dir.empty() ? "." : dir.string()) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Newton-Raphson flow tracking with barrier-function safety filters"};
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Simulate a scenario config");
    run_cmd->add_option("config", run.config, "Scenario JSON file")->required();
    run_cmd->add_option("--out-dir", run.out_dir, "Output directory (overrides config)");
    run_cmd->add_option("--seed", run.seed, "Random seed for arrival times");
    run_cmd->add_option("--alpha", run.alpha, "Controller speedup gain");
    run_cmd->add_option("--horizon", run.horizon, "Prediction horizon T [s]");
    run_cmd->add_option("--duration", run.duration, "Simulated duration [s]");
    run_cmd->add_flag("--no-cbf-long", run.no_cbf_long, "Disable the longitudinal filter");
    run_cmd->add_flag("--no-cbf-lat", run.no_cbf_lat, "Disable the lateral filter");

    std::string metrics_csv, metrics_out;
    double window = 3.0;
    auto* metrics_cmd = app.add_subcommand("metrics", "Summarize a trace CSV");
    metrics_cmd->add_option("trace", metrics_csv, "Trace CSV")->required();
    metrics_cmd->add_option("--transient-window", window, "Transient window [s]");
    metrics_cmd->add_option("--out-dir", metrics_out, "Also write metrics.json here");

    std::string plot_csv, plot_out;
    auto* plot_cmd = app.add_subcommand("plot", "Render SVG figures from a trace CSV");
    plot_cmd->add_option("trace", plot_csv, "Trace CSV")->required();
    plot_cmd->add_option("--out-dir", plot_out, "Figure directory (default: next to the CSV)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*run_cmd) return run_command(run);
        if (*metrics_cmd) return metrics_command(metrics_csv, window, metrics_out);
        if (*plot_cmd) return plot_command(plot_csv, plot_out);
    } catch (const nrflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const nrflow::SimulationAbort& e) {
        std::cerr << "simulation aborted at step " << e.step() << ": " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
