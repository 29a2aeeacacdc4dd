// mrsafe command-line front end: run, sweep, plot, metrics.
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "mrsafe/log_io.hpp"
#include "mrsafe/metrics.hpp"
#include "mrsafe/plot.hpp"
#include "mrsafe/scenario.hpp"
#include "mrsafe/sim.hpp"

namespace fs = std::filesystem;
using namespace mrsafe;

namespace {

constexpr int kExitMissing = 2;

// Writes through a sibling temp file and renames it into place.
void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct CommonFlags {
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;

    std::vector<std::string> overrides() const {
        std::vector<std::string> out = sets;
        if (seed) out.push_back("sim.seed=" + std::to_string(*seed));
        if (dt) out.push_back("sim.dt=" + detail::fmt9(*dt));
        return out;
    }
};

struct RunOutcome {
    MetricReport report;
    std::string status = "ok";
};

// Runs one scenario and writes log.csv, metrics.json, traj.svg, speed.svg.
// Plots are rendered from the re-read CSV so they match `plot` byte for byte.
RunOutcome run_to_dir(const ScenarioSpec& spec, const fs::path& out_dir) {
    const SimLog log = run(spec);
    std::ostringstream csv;
    write_log_csv(csv, log, spec);
    const std::string csv_text = csv.str();

    RunOutcome outcome;
    outcome.report = compute_metrics(log, spec);
    if (outcome.report.fallback_count > 0) outcome.status = "fallback";

    std::istringstream back(csv_text);
    const LoadedLog loaded = read_log_csv(back);
    write_atomic(out_dir / "log.csv", csv_text);
    write_atomic(out_dir / "metrics.json", metrics_to_json(outcome.report).dump(2) + "\n");
    write_atomic(out_dir / "traj.svg", render_trajectory_svg(loaded));
    write_atomic(out_dir / "speed.svg", render_speed_svg(loaded));
    return outcome;
}

void require_exists(const fs::path& p) {
    if (!fs::exists(p)) {
        std::cerr << "error: scenario not found: " << p.string() << "\n";
        std::exit(kExitMissing);
    }
}

std::vector<std::string> split_values(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string v;
    while (std::getline(ss, v, ','))
        if (!v.empty()) out.push_back(v);
    return out;
}

unsigned thread_cap() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MRSAFE_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) n = std::min<unsigned>(n, static_cast<unsigned>(v));
    }
    return n;
}

int cmd_run(const std::string& scenario, const std::string& out_dir, const CommonFlags& flags) {
    require_exists(scenario);
    const ScenarioSpec spec = load_scenario(scenario, flags.overrides());
    const RunOutcome outcome = run_to_dir(spec, out_dir);
    std::cout << metrics_table(outcome.report);
    return 0;
}

int cmd_sweep(const std::string& scenario, const std::string& param, const std::string& values_arg,
              const std::string& out_dir, const CommonFlags& flags) {
    require_exists(scenario);
    const auto values = split_values(values_arg);
    if (values.empty()) throw CLI::ValidationError("--values", "no values given");
    // Validate the parameter path once before spending time on runs.
    {
        auto doc = read_json_file(scenario);
        for (const auto& o : flags.overrides()) apply_override(doc, o);
        apply_override(doc, param, values.front());
    }

    struct Row {
        std::string value;
        RunOutcome outcome;
    };
    std::vector<Row> rows(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < values.size(); k = next++) {
            Row& row = rows[k];
            row.value = values[k];
            try {
                auto overrides = flags.overrides();
                overrides.push_back(param + "=" + values[k]);
                const ScenarioSpec spec = load_scenario(scenario, overrides);
                row.outcome = run_to_dir(spec, fs::path(out_dir) / (param + "=" + values[k]));
            } catch (const std::exception& e) {
                row.outcome.status = std::string("error: ") + e.what();
                std::replace(row.outcome.status.begin(), row.outcome.status.end(), ',', ';');
                std::replace(row.outcome.status.begin(), row.outcome.status.end(), '\n', ' ');
            }
        }
    };
    const unsigned n_threads = std::min<unsigned>(thread_cap(), static_cast<unsigned>(values.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::string table = "value,min_clearance,total_variation,goals_reached,collisions,status\n";
    for (const auto& row : rows) {
        const bool ok = row.outcome.status == "ok" || row.outcome.status == "fallback";
        table += row.value + ",";
        table += ok ? detail::fmt9(row.outcome.report.min_clearance) : "";
        table += ",";
        table += ok ? detail::fmt9(row.outcome.report.velocity_total_variation) : "";
        table += ",";
        table += ok ? std::to_string(row.outcome.report.goals_reached) : "";
        table += ",";
        table += ok ? std::to_string(row.outcome.report.collisions) : "";
        table += "," + row.outcome.status + "\n";
    }
    write_atomic(fs::path(out_dir) / "sweep.csv", table);
    std::cout << table;
    return 0;
}

int cmd_plot(const std::string& log_path, const std::string& kind, const std::string& out_path) {
    std::istringstream in(read_file(log_path));
    const LoadedLog loaded = read_log_csv(in);
    write_atomic(out_path, kind == "traj" ? render_trajectory_svg(loaded) : render_speed_svg(loaded));
    return 0;
}

int cmd_metrics(const std::string& log_path, const std::string& scenario, const std::string& out_path,
                const CommonFlags& flags) {
    require_exists(scenario);
    const ScenarioSpec spec = load_scenario(scenario, flags.overrides());
    std::istringstream in(read_file(log_path));
    const LoadedLog loaded = read_log_csv(in);
    if (!loaded.log.steps.empty() && loaded.log.steps.front().robots.size() != spec.robots.size())
        throw ValidationError("log has " + std::to_string(loaded.log.steps.front().robots.size()) +
                              " robots, scenario has " + std::to_string(spec.robots.size()));
    const MetricReport rep = compute_metrics(loaded.log, spec);
    if (!out_path.empty()) write_atomic(out_path, metrics_to_json(rep).dump(2) + "\n");
    std::cout << metrics_table(rep);
    return 0;
}

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--set", flags.sets, "override a scenario field, KEY=VALUE (repeatable)");
    cmd->add_option("--seed", flags.seed, "noise seed");
    cmd->add_option("--dt", flags.dt, "integration step [s]")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mrsafe: multi-robot CBF collision-avoidance simulator"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string scenario, out_dir = "out", param, values, log_path, kind, out_path;

    auto* run_cmd = app.add_subcommand("run", "simulate a scenario and write log, metrics and plots");
    run_cmd->add_option("scenario", scenario, "scenario JSON")->required();
    run_cmd->add_option("--out", out_dir, "output directory");
    add_common(run_cmd, flags);

    auto* sweep_cmd = app.add_subcommand("sweep", "run a scenario once per parameter value");
    sweep_cmd->add_option("scenario", scenario, "scenario JSON")->required();
    sweep_cmd->add_option("--param", param, "dotted parameter path, e.g. gains.lambda")->required();
    sweep_cmd->add_option("--values", values, "comma-separated values")->required();
    sweep_cmd->add_option("--out", out_dir, "output directory");
    add_common(sweep_cmd, flags);

    auto* plot_cmd = app.add_subcommand("plot", "render an SVG from a CSV log");
    plot_cmd->add_option("log", log_path, "CSV log")->required();
    plot_cmd->add_option("--kind", kind, "traj or speed")->required()->check(CLI::IsMember({"traj", "speed"}));
    plot_cmd->add_option("--out", out_path, "SVG path")->required();

    auto* metrics_cmd = app.add_subcommand("metrics", "recompute metrics from a CSV log");
    metrics_cmd->add_option("log", log_path, "CSV log")->required();
    metrics_cmd->add_option("--scenario", scenario, "scenario the log was produced from")->required();
    metrics_cmd->add_option("--out", out_path, "metrics JSON path");
    add_common(metrics_cmd, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return cmd_run(scenario, out_dir, flags);
        if (*sweep_cmd) return cmd_sweep(scenario, param, values, out_dir, flags);
        if (*plot_cmd) return cmd_plot(log_path, kind, out_path);
        if (*metrics_cmd) return cmd_metrics(log_path, scenario, out_path, flags);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
