#include "intersim/cli.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "intersim/engine.hpp"
#include "intersim/metrics.hpp"
#include "intersim/run_io.hpp"

namespace intersim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 computation failed");
    }
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) {
        out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return out.str();
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

void apply_worker_env(RunConfig& cfg) {
    if (cfg.worker_count_given) {
        return;
    }
    if (const char* env = std::getenv(kWorkersEnv)) {
        try {
            const long n = std::stol(env);
            if (n < 1) {
                throw std::invalid_argument(env);
            }
            cfg.simulation.worker_count = static_cast<std::size_t>(n);
        } catch (const std::exception&) {
            throw ConfigError(std::string(kWorkersEnv) + " must be a positive integer, got '" + env + "'");
        }
    }
}

json manifest(const fs::path& config, const RunConfig& cfg, const fs::path& out_dir, const std::string& digest) {
    return {{"tool", "intersim"},
            {"tool_version", kToolVersion},
            {"config_path", config.lexically_normal().generic_string()},
            {"scenario_path", cfg.scenario.lexically_normal().generic_string()},
            {"output_dir", out_dir.lexically_normal().generic_string()},
            {"config_digest", digest}};
}

}  // namespace

int cmd_run(const fs::path& config, const fs::path& out_dir, std::ostream& err) {
    RunConfig cfg;
    Scenario scenario;
    PlannerBindings planners;
    try {
        cfg = load_run_config(config);
        apply_worker_env(cfg);
        scenario = prepare_scenario(cfg);
        planners = make_planners(scenario, cfg);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }

    SimulationResult result;
    try {
        result = run(scenario, planners, cfg.simulation);
    } catch (const ScenarioError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "runtime failure: " << e.what() << '\n';
        return kRuntimeError;
    }

    try {
        fs::create_directories(out_dir);
        const json resolved = run_config_to_json(cfg);
        const std::string digest = sha256_hex(resolved.dump());
        json man = manifest(config, cfg, out_dir, digest);
        man["config"] = resolved;
        write_text(out_dir / "manifest.json", man.dump(2) + "\n");
        save_scenario(scenario, out_dir / "scenario.json");

        std::string steps;
        std::string timings;
        for (const auto& s : result.steps) {
            steps += step_to_json(s).dump() + "\n";
            timings += timings_to_json(s).dump() + "\n";
        }
        write_text(out_dir / "steps.jsonl", steps);
        write_text(out_dir / "timings.jsonl", timings);
        json summary = summary_to_json(result);
        summary["name"] = cfg.name;
        summary["config_digest"] = digest;
        write_text(out_dir / "summary.json", summary.dump(2) + "\n");
    } catch (const std::exception& e) {
        err << "runtime failure: " << e.what() << '\n';
        return kRuntimeError;
    }
    for (const auto& [id, o] : result.outcomes) {
        spdlog::info("agent {}: {} (step {})", id, to_string(o.status),
                     o.terminal_step ? std::to_string(*o.terminal_step) : std::string("-"));
    }
    return kOk;
}

int cmd_evaluate(const std::vector<fs::path>& run_dirs, std::ostream& out, std::ostream& err) {
    std::vector<RegimeRow> rows;
    for (const auto& dir : run_dirs) {
        try {
            for (const char* f : {"manifest.json", "scenario.json", "summary.json", "steps.jsonl"}) {
                if (!fs::exists(dir / f)) {
                    throw LogError("run directory " + dir.string() + " lacks " + f);
                }
            }
            const json man = read_json_file(dir / "manifest.json");
            const RunConfig cfg = parse_run_config(man.at("config"), "");
            const Scenario scenario = load_scenario(dir / "scenario.json");
            const SimulationResult result = load_result(dir);
            const MetricReport report = evaluate(result, scenario, cfg.metrics);
            json doc = report_to_json(report);
            doc["name"] = cfg.name;
            doc["config_digest"] = man.at("config_digest");
            write_text(dir / "metrics.json", doc.dump(2) + "\n");
            write_text(dir / "metrics_series.csv", series_csv(report));
            const RegimeRow row = regime_row(report, cfg.name, cfg.substitute);
            write_text(dir / "criticality.csv", criticality_csv(std::span(&row, 1)));
            rows.push_back(row);
        } catch (const std::exception& e) {
            err << "error: " << dir.string() << ": " << e.what() << '\n';
            return kUsageError;
        }
    }
    out << criticality_csv(rows);
    return kOk;
}

int cmd_benchmark(const fs::path& config, const std::vector<std::size_t>& agents,
                  const std::vector<std::size_t>& workers, std::size_t repetitions, const fs::path& csv_out,
                  std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    Scenario scenario;
    try {
        cfg = load_run_config(config);
        scenario = load_scenario(cfg.scenario);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }
    if (agents.empty() || workers.empty() || repetitions == 0) {
        err << "error: benchmark needs agent counts, worker counts and at least one repetition\n";
        return kUsageError;
    }
    std::vector<BenchmarkRow> rows;
    try {
        const PlannerFactory factory = [&](const Scenario& sc) {
            PlannerBindings b;
            for (const auto& p : sc.planning_problems) {
                b[p.id] = make_planner(sc, p, cfg.spec_for(p.id));
            }
            return b;
        };
        rows = benchmark(scenario, factory, agents, workers, repetitions, cfg.simulation);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "runtime failure: " << e.what() << '\n';
        return kRuntimeError;
    }
    std::ostringstream csv;
    csv << "agents,workers,samples,step_mean,step_q1,step_q3,planning_mean,planning_q1,planning_q3\n";
    for (const auto& r : rows) {
        csv << r.agents << ',' << r.workers << ',' << r.samples << ',' << format_metric(r.step_mean) << ','
            << format_metric(r.step_q1) << ',' << format_metric(r.step_q3) << ',' << format_metric(r.planning_mean)
            << ',' << format_metric(r.planning_q1) << ',' << format_metric(r.planning_q3) << '\n';
    }
    out << csv.str();
    if (!csv_out.empty()) {
        try {
            if (csv_out.has_parent_path()) {
                fs::create_directories(csv_out.parent_path());
            }
            write_text(csv_out, csv.str());
        } catch (const std::exception& e) {
            err << "runtime failure: " << e.what() << '\n';
            return kRuntimeError;
        }
    }
    return kOk;
}

int cmd_plotdata(const fs::path& run_dir, std::ostream& err) {
    try {
        const SimulationResult result = load_result(run_dir);
        const fs::path plot = run_dir / "plot";
        fs::create_directories(plot);
        for (const auto& [id, traj] : result.trajectories) {
            std::ostringstream csv;
            csv << "t,x,y,v,theta\n";
            for (std::size_t k = 0; k < traj.states.size(); ++k) {
                const auto& s = traj.states[k];
                csv << format_metric(static_cast<double>(k) * result.dt) << ',' << format_metric(s.x) << ','
                    << format_metric(s.y) << ',' << format_metric(s.v) << ',' << format_metric(s.theta) << '\n';
            }
            write_text(plot / ("agent_" + std::to_string(id) + ".csv"), csv.str());
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }
    return kOk;
}

namespace {

std::vector<std::size_t> parse_counts(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        const long long v = std::stoll(item, &used);
        if (used != item.size() || v < 1) {
            throw CLI::ValidationError("counts", "'" + item + "' is not a positive integer");
        }
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::get("intersim");
    if (!logger) {
        logger = spdlog::stderr_color_st("intersim");
    }
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");

    CLI::App app{"Lockstep multi-agent driving simulation and criticality evaluation"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    std::string config;
    std::string out_dir;
    auto* run_cmd = app.add_subcommand("run", "Simulate a run configuration");
    run_cmd->add_option("config", config, "Run configuration (JSON)")->required();
    run_cmd->add_option("--out", out_dir, "Output directory")->required();

    std::vector<std::string> eval_dirs;
    auto* eval_cmd = app.add_subcommand("evaluate", "Compute criticality metrics for run directories");
    eval_cmd->add_option("dirs", eval_dirs, "Run directories")->required();

    std::string bench_config;
    std::string agents = "1,8,16,24";
    std::string workers = "1,8";
    std::size_t reps = 3;
    std::string bench_out;
    auto* bench_cmd = app.add_subcommand("benchmark", "Time simulation steps over agent and worker counts");
    bench_cmd->add_option("config", bench_config, "Run configuration (JSON)")->required();
    bench_cmd->add_option("--agents", agents, "Comma-separated agent counts")->capture_default_str();
    bench_cmd->add_option("--workers", workers, "Comma-separated worker counts")->capture_default_str();
    bench_cmd->add_option("--reps", reps, "Repetitions per cell")->capture_default_str();
    bench_cmd->add_option("--out", bench_out, "Also write the table to this CSV file");

    std::string plot_dir;
    auto* plot_cmd = app.add_subcommand("plotdata", "Write per-agent time series for plotting");
    plot_cmd->add_option("dir", plot_dir, "Run directory")->required();

    try {
        app.parse(argc, argv);
        if (*run_cmd) {
            return cmd_run(config, out_dir, std::cerr);
        }
        if (*eval_cmd) {
            std::vector<fs::path> dirs(eval_dirs.begin(), eval_dirs.end());
            return cmd_evaluate(dirs, std::cout, std::cerr);
        }
        if (*bench_cmd) {
            return cmd_benchmark(bench_config, parse_counts(agents), parse_counts(workers), reps, bench_out,
                                 std::cout, std::cerr);
        }
        if (*plot_cmd) {
            return cmd_plotdata(plot_dir, std::cerr);
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    }
    return kUsageError;
}

}  // namespace intersim::cli
