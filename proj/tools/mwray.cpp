// mwray: churn-tolerant master-worker pool with an adaptive ray-traced
// photoionization application. Subcommands: master, worker, simulate, demo.
//
// Exit codes: 0 success, 1 usage, 2 configuration error, 3 runtime
// failure, 4 non-convergence.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli/run_config.hpp"
#include "mw/socket.hpp"
#include "mw/sim/simulator.hpp"
#include "mw/synthetic_app.hpp"
#include "radtrans/app.hpp"
#include "radtrans/grid_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitNoConverge = 4;

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int fail_config(const std::string& why) {
    std::cerr << "config error: " << why << '\n';
    return kExitConfig;
}

int fail_runtime(const std::string& why) {
    std::cerr << "error: " << why << '\n';
    return kExitRuntime;
}

struct AppBundle {
    std::unique_ptr<mw::AppHooks> hooks;
    radtrans::StromgrenApp* stromgren = nullptr;
};

AppBundle make_app(const cli::RunConfig& cfg) {
    AppBundle b;
    if (cfg.app == "synth") {
        auto app = std::make_unique<mw::SyntheticApp>(cfg.synth_tasks, cfg.task_cost_s);
        b.hooks = std::move(app);
        return b;
    }
    auto app = std::make_unique<radtrans::StromgrenApp>(cfg.build_grid(), cfg.physics());
    app->set_task_cost(cfg.task_cost_s);
    b.stromgren = app.get();
    b.hooks = std::move(app);
    return b;
}

bool parse_endpoint(const std::string& ep, std::string& host, uint16_t& port) {
    size_t colon = ep.find_last_of(':');
    if (colon == std::string::npos) return false;
    host = ep.substr(0, colon);
    int p = std::atoi(ep.c_str() + colon + 1);
    if (p < 0 || p > 65535) return false;
    port = static_cast<uint16_t>(p);
    return !host.empty();
}

mw::sim::SynthParams parse_synth_spec(const std::string& spec) {
    mw::sim::SynthParams p;
    p.n_workers = 4;
    p.mean_uptime_s = 0;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw cli::ConfigError("--synth: expected k=v items, got '" + item + "'");
        std::string key = item.substr(0, eq);
        double val = std::atof(item.c_str() + eq + 1);
        if (key == "n") p.n_workers = static_cast<uint32_t>(val);
        else if (key == "spread") p.join_spread_s = val;
        else if (key == "uptime") p.mean_uptime_s = val;
        else if (key == "downtime") p.mean_downtime_s = val;
        else if (key == "horizon") p.horizon_s = val;
        else if (key == "seed") p.seed = static_cast<uint64_t>(val);
        else throw cli::ConfigError("--synth: unknown parameter '" + key + "'");
    }
    return p;
}

mw::sim::AvailabilityTrace steady_pool(uint32_t workers) {
    mw::sim::AvailabilityTrace trace;
    for (uint32_t i = 0; i < workers; ++i) {
        char label[16];
        std::snprintf(label, sizeof label, "w%03u", i + 1);
        trace.events.push_back({0.0, label, mw::sim::AvailKind::Join});
    }
    return trace;
}

void emit(const std::string& text, const std::string& out_path) {
    std::cout << text;
    if (!out_path.empty()) radtrans::write_text_file(out_path, text);
}

int write_stromgren_outputs(const cli::RunConfig& cfg, const radtrans::Grid& final_grid) {
    if (!cfg.out_grid.empty()) radtrans::write_doubles_le(cfg.out_grid, final_grid.neutral);
    if (!cfg.out_csv.empty()) radtrans::write_neutral_csv(cfg.out_csv, final_grid);
    return kExitOk;
}

int cmd_master(const cli::RunConfig& cfg, bool json) {
    std::string host;
    uint16_t port = 0;
    if (!parse_endpoint(cfg.listen, host, port))
        return fail_config("listen: expected HOST:PORT, got '" + cfg.listen + "'");

    AppBundle app;
    try {
        app = make_app(cfg);
    } catch (const std::exception& e) {
        return fail_config(e.what());
    }

    mw::net::MasterServer server(cfg.master_config(), *app.hooks);
    std::string err;
    if (!server.bind(host, port, &err)) return fail_runtime(err);
    std::cerr << "master listening on " << host << ":" << server.port() << '\n';

    mw::RunReport report;
    if (!server.serve(&report, &err)) return fail_runtime(err);

    emit(json ? report.to_json() + "\n" : report.to_text(), cfg.out_report);
    if (app.stromgren) {
        write_stromgren_outputs(cfg, app.stromgren->grid());
        if (!app.stromgren->converged()) {
            std::cerr << "not converged after " << app.stromgren->epochs_run()
                      << " epochs (max change " << fmt_g17(app.stromgren->last_max_change())
                      << ")\n";
            return kExitNoConverge;
        }
    }
    return kExitOk;
}

int cmd_worker(const std::string& connect, const std::string& app_name) {
    std::string host;
    uint16_t port = 0;
    if (!parse_endpoint(connect, host, port))
        return fail_config("--connect: expected HOST:PORT, got '" + connect + "'");

    std::unique_ptr<mw::AppHooks> app;
    if (app_name == "stromgren") app = std::make_unique<radtrans::StromgrenApp>();
    else if (app_name == "synth") app = std::make_unique<mw::SyntheticApp>(0);
    else return fail_config("--app: expected stromgren or synth, got '" + app_name + "'");

    std::string err;
    int code = mw::net::run_worker_socket(host, port, *app, &err);
    if (code != 0) std::cerr << "worker: " << err << '\n';
    return code;
}

int cmd_simulate(const cli::RunConfig& cfg, const std::string& trace_path,
                 const std::string& synth_spec, bool json) {
    mw::sim::AvailabilityTrace trace;
    try {
        if (!trace_path.empty()) {
            std::ifstream in(trace_path);
            if (!in) return fail_config("cannot open trace file: " + trace_path);
            std::stringstream ss;
            ss << in.rdbuf();
            trace = mw::sim::load_trace(ss.str());
        } else {
            trace = mw::sim::synth_trace(parse_synth_spec(synth_spec));
        }
    } catch (const std::exception& e) {
        return fail_config(e.what());
    }

    AppBundle app;
    try {
        app = make_app(cfg);
    } catch (const std::exception& e) {
        return fail_config(e.what());
    }

    mw::sim::SimReport report;
    try {
        report = mw::sim::simulate(cfg.master_config(), *app.hooks, trace,
                                   {.msg_latency_s = cfg.msg_latency_s});
    } catch (const std::exception& e) {
        return fail_runtime(e.what());
    }

    emit(json ? report.to_json() + "\n" : report.to_text(), cfg.out_report);
    if (app.stromgren) {
        write_stromgren_outputs(cfg, app.stromgren->grid());
        if (!app.stromgren->converged()) {
            std::cerr << "not converged after " << app.stromgren->epochs_run()
                      << " epochs (max change " << fmt_g17(app.stromgren->last_max_change())
                      << ")\n";
            return kExitNoConverge;
        }
    }
    return kExitOk;
}

int cmd_demo(uint32_t n, uint32_t workers, int64_t churn_seed, const std::string& report_path,
             bool json) {
    double mid = n / 2.0;
    radtrans::Grid grid = radtrans::Grid::uniform(n, 1.0, {mid, mid, mid}, 1.0, 1.0);
    radtrans::PhysicsParams params;
    double target_radius = n / 4.0;
    params.source_rate = 4.0 * M_PI / 3.0 * target_radius * target_radius * target_radius;
    params.cross_section = 1.0;  // optical depth 1 per cell at full neutrality
    params.recombination = 1.0;

    mw::sim::AvailabilityTrace trace;
    if (churn_seed >= 0) {
        // mean uptime well below one epoch's virtual length, rejoins enabled
        trace = mw::sim::synth_trace({.n_workers = workers,
                                      .join_spread_s = 1.0,
                                      .mean_uptime_s = 300.0,
                                      .seed = static_cast<uint64_t>(churn_seed),
                                      .mean_downtime_s = 150.0,
                                      .horizon_s = 60000.0});
    } else {
        trace = steady_pool(workers);
    }

    radtrans::PhotoRunResult res;
    try {
        res = radtrans::run_photoionization(grid, params, {.min_workers = 1}, trace);
    } catch (const std::exception& e) {
        return fail_runtime(e.what());
    }

    double analytic = radtrans::stromgren_radius(params.source_rate, params.recombination, 1.0);
    std::ostringstream os;
    os << "ionized_radius=" << fmt_g17(res.measured_radius) << '\n'
       << "stromgren_radius=" << fmt_g17(analytic) << '\n'
       << "radius_err_frac=" << fmt_g17((res.measured_radius - analytic) / analytic) << '\n'
       << "converged=" << (res.converged ? 1 : 0) << '\n'
       << "final_max_change=" << fmt_g17(res.final_max_change) << '\n'
       << res.report.to_text();

    if (json) {
        nlohmann::ordered_json j = nlohmann::ordered_json::parse(res.report.to_json());
        j["ionized_radius"] = res.measured_radius;
        j["stromgren_radius"] = analytic;
        j["converged"] = res.converged;
        emit(j.dump(2) + "\n", report_path);
    } else {
        emit(os.str(), report_path);
    }
    return res.converged ? kExitOk : kExitNoConverge;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"churn-tolerant master-worker pool and adaptive ray-traced photoionization"};
    cli.require_subcommand(0, 1);

    bool print_defaults = false;
    cli.add_flag("--print-defaults", print_defaults, "print the config default table and exit");

    std::string config_path, listen_override, report_override;
    std::vector<std::string> overrides;
    bool json = false;

    auto add_config_opts = [&](CLI::App* cmd, bool require_config) {
        auto* c = cmd->add_option("--config", config_path, "key = value config file");
        if (require_config) c->required();
        cmd->add_option("--set", overrides, "override a config key (key=value, repeatable)");
        cmd->add_option("--report", report_override, "write the run report to this file");
        cmd->add_flag("--json", json, "emit the report as JSON");
    };

    auto* master_cmd = cli.add_subcommand("master", "run a socket master");
    add_config_opts(master_cmd, true);
    master_cmd->add_option("--listen", listen_override, "listen endpoint HOST:PORT");

    std::string connect_ep, worker_app = "stromgren";
    auto* worker_cmd = cli.add_subcommand("worker", "run a socket worker");
    worker_cmd->add_option("--connect", connect_ep, "master endpoint HOST:PORT")->required();
    worker_cmd->add_option("--app", worker_app, "application (stromgren|synth)");

    std::string trace_path, synth_spec, app_override;
    auto* sim_cmd = cli.add_subcommand("simulate", "replay an availability trace virtually");
    add_config_opts(sim_cmd, true);
    auto* topt = sim_cmd->add_option("--trace", trace_path, "availability trace CSV");
    auto* sopt = sim_cmd->add_option(
        "--synth", synth_spec, "synthesize a trace: n=..,spread=..,uptime=..,seed=..");
    topt->excludes(sopt);
    sim_cmd->add_option("--app", app_override, "application override (stromgren|synth)");

    uint32_t demo_n = 32, demo_workers = 8;
    int64_t churn_seed = -1;
    std::string demo_name;
    auto* demo_cmd = cli.add_subcommand("demo", "run the bundled scenario in simulation");
    demo_cmd->add_option("scenario", demo_name, "demo scenario (stromgren)")->required();
    demo_cmd->add_option("--n", demo_n, "grid cells per axis");
    demo_cmd->add_option("--workers", demo_workers, "simulated worker count");
    demo_cmd->add_option("--churn", churn_seed, "synthesize worker churn with this seed");
    demo_cmd->add_option("--report", report_override, "write the report to this file");
    demo_cmd->add_flag("--json", json, "emit the report as JSON");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = cli.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (print_defaults) {
        std::cout << cli::default_config_text();
        return kExitOk;
    }

    try {
        if (master_cmd->parsed() || sim_cmd->parsed()) {
            cli::RunConfig cfg;
            try {
                cfg = cli::load_config_file(config_path);
                for (const std::string& kv : overrides) cli::apply_override(cfg, kv);
                if (!listen_override.empty()) cfg.listen = listen_override;
                if (!report_override.empty()) cfg.out_report = report_override;
                if (!app_override.empty()) cfg.app = app_override;
                cli::validate(cfg);
            } catch (const cli::ConfigError& e) {
                return fail_config(e.what());
            }
            if (master_cmd->parsed()) return cmd_master(cfg, json);
            if (trace_path.empty() && synth_spec.empty())
                return fail_config("simulate needs --trace or --synth");
            return cmd_simulate(cfg, trace_path, synth_spec, json);
        }
        if (worker_cmd->parsed()) return cmd_worker(connect_ep, worker_app);
        if (demo_cmd->parsed()) {
            if (demo_name != "stromgren") {
                std::cerr << "unknown demo scenario '" << demo_name << "'\n";
                return kExitUsage;
            }
            if (demo_n < 2 || demo_n > 4096) return fail_config("--n: must be in [2, 4096]");
            if (demo_workers < 1) return fail_config("--workers: must be >= 1");
            return cmd_demo(demo_n, demo_workers, churn_seed, report_override, json);
        }
    } catch (const std::exception& e) {
        return fail_runtime(e.what());
    }

    std::cerr << cli.help();
    return kExitUsage;
}
