// wsnbed: run sensor-network scenarios, serve the gateway, regenerate the delay table.

#include "wsnbed/http_service.hpp"
#include "wsnbed/scenario.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

struct Overrides {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<double> duration_s;
    std::optional<std::string> speed;
    bool jitter = false;
    std::optional<std::string> bind;
    std::optional<std::string> log_path;
    std::string event_log = "events.log";
};

wsnbed::ScenarioConfig load(const Overrides& o) {
    wsnbed::ScenarioConfig cfg = o.scenario.empty() ? wsnbed::reference_scenario() : wsnbed::parse_scenario(o.scenario);
    if (o.seed) cfg.seed = *o.seed;
    if (o.duration_s) {
        if (!(*o.duration_s > 0)) throw wsnbed::ScenarioError({"--duration must be > 0"});
        cfg.duration_s = *o.duration_s;
    }
    if (o.speed) {
        if (*o.speed == "fast") {
            cfg.speed = wsnbed::Speed::Fast;
        } else if (*o.speed == "realtime") {
            cfg.speed = wsnbed::Speed::Realtime;
        } else {
            throw wsnbed::ScenarioError({"--speed must be fast or realtime"});
        }
    }
    if (o.jitter) cfg.jitter = true;
    if (o.bind) cfg.bind = *o.bind;
    if (o.log_path) cfg.log_path = *o.log_path;
    if (cfg.log_path.empty()) cfg.log_path = "wsn_log.csv";
    return cfg;
}

std::pair<std::string, int> split_bind(const std::string& bind) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw wsnbed::ScenarioError({"--bind must be host:port"});
    return {bind.substr(0, colon), std::stoi(bind.substr(colon + 1))};
}

int run_scenario(const Overrides& o, bool serve) {
    wsnbed::ScenarioConfig cfg = load(o);
    std::ofstream events(o.event_log, std::ios::binary | std::ios::trunc);
    if (!events) {
        std::cerr << "error: cannot open event log " << o.event_log << "\n";
        return 1;
    }
    wsnbed::CsvLog csv = wsnbed::CsvLog::open(cfg.log_path);
    wsnbed::Simulation sim(cfg, &events, &csv);

    std::optional<wsnbed::GatewayService> service;
    wsnbed::Simulation::Hook hook;
    if (serve) {
        service.emplace();
        service->attach(sim.gateway());
        const auto [host, port] = split_bind(cfg.bind);
        const int bound = service->start(host, port);
        service->set_loop_running(true);
        std::cerr << "gateway listening on http://" << host << ":" << bound << "\n";
        hook = [&service](wsnbed::Simulation& s) {
            service->pump(s.gateway());
            service->publish_state(s.gateway().snapshot(s.gateway_millis()), s.gateway_millis());
        };
    }

    std::signal(SIGINT, on_signal);
    sim.run(cfg.duration_s * 1000.0, cfg.speed, [&](wsnbed::Simulation& s) {
        if (hook) hook(s);
        if (g_interrupted) throw wsnbed::SimulationError("interrupted");
    });
    if (hook) hook(sim);

    const auto summary = sim.summary(&csv);
    std::printf("simulated %.3f s: sent=%llu delivered=%llu failed=%llu dropped=%llu buffered=%llu in_flight=%llu\n",
                summary.end_time / 1000.0, static_cast<unsigned long long>(summary.stats.sent),
                static_cast<unsigned long long>(summary.stats.delivered),
                static_cast<unsigned long long>(summary.stats.failed),
                static_cast<unsigned long long>(summary.stats.dropped),
                static_cast<unsigned long long>(summary.stats.buffered),
                static_cast<unsigned long long>(summary.stats.in_flight));
    std::printf("csv rows=%llu (%s)  event log lines=%llu (%s)\n", static_cast<unsigned long long>(summary.csv_rows),
                cfg.log_path.c_str(), static_cast<unsigned long long>(summary.event_log_lines), o.event_log.c_str());
    if (auto* robot = sim.robot()) {
        const auto& e = robot->estimate();
        std::printf("robot phase=%s estimate=(%.4f, %.4f, %.3f deg)\n", wsnbed::to_string(robot->mission().phase), e.x,
                    e.y, e.theta * 180.0 / std::numbers::pi);
    }

    if (serve) {
        service->set_loop_running(false);
        std::cerr << "simulation finished; still serving, Ctrl-C to exit\n";
        while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        service->stop();
    }
    if (summary.stats.delivered == 0) {
        std::cerr << "error: no frames were delivered; check the scenario\n";
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wireless sensor network testbed"};
    app.require_subcommand(1);
    Overrides o;

    auto add_common = [&o](CLI::App* sub) {
        sub->add_option("--scenario", o.scenario, "Scenario JSON file (default: built-in reference)");
        sub->add_option("--seed", o.seed, "Random seed override");
    };

    auto* run = app.add_subcommand("run", "Run a scenario and write the CSV and event log");
    add_common(run);
    run->add_option("--duration", o.duration_s, "Simulated duration in seconds");
    run->add_option("--speed", o.speed, "fast or realtime");
    run->add_flag("--jitter", o.jitter, "Enable +/-5% per-hop delay jitter");
    run->add_option("--bind", o.bind, "Also serve the gateway on host:port");
    run->add_option("--log-path", o.log_path, "CSV log path");
    run->add_option("--event-log", o.event_log, "Event log path");

    auto* serve = app.add_subcommand("serve", "Run in realtime and serve the operator console endpoints");
    add_common(serve);
    serve->add_option("--duration", o.duration_s, "Simulated duration in seconds");
    serve->add_option("--speed", o.speed, "fast or realtime (default realtime)");
    serve->add_flag("--jitter", o.jitter, "Enable +/-5% per-hop delay jitter");
    serve->add_option("--bind", o.bind, "host:port to listen on");
    serve->add_option("--log-path", o.log_path, "CSV log path");
    serve->add_option("--event-log", o.event_log, "Event log path");

    int trials = 100;
    std::vector<wsnbed::NodeId> fail_nodes;
    auto* table = app.add_subcommand("reproduce-table", "Measure end-to-end uplink delays per end device");
    add_common(table);
    table->add_option("--trials", trials, "Jittered trials (0 disables)");
    table->add_option("--fail-node", fail_nodes, "Fail these node ids before measuring");

    std::vector<std::string> rows;
    auto* calibrate = app.add_subcommand("calibrate", "Fit the delay model to three (hops, meters, ms) rows");
    calibrate->add_option("--scenario", o.scenario, "Take calibration rows from this scenario");
    calibrate->add_option("--row", rows, "hops,meters,delay_ms (give exactly three)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return run_scenario(o, run->count("--bind") > 0);
        if (*serve) {
            if (!o.speed) o.speed = "realtime";
            return run_scenario(o, true);
        }
        if (*table) {
            const auto cfg = load(o);
            const auto result = wsnbed::reproduce_table(cfg, {trials, fail_nodes});
            std::cout << wsnbed::render_table(result, cfg.delay_params());
            return 0;
        }
        if (*calibrate) {
            std::vector<wsnbed::CalibrationRow> parsed;
            if (!rows.empty()) {
                for (const auto& r : rows) {
                    wsnbed::CalibrationRow row;
                    if (std::sscanf(r.c_str(), "%d,%lf,%lf", &row.hops, &row.path_m, &row.delay_ms) != 3) {
                        std::cerr << "error: bad --row '" << r << "'\n";
                        return 1;
                    }
                    parsed.push_back(row);
                }
            } else if (!o.scenario.empty()) {
                parsed = wsnbed::parse_scenario(o.scenario).calibration;
            } else {
                parsed = wsnbed::reference_delay_rows();
            }
            const auto p = wsnbed::calibrate_delay_params(parsed);
            std::printf("t_base_ms=%.6f t_hop_ms=%.6f k_ms_per_m=%.6f\n", p.t_base_ms, p.t_hop_ms, p.k_ms_per_m);
            return 0;
        }
    } catch (const wsnbed::ScenarioError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
