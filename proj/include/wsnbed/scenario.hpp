#pragma once

/**
 * @file scenario.hpp
 * @brief Scenario files, the bundled reference deployment, and the
 * simulation driver that wires nodes, network and gateway together.
 */

#include "wsnbed/gateway.hpp"
#include "wsnbed/latency.hpp"
#include "wsnbed/network.hpp"
#include "wsnbed/robot.hpp"
#include "wsnbed/temp_node.hpp"
#include "wsnbed/topology.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace wsnbed {

enum class Speed { Fast, Realtime };

struct WaypointCommand {
    SimTime at_ms = 0;
    NodeId node = kRobotNodeId;
    int x = 0;
    int y = 0;
};

struct FailureSpec {
    SimTime at_ms = 0;
    NodeId a = 0;
    std::optional<NodeId> b;  // set: link a-b, unset: node a
};

struct ScenarioConfig {
    TopologyConfig topology;
    std::optional<DelayParams> delay;
    std::vector<CalibrationRow> calibration;
    bool jitter = false;
    std::uint64_t seed = 1;
    double duration_s = 60;
    Speed speed = Speed::Fast;
    std::vector<TempNodeConfig> temp_nodes;
    std::optional<RobotConfig> robot;
    std::vector<WaypointCommand> commands;
    std::vector<FailureSpec> failures;
    GatewayConfig gateway;
    std::string bind = "127.0.0.1:8080";
    std::string log_path;

    /// Explicit params win; otherwise solve from the calibration rows.
    DelayParams delay_params() const {
        if (delay) return *delay;
        return calibrate_delay_params(calibration);
    }
};

class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(std::vector<std::string> errors)
        : std::runtime_error(join(errors)), errors_(std::move(errors)) {}

    const std::vector<std::string>& errors() const { return errors_; }

private:
    static std::string join(const std::vector<std::string>& errors) {
        std::string s = "invalid scenario:";
        for (const auto& e : errors) s += "\n  - " + e;
        return s;
    }
    std::vector<std::string> errors_;
};

namespace detail {

using nlohmann::json;

inline Role parse_role(const std::string& s, std::vector<std::string>& errors, NodeId id) {
    if (s == "coordinator") return Role::Coordinator;
    if (s == "router") return Role::Router;
    if (s == "end_device") return Role::EndDevice;
    errors.push_back("node " + std::to_string(id) + ": unknown role '" + s + "'");
    return Role::EndDevice;
}

inline std::uint64_t parse_pan_id(const json& j) {
    if (j.is_string()) return std::stoull(j.get<std::string>(), nullptr, 0);
    return j.get<std::uint64_t>();
}

/// Reads a value, recording a type error instead of throwing.
template <typename T>
bool read(const json& obj, const char* key, T& out, std::vector<std::string>& errors, const std::string& where,
          bool required = false) {
    if (!obj.contains(key)) {
        if (required) errors.push_back(where + ": missing '" + key + "'");
        return false;
    }
    try {
        out = obj.at(key).get<T>();
        return true;
    } catch (const json::exception&) {
        errors.push_back(where + ": '" + key + "' has the wrong type");
        return false;
    }
}

inline void parse_node(const json& jn, ScenarioConfig& cfg, std::vector<std::string>& errors) {
    NodeSpec spec;
    std::string where = "node";
    if (!read(jn, "id", spec.id, errors, where, true)) return;
    where = "node " + std::to_string(spec.id);
    read(jn, "name", spec.name, errors, where);
    std::string role;
    if (read(jn, "role", role, errors, where, true)) spec.role = parse_role(role, errors, spec.id);
    std::vector<double> pos;
    if (read(jn, "position", pos, errors, where, true)) {
        if (pos.size() != 2) {
            errors.push_back(where + ": position must be [x, y]");
        } else {
            spec.position = {pos[0], pos[1]};
        }
    }
    read(jn, "range", spec.radio_range, errors, where, true);
    if (jn.contains("pan_id")) {
        try {
            spec.pan_id = parse_pan_id(jn["pan_id"]);
        } catch (const std::exception&) {
            errors.push_back(where + ": bad pan_id");
        }
    }
    if (jn.contains("sleep")) {
        SleepSchedule s;
        const json& js = jn["sleep"];
        read(js, "period_ms", s.period_ms, errors, where + " sleep", true);
        read(js, "awake_ms", s.awake_ms, errors, where + " sleep", true);
        read(js, "offset_ms", s.offset_ms, errors, where + " sleep");
        spec.sleep = s;
    }
    if (jn.contains("sensor")) {
        const json& js = jn["sensor"];
        TempNodeConfig t;
        if (spec.id < 1 || spec.id > 254) errors.push_back(where + ": sensor node id must be in 1..254");
        t.node_id = static_cast<Byte>(spec.id);
        const std::string w = where + " sensor";
        read(js, "baseline_c", t.ambient.baseline_c, errors, w, true);
        read(js, "walk_step_c", t.ambient.walk_step_c, errors, w);
        read(js, "min_c", t.ambient.min_c, errors, w);
        read(js, "max_c", t.ambient.max_c, errors, w);
        read(js, "sample_period_ms", t.sample_period_ms, errors, w);
        read(js, "first_tick_ms", t.first_tick_ms, errors, w);
        read(js, "adc_noise", t.adc_noise, errors, w);
        try {
            t.ambient.validate();
        } catch (const std::exception& e) {
            errors.push_back(w + ": " + e.what());
        }
        if (!(t.sample_period_ms > 0)) errors.push_back(w + ": sample_period_ms must be > 0");
        cfg.temp_nodes.push_back(t);
    }
    if (jn.contains("robot")) {
        const json& jr = jn["robot"];
        RobotConfig r;
        const std::string w = where + " robot";
        if (spec.id != kRobotNodeId) errors.push_back(where + ": the robot must use node id 3");
        r.node_id = static_cast<Byte>(spec.id);
        read(jr, "wheel_radius_m", r.geometry.wheel_radius_m, errors, w);
        read(jr, "wheelbase_m", r.geometry.wheelbase_m, errors, w);
        read(jr, "encoder_ppr", r.geometry.encoder_ppr, errors, w);
        read(jr, "cruise_speed_mps", r.controller.cruise_speed_mps, errors, w);
        read(jr, "turn_rate_radps", r.controller.turn_rate_radps, errors, w);
        read(jr, "position_tol_m", r.controller.position_tol_m, errors, w);
        double tol_deg = r.controller.heading_tol_rad * 180.0 / std::numbers::pi;
        if (read(jr, "heading_tol_deg", tol_deg, errors, w)) {
            r.controller.heading_tol_rad = tol_deg * std::numbers::pi / 180.0;
        }
        read(jr, "control_period_ms", r.control_period_ms, errors, w);
        read(jr, "report_period_ms", r.report_period_ms, errors, w);
        read(jr, "first_report_ms", r.first_report_ms, errors, w);
        try {
            r.geometry.validate();
        } catch (const std::exception& e) {
            errors.push_back(w + ": " + e.what());
        }
        if (!(r.control_period_ms > 0) || !(r.report_period_ms > 0)) {
            errors.push_back(w + ": periods must be > 0");
        }
        if (cfg.robot) errors.push_back(where + ": only one robot is supported");
        cfg.robot = r;
    }
    cfg.topology.nodes.push_back(spec);
}

inline std::vector<Link> parse_links(const json& j, const char* key, std::vector<std::string>& errors) {
    std::vector<Link> out;
    if (!j.contains(key)) return out;
    for (const auto& l : j[key]) {
        if (!l.is_array() || l.size() != 2) {
            errors.push_back(std::string(key) + ": each entry must be [a, b]");
            continue;
        }
        out.emplace_back(l[0].get<NodeId>(), l[1].get<NodeId>());
    }
    return out;
}

}  // namespace detail

/// Parses scenario text, reporting every problem found rather than the first.
inline ScenarioConfig parse_scenario_text(const std::string& text) {
    using nlohmann::json;
    std::vector<std::string> errors;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ScenarioError({std::string("not valid JSON: ") + e.what()});
    }
    if (!j.is_object()) throw ScenarioError({"scenario must be a JSON object"});

    ScenarioConfig cfg;
    if (j.contains("pan_id")) {
        try {
            cfg.topology.pan_id = detail::parse_pan_id(j["pan_id"]);
        } catch (const std::exception&) {
            errors.push_back("bad pan_id");
        }
    } else {
        errors.push_back("missing 'pan_id'");
    }
    detail::read(j, "permit_join", cfg.topology.permit_join, errors, "scenario");
    detail::read(j, "seed", cfg.seed, errors, "scenario");
    detail::read(j, "duration_s", cfg.duration_s, errors, "scenario");
    detail::read(j, "jitter", cfg.jitter, errors, "scenario");
    std::string speed;
    if (detail::read(j, "speed", speed, errors, "scenario")) {
        if (speed == "fast") {
            cfg.speed = Speed::Fast;
        } else if (speed == "realtime") {
            cfg.speed = Speed::Realtime;
        } else {
            errors.push_back("speed must be 'fast' or 'realtime'");
        }
    }
    if (!(cfg.duration_s > 0)) errors.push_back("duration_s must be > 0");

    if (!j.contains("nodes") || !j["nodes"].is_array() || j["nodes"].empty()) {
        errors.push_back("missing or empty 'nodes'");
    } else {
        for (const auto& jn : j["nodes"]) {
            if (!jn.is_object()) {
                errors.push_back("node entries must be objects");
                continue;
            }
            detail::parse_node(jn, cfg, errors);
        }
    }
    cfg.topology.links_up = detail::parse_links(j, "links_up", errors);
    cfg.topology.links_down = detail::parse_links(j, "links_down", errors);

    if (j.contains("delay")) {
        const auto& jd = j["delay"];
        if (jd.contains("calibration")) {
            for (const auto& row : jd["calibration"]) {
                if (!row.is_array() || row.size() != 3) {
                    errors.push_back("calibration rows must be [hops, meters, delay_ms]");
                    continue;
                }
                cfg.calibration.push_back({row[0].get<int>(), row[1].get<double>(), row[2].get<double>()});
            }
        } else {
            DelayParams p;
            detail::read(jd, "t_base_ms", p.t_base_ms, errors, "delay", true);
            detail::read(jd, "t_hop_ms", p.t_hop_ms, errors, "delay", true);
            detail::read(jd, "k_ms_per_m", p.k_ms_per_m, errors, "delay", true);
            if (!p.valid()) errors.push_back("delay parameters must be >= 0");
            cfg.delay = p;
        }
    } else {
        errors.push_back("missing 'delay'");
    }
    if (!cfg.delay && !cfg.calibration.empty()) {
        try {
            cfg.delay = calibrate_delay_params(cfg.calibration);
        } catch (const CalibrationError& e) {
            errors.push_back(e.what());
        }
    }

    std::set<NodeId> ids;
    for (const auto& n : cfg.topology.nodes) {
        if (!ids.insert(n.id).second) errors.push_back("duplicate node id " + std::to_string(n.id));
    }
    auto check_ref = [&](NodeId id, const std::string& what) {
        if (!ids.count(id)) errors.push_back(what + " refers to undefined node " + std::to_string(id));
    };
    for (const auto& [a, b] : cfg.topology.links_up) check_ref(a, "links_up"), check_ref(b, "links_up");
    for (const auto& [a, b] : cfg.topology.links_down) check_ref(a, "links_down"), check_ref(b, "links_down");

    if (j.contains("commands")) {
        for (const auto& jc : j["commands"]) {
            WaypointCommand c;
            detail::read(jc, "at_ms", c.at_ms, errors, "command", true);
            detail::read(jc, "node", c.node, errors, "command");
            detail::read(jc, "x", c.x, errors, "command", true);
            detail::read(jc, "y", c.y, errors, "command", true);
            check_ref(c.node, "command");
            if (ids.count(c.node) && (!cfg.robot || cfg.robot->node_id != c.node)) {
                errors.push_back("command targets node " + std::to_string(c.node) + " which is not a robot");
            }
            if (c.x < 0 || c.x > 255 || c.y < 0 || c.y > 255) errors.push_back("command coordinates must be 0..255");
            cfg.commands.push_back(c);
        }
    }
    if (j.contains("failures")) {
        for (const auto& jf : j["failures"]) {
            FailureSpec f;
            detail::read(jf, "at_ms", f.at_ms, errors, "failure", true);
            if (jf.contains("node")) {
                f.a = jf["node"].get<NodeId>();
                check_ref(f.a, "failure");
            } else if (jf.contains("link")) {
                auto l = jf["link"].get<std::vector<NodeId>>();
                if (l.size() != 2) {
                    errors.push_back("failure link must be [a, b]");
                    continue;
                }
                f.a = l[0];
                f.b = l[1];
                check_ref(l[0], "failure");
                check_ref(l[1], "failure");
            } else {
                errors.push_back("failure needs 'node' or 'link'");
                continue;
            }
            cfg.failures.push_back(f);
        }
    }
    if (j.contains("gateway")) {
        const auto& jg = j["gateway"];
        detail::read(jg, "bind", cfg.bind, errors, "gateway");
        detail::read(jg, "log_path", cfg.log_path, errors, "gateway");
        std::string start;
        if (detail::read(jg, "start_time", start, errors, "gateway")) {
            try {
                cfg.gateway.start_time = parse_civil_time(start);
            } catch (const std::exception& e) {
                errors.push_back(std::string("gateway: ") + e.what());
            }
        }
    }

    if (errors.empty()) {
        try {
            build_topology(cfg.topology);
        } catch (const TopologyError& e) {
            errors.push_back(e.what());
        }
    }
    if (!errors.empty()) throw ScenarioError(std::move(errors));
    return cfg;
}

inline ScenarioConfig parse_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError({"cannot open scenario file " + path});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_text(ss.str());
}

// --- reference deployment -------------------------------------------------

inline constexpr NodeId kCoordinatorId = 0;
inline constexpr NodeId kRouter1Id = 10;
inline constexpr NodeId kRouter2Id = 11;

/**
 * Six nodes on one ray from the coordinator: Robot 5 m, Router2 8 m,
 * Node2 11 m, Router1 14 m, Node1 17 m. Node2 sits 3 m from both routers;
 * the forced-down link keeps it on Router2.
 */
inline TopologyConfig reference_topology() {
    const SleepSchedule sleep{500, 50, 0};
    TopologyConfig t;
    t.pan_id = 0x0013A20040A1B2C3ull;
    t.nodes = {
        {kCoordinatorId, "Coordinator", Role::Coordinator, {0, 0}, 15, std::nullopt, std::nullopt},
        {kLab1NodeId, "Node1", Role::EndDevice, {17, 0}, 4, sleep, std::nullopt},
        {kLab2NodeId, "Node2", Role::EndDevice, {11, 0}, 4, sleep, std::nullopt},
        {kRobotNodeId, "Robot", Role::EndDevice, {5, 0}, 6, sleep, std::nullopt},
        {kRouter1Id, "Router1", Role::Router, {14, 0}, 15, std::nullopt, std::nullopt},
        {kRouter2Id, "Router2", Role::Router, {8, 0}, 9, std::nullopt, std::nullopt},
    };
    t.links_down = {{kLab2NodeId, kRouter1Id}};
    return t;
}

/// Reference layout with Router2 moved off the ray so Node1 can also reach it, the long way round.
inline TopologyConfig failover_topology() {
    TopologyConfig t = reference_topology();
    for (auto& n : t.nodes) {
        if (n.id == kRouter2Id) {
            n.position = {6.4, 4.8};
            n.radio_range = 12;
        }
        if (n.id == kLab2NodeId) n.position = {8.8, 6.6};
        if (n.id == kLab1NodeId) n.radio_range = 12;
    }
    t.links_down.clear();
    return t;
}

inline ScenarioConfig reference_scenario() {
    ScenarioConfig cfg;
    cfg.topology = reference_topology();
    cfg.calibration = reference_delay_rows();
    cfg.delay = calibrate_delay_params(cfg.calibration);
    cfg.seed = 2013;
    cfg.duration_s = 60;
    TempNodeConfig lab1;
    lab1.node_id = kLab1NodeId;
    lab1.ambient = {32.2, 0.0, 0.0, 60.0};
    TempNodeConfig lab2;
    lab2.node_id = kLab2NodeId;
    lab2.ambient = {28.2, 0.0, 0.0, 60.0};
    cfg.temp_nodes = {lab1, lab2};
    cfg.robot = RobotConfig{};
    cfg.commands = {{1200, kRobotNodeId, 2, 1}};
    return cfg;
}

// --- simulation driver ----------------------------------------------------

struct RunSummary {
    NetStats stats;
    std::uint64_t csv_rows = 0;
    std::uint64_t event_log_lines = 0;
    SimTime end_time = 0;
};

/**
 * One deployment: network, sensor nodes, robot and the coordinator's gateway.
 * Owned and driven by a single thread.
 */
class Simulation {
public:
    /// Called between events; realtime runs also call it while waiting on the wall clock.
    using Hook = std::function<void(Simulation&)>;

    Simulation(const ScenarioConfig& cfg, std::ostream* event_log, CsvLog* csv)
        : cfg_(cfg),
          net_(build_topology(cfg.topology), NetworkOptions{cfg.delay_params(), cfg.jitter, cfg.seed}, event_log),
          gateway_(cfg.gateway, csv),
          coordinator_(*this) {
        net_.attach(net_.topology().coordinator(), &coordinator_);
        for (const auto& t : cfg.temp_nodes) {
            temp_nodes_.push_back(std::make_unique<TempNode>(t, cfg.seed));
            temp_nodes_.back()->start(net_);
        }
        if (cfg.robot) {
            robot_ = std::make_unique<Robot>(*cfg.robot);
            robot_->start(net_);
        }
        gateway_.set_transmitter([this](Byte node, Bytes bytes) -> DispatchResult {
            const NodeId dst = node;
            const NodeId src = net_.topology().coordinator();
            if (!net_.topology().contains(dst)) return {false, "robot node is not part of the network"};
            if (!net_.has_route(src, dst)) return {false, "no route to robot"};
            auto r = net_.transmit(src, dst, std::move(bytes));
            if (!r.accepted) return {false, r.reason};
            return {true, {}};
        });
        for (const auto& c : cfg.commands) net_.schedule_timer(net_.topology().coordinator(), c.at_ms, command_tag(c));
        for (const auto& f : cfg.failures) {
            if (f.b) {
                net_.schedule_link_failure(f.at_ms, f.a, *f.b);
            } else {
                net_.schedule_node_failure(f.at_ms, f.a);
            }
        }
    }

    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    Network& network() { return net_; }
    const Network& network() const { return net_; }
    Gateway& gateway() { return gateway_; }
    Robot* robot() { return robot_.get(); }
    const ScenarioConfig& config() const { return cfg_; }
    std::int64_t gateway_millis() const { return static_cast<std::int64_t>(std::floor(net_.now())); }

    /// Runs to `duration_ms` of simulated time (relative to time 0).
    void run(SimTime duration_ms, Speed speed = Speed::Fast, const Hook& hook = {}) {
        using clock = std::chrono::steady_clock;
        const auto wall_start = clock::now() - std::chrono::microseconds(static_cast<long long>(net_.now() * 1000));
        while (auto t = net_.next_event_time()) {
            if (*t > duration_ms) break;
            if (speed == Speed::Realtime) {
                const auto due = wall_start + std::chrono::microseconds(static_cast<long long>(*t * 1000));
                while (clock::now() < due) {
                    if (hook) hook(*this);
                    std::this_thread::sleep_until(std::min(due, clock::now() + std::chrono::milliseconds(10)));
                }
            }
            if (hook) hook(*this);
            net_.step();
        }
        if (speed == Speed::Realtime) {
            const auto due = wall_start + std::chrono::microseconds(static_cast<long long>(duration_ms * 1000));
            while (clock::now() < due) {
                if (hook) hook(*this);
                std::this_thread::sleep_until(std::min(due, clock::now() + std::chrono::milliseconds(10)));
            }
        }
        net_.run_until(duration_ms);
    }

    RunSummary summary(const CsvLog* csv) const {
        return RunSummary{net_.stats(), csv ? csv->data_lines() : 0, net_.log_lines(), net_.now()};
    }

private:
    class CoordinatorApp : public NodeHandler {
    public:
        explicit CoordinatorApp(Simulation& sim) : sim_(sim) {}
        void on_receive(Network& net, const Delivery& d) override {
            net.note("ingest", d.packet.src, net.topology().coordinator(), "pkt=" + std::to_string(d.packet.id));
            sim_.gateway_.ingest(d.packet.bytes, sim_.gateway_millis());
        }
        void on_timer(Network& net, int tag) override {
            const int x = (tag >> 8) & 0xFF;
            const int y = tag & 0xFF;
            auto r = sim_.gateway_.send_waypoint(x, y);
            net.note("waypoint", net.topology().coordinator(), kRobotNodeId,
                     std::to_string(x) + "," + std::to_string(y) + (r.ok ? " ok" : " error"));
        }

    private:
        Simulation& sim_;
    };

    static int command_tag(const WaypointCommand& c) { return (c.x & 0xFF) << 8 | (c.y & 0xFF); }

    ScenarioConfig cfg_;
    Network net_;
    Gateway gateway_;
    CoordinatorApp coordinator_;
    std::vector<std::unique_ptr<TempNode>> temp_nodes_;
    std::unique_ptr<Robot> robot_;
};

// --- delay table ------------------------------------------------------------

struct DelayTableRow {
    NodeId id = 0;
    std::string name;
    double distance_m = 0;
    std::optional<int> hops;
    std::optional<double> reported_ms;
    std::optional<double> measured_ms;
    std::optional<double> jitter_mean_ms;
    std::string failure;
};

struct DelayTableOptions {
    int jitter_trials = 0;
    std::vector<NodeId> failed_nodes;
};

/// Delays measured for the reference deployment, keyed by node id.
inline std::optional<double> reported_delay_ms(NodeId id) {
    switch (id) {
        case kLab1NodeId: return 380.0;
        case kLab2NodeId: return 312.0;
        case kRobotNodeId: return 170.0;
        default: return std::nullopt;
    }
}

/// Sends one probe uplink from each end device at t=0 (all awake) and records arrival times.
inline std::map<NodeId, std::optional<SimTime>> measure_uplinks(const ScenarioConfig& cfg, const DelayParams& params,
                                                               bool jitter, std::uint64_t seed,
                                                               const std::vector<NodeId>& failed) {
    Network net(build_topology(cfg.topology), NetworkOptions{params, jitter, seed});
    for (NodeId f : failed) net.fail_node(f);
    std::map<NodeId, std::uint64_t> probe;
    std::map<NodeId, std::optional<SimTime>> out;
    for (const auto& [id, spec] : net.topology().nodes()) {
        if (spec.role != Role::EndDevice) continue;
        out[id] = std::nullopt;
        if (!net.topology().node_up(id)) continue;
        const Byte fid = static_cast<Byte>(std::clamp(id, 1, 254));
        auto r = net.transmit(id, net.topology().coordinator(), encode_frame(Frame(fid, {0, 0})));
        probe[id] = r.packet_id;
    }
    net.run_until(10'000);
    for (const auto& d : net.deliveries()) {
        for (const auto& [id, pid] : probe) {
            if (pid == d.packet.id) out[id] = d.arrival - d.packet.send_time;
        }
    }
    return out;
}

inline std::vector<DelayTableRow> reproduce_table(const ScenarioConfig& cfg, const DelayTableOptions& opt = {}) {
    const DelayParams params = cfg.delay_params();
    const Topology topo = build_topology(cfg.topology);
    Topology failed_topo = topo;
    for (NodeId f : opt.failed_nodes) failed_topo.fail_node(f);
    const RoutingTable routes = compute_routes(failed_topo);

    const auto nominal = measure_uplinks(cfg, params, false, cfg.seed, opt.failed_nodes);
    std::map<NodeId, double> jitter_sum;
    std::map<NodeId, int> jitter_n;
    for (int trial = 0; trial < opt.jitter_trials; ++trial) {
        const auto m = measure_uplinks(cfg, params, true, cfg.seed + static_cast<std::uint64_t>(trial), opt.failed_nodes);
        for (const auto& [id, t] : m) {
            if (t) {
                jitter_sum[id] += *t;
                ++jitter_n[id];
            }
        }
    }

    std::vector<DelayTableRow> rows;
    for (const auto& [id, t] : nominal) {
        const NodeSpec& spec = topo.node(id);
        DelayTableRow row;
        row.id = id;
        row.name = spec.name.empty() ? "node " + std::to_string(id) : spec.name;
        row.distance_m = distance(spec.position, topo.node(topo.coordinator()).position);
        row.hops = routes.hops(id);
        row.reported_ms = reported_delay_ms(id);
        row.measured_ms = t;
        if (jitter_n[id] > 0) row.jitter_mean_ms = jitter_sum[id] / jitter_n[id];
        if (!t) row.failure = "delivery failed";
        rows.push_back(row);
    }
    return rows;
}

inline std::string render_table(const std::vector<DelayTableRow>& rows, const DelayParams& params) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "delay model: t_base=%.4f ms  t_hop=%.4f ms  k=%.4f ms/m\n", params.t_base_ms,
                  params.t_hop_ms, params.k_ms_per_m);
    os << buf;
    std::snprintf(buf, sizeof buf, "%-10s %10s %5s %12s %12s %14s\n", "SENSOR", "DISTANCE", "HOPS", "REPORTED", "MEASURED",
                  "JITTER MEAN");
    os << buf;
    auto ms = [](const std::optional<double>& v) {
        if (!v) return std::string("-");
        char b[32];
        std::snprintf(b, sizeof b, "%.3f ms", *v);
        return std::string(b);
    };
    for (const auto& r : rows) {
        char dist[32];
        std::snprintf(dist, sizeof dist, "%.1fm", r.distance_m);
        std::snprintf(buf, sizeof buf, "%-10s %10s %5s %12s %12s %14s\n", r.name.c_str(), dist,
                      r.hops ? std::to_string(*r.hops).c_str() : "-", ms(r.reported_ms).c_str(),
                      r.failure.empty() ? ms(r.measured_ms).c_str() : r.failure.c_str(), ms(r.jitter_mean_ms).c_str());
        os << buf;
    }
    return os.str();
}

}  // namespace wsnbed
