#pragma once

/**
 * @file http_service.hpp
 * @brief Operator-console transport for the gateway.
 *
 *   GET  /state     latest LiveState as JSON
 *   GET  /events    server-sent events, one JSON record per reading
 *   POST /waypoint  {"x": int, "y": int}; 202 accepted, 400 bad input, 503 dispatch error
 *   GET  /log       CSV log
 *
 * The simulation thread is the only writer: it publishes snapshots and
 * readings, and drains queued waypoint requests in pump(). HTTP handlers
 * only read copies and enqueue.
 */

#include "wsnbed/gateway.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <future>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace wsnbed {

inline nlohmann::json to_json(const LiveState& s, std::int64_t now_ms) {
    nlohmann::json j;
    j["temp1"] = s.temp_lab1 ? nlohmann::json(*s.temp_lab1) : nlohmann::json(nullptr);
    j["temp2"] = s.temp_lab2 ? nlohmann::json(*s.temp_lab2) : nlohmann::json(nullptr);
    if (s.robot_xy) {
        j["robot"] = {{"x", s.robot_xy->first}, {"y", s.robot_xy->second}};
    } else {
        j["robot"] = nullptr;
    }
    nlohmann::json nodes = nlohmann::json::object();
    for (const auto& [id, st] : s.nodes) {
        nodes[std::to_string(id)] = {{"last_seen_ms", st.last_seen_ms}, {"stale", st.stale}};
    }
    j["nodes"] = nodes;
    j["frames_ok"] = s.frames_ok;
    j["checksum_failures"] = s.checksum_failures;
    j["resync_skips"] = s.resync_skips;
    j["readings"] = s.readings;
    j["millis"] = now_ms;
    return j;
}

inline nlohmann::json to_json(const SensorReading& r) {
    nlohmann::json j{{"node_id", r.node_id}, {"arrival_ms", r.arrival_ms}};
    if (r.kind == ReadingKind::Temperature) {
        j["kind"] = "temperature";
        j["value"] = r.value;
    } else {
        j["kind"] = "robot-position";
        j["x"] = r.x;
        j["y"] = r.y;
    }
    return j;
}

class GatewayService {
public:
    GatewayService() : state_json_(to_json(LiveState{}, 0).dump()), csv_(std::string(kCsvHeader) + "\n") {}
    ~GatewayService() { stop(); }

    GatewayService(const GatewayService&) = delete;
    GatewayService& operator=(const GatewayService&) = delete;

    // --- simulation thread -------------------------------------------------

    /// Routes gateway readings into the service.
    void attach(Gateway& gw) {
        gw.set_observer([this](const SensorReading& r, const LogRecord& rec) { publish_reading(r, rec); });
    }

    void publish_state(const LiveState& s, std::int64_t now_ms) {
        std::lock_guard lock(mu_);
        state_json_ = to_json(s, now_ms).dump();
    }

    void publish_reading(const SensorReading& r, const LogRecord& rec) {
        {
            std::lock_guard lock(mu_);
            events_.push_back(to_json(r).dump());
            if (events_.size() > kEventBacklog) {
                events_.pop_front();
                ++events_base_;
            }
            csv_ += format_csv_line(rec);
            csv_ += '\n';
        }
        cv_.notify_all();
    }

    /// Executes queued waypoint requests against the gateway; call from the simulation thread.
    void pump(Gateway& gw) {
        std::deque<Request> pending;
        {
            std::lock_guard lock(mu_);
            pending.swap(requests_);
        }
        for (auto& r : pending) r.result.set_value(gw.send_waypoint(r.x, r.y));
    }

    /// While false, waypoint requests fail fast instead of waiting on the loop.
    void set_loop_running(bool running) {
        std::deque<Request> orphaned;
        {
            std::lock_guard lock(mu_);
            loop_running_ = running;
            if (!running) orphaned.swap(requests_);
        }
        for (auto& r : orphaned) r.result.set_value({false, "simulation not running"});
    }

    // --- server ------------------------------------------------------------

    /// Binds and starts serving on a background thread; port 0 picks a free port. Returns the port.
    int start(const std::string& host, int port) {
        setup_routes();
        int bound = port;
        if (port == 0) {
            bound = server_.bind_to_any_port(host);
        } else if (!server_.bind_to_port(host, port)) {
            bound = -1;
        }
        if (bound <= 0) throw GatewayError("cannot bind " + host + ":" + std::to_string(port));
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return bound;
    }

    void stop() {
        {
            std::lock_guard lock(mu_);
            stopping_ = true;
        }
        cv_.notify_all();
        server_.stop();
        if (thread_.joinable()) thread_.join();
        set_loop_running(false);
    }

private:
    static constexpr std::size_t kEventBacklog = 4096;

    struct Request {
        int x = 0;
        int y = 0;
        std::promise<DispatchResult> result;
    };

    void setup_routes() {
        // The console may be served from another origin.
        server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                     {"Access-Control-Allow-Headers", "Content-Type"},
                                     {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        server_.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        server_.Get("/state", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(mu_);
            res.set_content(state_json_, "application/json");
        });

        server_.Get("/log", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(mu_);
            res.set_content(csv_, "text/csv");
        });

        server_.Post("/waypoint", [this](const httplib::Request& req, httplib::Response& res) {
            int x = 0;
            int y = 0;
            try {
                auto j = nlohmann::json::parse(req.body);
                x = j.at("x").get<int>();
                y = j.at("y").get<int>();
            } catch (const std::exception&) {
                res.status = 400;
                res.set_content(R"({"error":"body must be {\"x\": int, \"y\": int}"})", "application/json");
                return;
            }
            if (x < 0 || x > 255 || y < 0 || y > 255) {
                res.status = 400;
                res.set_content(R"({"error":"x and y must be in 0..255"})", "application/json");
                return;
            }
            std::future<DispatchResult> fut;
            {
                std::lock_guard lock(mu_);
                if (!loop_running_) {
                    res.status = 503;
                    res.set_content(R"({"error":"simulation not running"})", "application/json");
                    return;
                }
                Request r{x, y, {}};
                fut = r.result.get_future();
                requests_.push_back(std::move(r));
            }
            if (fut.wait_for(std::chrono::seconds(5)) != std::future_status::ready) {
                res.status = 503;
                res.set_content(R"({"error":"simulation did not respond"})", "application/json");
                return;
            }
            const DispatchResult d = fut.get();
            if (!d.ok) {
                res.status = 503;
                res.set_content(nlohmann::json{{"error", d.error}}.dump(), "application/json");
                return;
            }
            res.status = 202;
            res.set_content(nlohmann::json{{"status", "accepted"}, {"x", x}, {"y", y}}.dump(), "application/json");
        });

        server_.Get("/events", [this](const httplib::Request& req, httplib::Response& res) {
            auto cursor = std::make_shared<std::uint64_t>(0);
            {
                std::lock_guard lock(mu_);
                // Live tail by default; ?from=0 replays the retained backlog.
                *cursor = req.has_param("from") ? std::stoull(req.get_param_value("from"))
                                                : events_base_ + events_.size();
            }
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider("text/event-stream", [this, cursor](std::size_t, httplib::DataSink& sink) {
                std::unique_lock lock(mu_);
                cv_.wait_for(lock, std::chrono::milliseconds(500), [&] {
                    return stopping_ || *cursor < events_base_ + events_.size();
                });
                if (stopping_) {
                    sink.done();
                    return false;
                }
                if (*cursor < events_base_) *cursor = events_base_;
                std::string chunk;
                while (*cursor < events_base_ + events_.size()) {
                    chunk += "data: " + events_[*cursor - events_base_] + "\n\n";
                    ++*cursor;
                }
                lock.unlock();
                if (chunk.empty()) chunk = ": keepalive\n\n";
                return sink.write(chunk.data(), chunk.size());
            });
        });
    }

    httplib::Server server_;
    std::thread thread_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::string state_json_;
    std::string csv_;
    std::deque<std::string> events_;
    std::uint64_t events_base_ = 0;
    std::deque<Request> requests_;
    bool loop_running_ = false;
    bool stopping_ = false;
};

}  // namespace wsnbed
