#pragma once

/**
 * @file network.hpp
 * @brief Discrete-event model of the PAN: hop-by-hop forwarding over the
 * shortest-hop tree, sleep buffering at parents, failures and rerouting.
 *
 * Latency: with jitter off a frame reaches hop j of the path it actually took
 * at origin + path_delay(taken[0..j]); the final arrival therefore equals
 * path_delay of the whole route exactly. With jitter on, each hop's share
 * (t_hop + k * meters, plus t_base on the first hop) is scaled by a seeded
 * uniform factor in [0.95, 1.05].
 *
 * Every dispatched event and every state change of a frame is written to the
 * event log as `<time_ms> <seq> <event_kind> <src> <dst> <detail>`.
 */

#include "wsnbed/event_queue.hpp"
#include "wsnbed/frame.hpp"
#include "wsnbed/latency.hpp"
#include "wsnbed/random.hpp"
#include "wsnbed/routing.hpp"
#include "wsnbed/topology.hpp"

#include <cstdio>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace wsnbed {

inline constexpr std::size_t kParentBufferCapacity = 16;
inline constexpr double kJitterFraction = 0.05;

struct Packet {
    std::uint64_t id = 0;
    NodeId src = 0;
    NodeId dst = 0;
    Bytes bytes;
    SimTime send_time = 0;
    /// Hop timing reference; see the file comment.
    SimTime origin = 0;
    std::vector<NodeId> taken;
    /// Arrival time at taken.back() (used when jitter is on).
    SimTime at_time = 0;
};

struct Delivery {
    Packet packet;
    SimTime arrival = 0;
};

struct NetStats {
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    std::uint64_t in_flight = 0;
    std::uint64_t buffered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t failed = 0;

    bool conserved() const { return sent == delivered + in_flight + buffered + dropped + failed; }
};

struct TransmitResult {
    std::uint64_t packet_id = 0;
    bool accepted = false;
    std::string reason;
};

class Network;

/// Application attached to a node. Runs inside the event loop and must not block.
class NodeHandler {
public:
    virtual ~NodeHandler() = default;
    virtual void on_receive(Network&, const Delivery&) {}
    virtual void on_timer(Network&, int /*tag*/) {}
};

struct NetworkOptions {
    DelayParams delay;
    bool jitter = false;
    std::uint64_t seed = 0;
};

class Network {
public:
    Network(Topology topology, NetworkOptions options, std::ostream* event_log = nullptr)
        : topo_(std::move(topology)), opts_(options), log_(event_log) {
        routes_ = compute_routes(topo_);
        for (const auto& [id, spec] : topo_.nodes()) {
            jitter_rng_.emplace(id, Rng(derive_seed(opts_.seed, id, Stream::Jitter)));
            if (spec.sleep) {
                queue_.push(spec.sleep->next_wake_after(0), WakeEvent{id});
            }
        }
    }

    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    // --- observers ---------------------------------------------------------

    SimTime now() const { return queue_.now(); }
    const Topology& topology() const { return topo_; }
    const RoutingTable& routes() const { return routes_; }
    const NetStats& stats() const { return stats_; }
    const NetworkOptions& options() const { return opts_; }
    const std::vector<Delivery>& deliveries() const { return deliveries_; }
    std::uint64_t log_lines() const { return log_seq_; }

    bool awake(NodeId id) const {
        const NodeSpec& spec = topo_.node(id);
        return !spec.sleep || spec.sleep->awake_at(now());
    }

    /// Frames held at `holder` waiting for a sleeping child.
    std::size_t buffered_at(NodeId holder) const {
        auto it = parent_buffers_.find(holder);
        return it == parent_buffers_.end() ? 0 : it->second.size();
    }

    void attach(NodeId id, NodeHandler* handler) {
        topo_.node(id);
        handlers_[id] = handler;
    }

    // --- traffic -----------------------------------------------------------

    /// True if a frame from src could currently be routed to dst.
    bool has_route(NodeId src, NodeId dst) const {
        return topo_.contains(src) && topo_.contains(dst) && topo_.node_up(src) && topo_.node_up(dst) &&
               routes_.path(src, dst).has_value();
    }

    TransmitResult transmit(NodeId src, NodeId dst, Bytes bytes) {
        if (!topo_.contains(src) || !topo_.contains(dst)) {
            throw SimulationError("transmit between unknown nodes " + std::to_string(src) + " -> " +
                                  std::to_string(dst));
        }
        Packet p;
        p.id = next_packet_id_++;
        p.src = src;
        p.dst = dst;
        p.bytes = std::move(bytes);
        p.send_time = now();
        p.origin = now();
        p.at_time = now();
        p.taken = {src};
        ++stats_.sent;
        note("send", src, dst, "pkt=" + std::to_string(p.id) + " bytes=" + hex_compact(p.bytes));

        if (!topo_.node_up(src)) {
            fail(p, "source_down");
            return {p.id, false, "source node is down"};
        }
        const std::uint64_t id = p.id;
        if (src == dst) {
            deliver(std::move(p));
            return {id, true, {}};
        }
        if (!awake(src)) {
            hold_in_outbox(std::move(p));
            return {id, true, "queued until source wakes"};
        }
        const bool ok = forward_from(std::move(p), src);
        return {id, ok, ok ? std::string{} : std::string("no route")};
    }

    void schedule_timer(NodeId node, SimTime at, int tag) {
        topo_.node(node);
        queue_.push(at, TimerEvent{node, tag});
    }

    // --- failures ----------------------------------------------------------

    const RoutingTable& fail_link(NodeId a, NodeId b) {
        topo_.fail_link(a, b);
        note("link_down", a, b, "");
        return reroute();
    }

    const RoutingTable& fail_node(NodeId id) {
        if (id == topo_.coordinator()) {
            throw SimulationError("coordinator failure: the network cannot function");
        }
        topo_.fail_node(id);
        note("node_down", id, -1, "");
        if (auto it = parent_buffers_.find(id); it != parent_buffers_.end()) {
            auto frames = std::move(it->second);
            parent_buffers_.erase(it);
            for (auto& p : frames) {
                --stats_.buffered;
                fail(p, "holder_down");
            }
        }
        if (auto it = outboxes_.find(id); it != outboxes_.end()) {
            auto frames = std::move(it->second);
            outboxes_.erase(it);
            for (auto& p : frames) {
                --stats_.buffered;
                fail(p, "source_down");
            }
        }
        return reroute();
    }

    void schedule_link_failure(SimTime at, NodeId a, NodeId b) { queue_.push(at, FailureEvent{a, b}); }
    void schedule_node_failure(SimTime at, NodeId id) { queue_.push(at, FailureEvent{id, std::nullopt}); }

    // --- event loop --------------------------------------------------------

    struct Dispatched {
        SimTime time = 0;
        std::uint64_t seq = 0;
        std::string kind;
    };

    /// Dispatches the next event; nullopt when the queue is empty.
    std::optional<Dispatched> step() {
        auto entry = queue_.pop();
        if (!entry) return std::nullopt;
        Dispatched d{entry->time, entry->seq, {}};
        std::visit([&](auto& ev) { d.kind = dispatch(ev); }, entry->payload);
        return d;
    }

    std::optional<SimTime> next_event_time() const { return queue_.peek_time(); }

    /// Runs every event with time <= end, then parks the clock at end.
    void run_until(SimTime end) {
        while (auto t = queue_.peek_time()) {
            if (*t > end) break;
            step();
        }
        if (end > now()) queue_.advance_to(end);
    }

    /// Writes an application-level line into the event log.
    void note(const std::string& kind, NodeId src, NodeId dst, const std::string& detail) {
        const std::uint64_t seq = log_seq_++;
        if (!log_) return;
        char when[40];
        std::snprintf(when, sizeof when, "%.3f", now());
        *log_ << when << ' ' << seq << ' ' << kind << ' ' << id_text(src) << ' ' << id_text(dst) << ' '
              << (detail.empty() ? "-" : detail) << '\n';
    }

private:
    struct HopEvent {
        Packet packet;
        NodeId from = 0;
        NodeId to = 0;
    };
    struct WakeEvent {
        NodeId node = 0;
    };
    struct TimerEvent {
        NodeId node = 0;
        int tag = 0;
    };
    struct FailureEvent {
        NodeId a = 0;
        std::optional<NodeId> b;  // set for a link failure
    };
    using Event = std::variant<HopEvent, WakeEvent, TimerEvent, FailureEvent>;

    static std::string id_text(NodeId id) { return id < 0 ? "-" : std::to_string(id); }

    static std::string hex_compact(const Bytes& bytes) {
        std::string s = hex_dump(bytes);
        for (char& c : s) {
            if (c == ' ') c = ':';
        }
        return s;
    }

    static std::string path_text(const std::vector<NodeId>& path) {
        std::string s;
        for (std::size_t i = 0; i < path.size(); ++i) {
            if (i) s += '>';
            s += std::to_string(path[i]);
        }
        return s;
    }

    const RoutingTable& reroute() {
        routes_ = compute_routes(topo_);
        note("reroute", -1, -1, "unreachable=" + std::to_string(routes_.unreachable().size()));
        return routes_;
    }

    SimTime hop_arrival(const Packet& p, NodeId next) {
        const auto& d = opts_.delay;
        if (!opts_.jitter) {
            std::vector<NodeId> extended = p.taken;
            extended.push_back(next);
            return p.origin + path_delay(topo_, extended, d);
        }
        double share = d.t_hop_ms + d.k_ms_per_m * topo_.link_length(p.taken.back(), next);
        if (p.taken.size() == 1) share += d.t_base_ms;
        const double factor = 1.0 + jitter_rng_.at(p.taken.back()).uniform(-kJitterFraction, kJitterFraction);
        return p.at_time + share * factor;
    }

    /// Sends `p`, currently held at `at`, one hop toward its destination.
    bool forward_from(Packet p, NodeId at) {
        auto next = routes_.next_hop(at, p.dst);
        if (!next || !topo_.node_up(p.dst)) {
            fail(p, "no_route");
            return false;
        }
        const NodeSpec& next_spec = topo_.node(*next);
        if (next_spec.sleep && !next_spec.sleep->awake_at(now())) {
            buffer_at(at, std::move(p));
            return true;
        }
        const SimTime arrive = hop_arrival(p, *next);
        ++stats_.in_flight;
        note("hop", at, *next, "pkt=" + std::to_string(p.id));
        queue_.push(arrive, HopEvent{std::move(p), at, *next});
        return true;
    }

    void buffer_at(NodeId holder, Packet p) {
        auto& q = parent_buffers_[holder];
        note("buffer", holder, p.dst, "pkt=" + std::to_string(p.id) + " depth=" + std::to_string(q.size() + 1));
        q.push_back(std::move(p));
        ++stats_.buffered;
        if (q.size() > kParentBufferCapacity) {
            Packet oldest = std::move(q.front());
            q.pop_front();
            --stats_.buffered;
            ++stats_.dropped;
            note("drop", holder, oldest.dst, "pkt=" + std::to_string(oldest.id) + " reason=buffer_full");
        }
    }

    void hold_in_outbox(Packet p) {
        auto& q = outboxes_[p.src];
        note("outbox", p.src, p.dst, "pkt=" + std::to_string(p.id));
        q.push_back(std::move(p));
        ++stats_.buffered;
        if (q.size() > kParentBufferCapacity) {
            Packet oldest = std::move(q.front());
            q.pop_front();
            --stats_.buffered;
            ++stats_.dropped;
            note("drop", oldest.src, oldest.dst, "pkt=" + std::to_string(oldest.id) + " reason=outbox_full");
        }
    }

    void fail(const Packet& p, const std::string& reason) {
        ++stats_.failed;
        note("delivery_failed", p.src, p.dst, "pkt=" + std::to_string(p.id) + " reason=" + reason);
    }

    void deliver(Packet p) {
        ++stats_.delivered;
        note("deliver", p.src, p.dst,
             "pkt=" + std::to_string(p.id) + " path=" + path_text(p.taken) + " latency=" + latency_text(p));
        Delivery d{std::move(p), now()};
        deliveries_.push_back(d);
        if (auto h = handlers_.find(d.packet.dst); h != handlers_.end() && h->second) {
            h->second->on_receive(*this, d);
        }
    }

    std::string latency_text(const Packet& p) const {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.3f", now() - p.send_time);
        return buf;
    }

    std::string dispatch(HopEvent& ev) {
        --stats_.in_flight;
        Packet p = std::move(ev.packet);
        if (!topo_.link_up(ev.from, ev.to)) {
            fail(p, "lost_in_flight");
            return "hop";
        }
        p.taken.push_back(ev.to);
        p.at_time = now();
        if (ev.to == p.dst) {
            deliver(std::move(p));
        } else {
            forward_from(std::move(p), ev.to);
        }
        return "hop";
    }

    std::string dispatch(WakeEvent& ev) {
        const NodeSpec& spec = topo_.node(ev.node);
        queue_.push(spec.sleep->next_wake_after(now()), WakeEvent{ev.node});
        if (!topo_.node_up(ev.node)) return "wake";
        note("wake", ev.node, -1, "");

        // Frames the node itself queued while asleep.
        if (auto it = outboxes_.find(ev.node); it != outboxes_.end()) {
            auto frames = std::move(it->second);
            outboxes_.erase(it);
            for (auto& p : frames) {
                --stats_.buffered;
                p.origin = now();
                p.at_time = now();
                forward_from(std::move(p), ev.node);
            }
        }
        // Frames parked at parents for this node, in arrival order per holder.
        for (auto& [holder, q] : parent_buffers_) {
            std::deque<Packet> keep;
            std::vector<Packet> release;
            for (auto& p : q) {
                if (p.dst == ev.node) {
                    release.push_back(std::move(p));
                } else {
                    keep.push_back(std::move(p));
                }
            }
            q = std::move(keep);
            for (auto& p : release) {
                --stats_.buffered;
                // Restart the clock so the remaining hop costs what the route says.
                p.origin = now() - path_delay(topo_, p.taken, opts_.delay);
                p.at_time = now();
                note("release", holder, ev.node, "pkt=" + std::to_string(p.id));
                forward_from(std::move(p), holder);
            }
        }
        return "wake";
    }

    std::string dispatch(TimerEvent& ev) {
        if (!topo_.node_up(ev.node)) return "timer";
        if (auto h = handlers_.find(ev.node); h != handlers_.end() && h->second) {
            h->second->on_timer(*this, ev.tag);
        }
        return "timer";
    }

    std::string dispatch(FailureEvent& ev) {
        if (ev.b) {
            fail_link(ev.a, *ev.b);
        } else {
            fail_node(ev.a);
        }
        return "failure";
    }

    Topology topo_;
    NetworkOptions opts_;
    std::ostream* log_ = nullptr;
    RoutingTable routes_;
    EventQueue<Event> queue_;
    NetStats stats_;
    std::map<NodeId, Rng> jitter_rng_;
    std::map<NodeId, NodeHandler*> handlers_;
    std::map<NodeId, std::deque<Packet>> parent_buffers_;
    std::map<NodeId, std::deque<Packet>> outboxes_;
    std::vector<Delivery> deliveries_;
    std::uint64_t next_packet_id_ = 1;
    std::uint64_t log_seq_ = 0;
};

}  // namespace wsnbed
