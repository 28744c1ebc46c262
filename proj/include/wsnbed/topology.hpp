#pragma once

#include "wsnbed/event_queue.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wsnbed {

using NodeId = int;

enum class Role { Coordinator, Router, EndDevice };

inline const char* to_string(Role role) {
    switch (role) {
        case Role::Coordinator: return "coordinator";
        case Role::Router: return "router";
        case Role::EndDevice: return "end_device";
    }
    return "unknown";
}

struct Position {
    double x = 0;
    double y = 0;
};

inline double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Awake during [offset + k*period, offset + k*period + awake) for integer k.
struct SleepSchedule {
    SimTime period_ms = 500;
    SimTime awake_ms = 50;
    SimTime offset_ms = 0;

    bool awake_at(SimTime t) const {
        double phase = std::fmod(t - offset_ms, period_ms);
        if (phase < 0) phase += period_ms;
        return phase < awake_ms;
    }

    /// Start of the first awake window beginning strictly after t.
    SimTime next_wake_after(SimTime t) const {
        double k = std::floor((t - offset_ms) / period_ms) + 1;
        return offset_ms + k * period_ms;
    }
};

struct NodeSpec {
    NodeId id = 0;
    std::string name;
    Role role = Role::EndDevice;
    Position position;
    double radio_range = 10;
    std::optional<SleepSchedule> sleep;
    /// Unset means the node carries the network's PAN ID.
    std::optional<std::uint64_t> pan_id;
};

class TopologyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Link = std::pair<NodeId, NodeId>;

inline Link make_link(NodeId a, NodeId b) { return a < b ? Link{a, b} : Link{b, a}; }

struct TopologyConfig {
    std::uint64_t pan_id = 0;
    bool permit_join = true;
    std::vector<NodeSpec> nodes;
    std::vector<Link> links_up;    // forced up regardless of range
    std::vector<Link> links_down;  // forced down regardless of range
};

class Topology {
public:
    std::uint64_t pan_id() const { return pan_id_; }
    NodeId coordinator() const { return coordinator_; }
    const std::map<NodeId, NodeSpec>& nodes() const { return nodes_; }
    const NodeSpec& node(NodeId id) const {
        auto it = nodes_.find(id);
        if (it == nodes_.end()) throw TopologyError("unknown node " + std::to_string(id));
        return it->second;
    }
    bool contains(NodeId id) const { return nodes_.count(id) != 0; }

    /// Radio adjacency: in range (distance <= min of both ranges) unless overridden.
    bool in_range(NodeId a, NodeId b) const {
        if (a == b) return false;
        const Link l = make_link(a, b);
        if (forced_down_.count(l)) return false;
        if (forced_up_.count(l)) return true;
        const NodeSpec& na = node(a);
        const NodeSpec& nb = node(b);
        return distance(na.position, nb.position) <= std::min(na.radio_range, nb.radio_range);
    }

    /// Adjacent and currently up (neither endpoint failed, link not failed).
    bool link_up(NodeId a, NodeId b) const {
        return node_up(a) && node_up(b) && !failed_links_.count(make_link(a, b)) && in_range(a, b);
    }

    bool node_up(NodeId id) const { return contains(id) && !failed_nodes_.count(id); }

    /// End devices never relay traffic.
    bool can_forward(NodeId id) const { return node(id).role != Role::EndDevice; }

    double link_length(NodeId a, NodeId b) const {
        return distance(node(a).position, node(b).position);
    }

    void fail_link(NodeId a, NodeId b) {
        node(a);
        node(b);
        failed_links_.insert(make_link(a, b));
    }
    void restore_link(NodeId a, NodeId b) { failed_links_.erase(make_link(a, b)); }
    void fail_node(NodeId id) {
        node(id);
        failed_nodes_.insert(id);
    }
    void restore_node(NodeId id) { failed_nodes_.erase(id); }

    friend Topology build_topology(const TopologyConfig& config);

private:
    std::uint64_t pan_id_ = 0;
    NodeId coordinator_ = 0;
    std::map<NodeId, NodeSpec> nodes_;
    std::set<Link> forced_up_;
    std::set<Link> forced_down_;
    std::set<Link> failed_links_;
    std::set<NodeId> failed_nodes_;
};

/// Breadth-first reachability from the coordinator through forwarding nodes.
inline std::set<NodeId> reachable_from_coordinator(const Topology& topo) {
    std::set<NodeId> seen{topo.coordinator()};
    std::vector<NodeId> frontier{topo.coordinator()};
    while (!frontier.empty()) {
        std::vector<NodeId> next;
        for (NodeId u : frontier) {
            if (!topo.can_forward(u)) continue;
            for (const auto& [v, spec] : topo.nodes()) {
                if (!seen.count(v) && topo.link_up(u, v)) {
                    seen.insert(v);
                    next.push_back(v);
                }
            }
        }
        frontier = std::move(next);
    }
    return seen;
}

/**
 * Validates roles, the join rule (matching PAN ID, coordinator permitting
 * joins) and connectivity. Every problem found names the offending node.
 */
inline Topology build_topology(const TopologyConfig& config) {
    Topology topo;
    topo.pan_id_ = config.pan_id;
    std::vector<NodeId> coordinators;

    for (const NodeSpec& spec : config.nodes) {
        if (!topo.nodes_.emplace(spec.id, spec).second) {
            throw TopologyError("duplicate node id " + std::to_string(spec.id));
        }
        if (spec.role == Role::Coordinator) coordinators.push_back(spec.id);
        if (!(spec.radio_range > 0)) {
            throw TopologyError("node " + std::to_string(spec.id) + " has non-positive radio range");
        }
        if (spec.sleep && spec.role != Role::EndDevice) {
            throw TopologyError("node " + std::to_string(spec.id) +
                                " has a sleep schedule but is not an end device");
        }
        if (spec.sleep && (!(spec.sleep->period_ms > 0) || spec.sleep->awake_ms <= 0 ||
                           spec.sleep->awake_ms > spec.sleep->period_ms)) {
            throw TopologyError("node " + std::to_string(spec.id) + " has an invalid sleep schedule");
        }
    }
    if (coordinators.empty()) throw TopologyError("topology has no coordinator");
    if (coordinators.size() > 1) {
        throw TopologyError("topology has more than one coordinator (node " +
                            std::to_string(coordinators[1]) + ")");
    }
    topo.coordinator_ = coordinators.front();

    for (const auto& [id, spec] : topo.nodes_) {
        if (id == topo.coordinator_) continue;
        if (spec.pan_id && *spec.pan_id != config.pan_id) {
            throw TopologyError("node " + std::to_string(id) + " cannot join: PAN ID mismatch");
        }
        if (!config.permit_join) {
            throw TopologyError("node " + std::to_string(id) + " cannot join: coordinator does not permit join");
        }
    }

    for (const Link& l : config.links_up) {
        topo.node(l.first);
        topo.node(l.second);
        topo.forced_up_.insert(make_link(l.first, l.second));
    }
    for (const Link& l : config.links_down) {
        topo.node(l.first);
        topo.node(l.second);
        topo.forced_down_.insert(make_link(l.first, l.second));
    }

    const auto reached = reachable_from_coordinator(topo);
    for (const auto& [id, spec] : topo.nodes_) {
        if (!reached.count(id)) {
            throw TopologyError("node " + std::to_string(id) + " (" + spec.name +
                                ") has no path to the coordinator");
        }
    }
    return topo;
}

}  // namespace wsnbed
