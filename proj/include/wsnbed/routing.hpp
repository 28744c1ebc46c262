#pragma once

#include "wsnbed/topology.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace wsnbed {

struct Route {
    NodeId next_hop = 0;  // toward the coordinator
    int hops = 0;
};

/**
 * Shortest-hop tree rooted at the coordinator. Uplink routes are per node;
 * downlink routes are the reversed uplink chain. Ties between equally short
 * parents go to the lowest node ID.
 */
class RoutingTable {
public:
    NodeId coordinator() const { return coordinator_; }
    const std::map<NodeId, Route>& routes() const { return routes_; }
    const std::set<NodeId>& unreachable() const { return unreachable_; }

    std::optional<Route> route(NodeId id) const {
        auto it = routes_.find(id);
        if (it == routes_.end()) return std::nullopt;
        return it->second;
    }

    bool reachable(NodeId id) const { return id == coordinator_ || routes_.count(id) != 0; }

    std::optional<int> hops(NodeId id) const {
        if (id == coordinator_) return 0;
        if (auto r = route(id)) return r->hops;
        return std::nullopt;
    }

    /// Node sequence from `id` up to and including the coordinator.
    std::optional<std::vector<NodeId>> uplink_path(NodeId id) const {
        if (!reachable(id)) return std::nullopt;
        std::vector<NodeId> path{id};
        while (path.back() != coordinator_) path.push_back(routes_.at(path.back()).next_hop);
        return path;
    }

    /// The hop that takes a frame at `at` one step closer to `dst`.
    std::optional<NodeId> next_hop(NodeId at, NodeId dst) const {
        if (at == dst || !reachable(at) || !reachable(dst)) return std::nullopt;
        auto down = uplink_path(dst);
        auto it = std::find(down->begin(), down->end(), at);
        if (it != down->end()) return *(it - 1);  // `at` is an ancestor of dst: go down
        return routes_.at(at).next_hop;
    }

    /// Full node sequence src..dst following next_hop.
    std::optional<std::vector<NodeId>> path(NodeId src, NodeId dst) const {
        if (!reachable(src) || !reachable(dst)) return std::nullopt;
        std::vector<NodeId> p{src};
        while (p.back() != dst) {
            auto n = next_hop(p.back(), dst);
            if (!n) return std::nullopt;
            p.push_back(*n);
        }
        return p;
    }

    friend RoutingTable compute_routes(const Topology& topo);

private:
    NodeId coordinator_ = 0;
    std::map<NodeId, Route> routes_;
    std::set<NodeId> unreachable_;
};

inline RoutingTable compute_routes(const Topology& topo) {
    RoutingTable table;
    table.coordinator_ = topo.coordinator();
    std::map<NodeId, int> depth{{topo.coordinator(), 0}};
    if (!topo.node_up(topo.coordinator())) {
        for (const auto& [id, spec] : topo.nodes()) {
            if (id != topo.coordinator()) table.unreachable_.insert(id);
        }
        return table;
    }

    // Level-synchronous BFS. Frontier nodes are visited in ascending ID order, so
    // the first parent to claim a child is the lowest-ID parent at that depth.
    std::vector<NodeId> frontier{topo.coordinator()};
    int level = 0;
    while (!frontier.empty()) {
        ++level;
        std::vector<NodeId> next;
        for (NodeId parent : frontier) {
            if (!topo.can_forward(parent)) continue;
            for (const auto& [child, spec] : topo.nodes()) {
                if (depth.count(child) || !topo.link_up(parent, child)) continue;
                depth[child] = level;
                table.routes_[child] = Route{parent, level};
                next.push_back(child);
            }
        }
        std::sort(next.begin(), next.end());
        frontier = std::move(next);
    }
    for (const auto& [id, spec] : topo.nodes()) {
        if (!depth.count(id)) table.unreachable_.insert(id);
    }
    return table;
}

}  // namespace wsnbed
