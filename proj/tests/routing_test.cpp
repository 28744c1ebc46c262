#include "wsnbed/latency.hpp"
#include "wsnbed/routing.hpp"
#include "wsnbed/scenario.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace wsnbed;

namespace {

// Oracle: Bellman-Ford style relaxation of hop distances; shares nothing with compute_routes.
std::map<NodeId, int> oracle_hops(const Topology& t) {
    std::map<NodeId, int> dist;
    if (!t.node_up(t.coordinator())) return dist;
    dist[t.coordinator()] = 0;
    for (std::size_t round = 0; round < t.nodes().size(); ++round) {
        for (const auto& [u, su] : t.nodes()) {
            if (!dist.count(u) || su.role == Role::EndDevice) continue;
            for (const auto& [v, sv] : t.nodes()) {
                if (!t.link_up(u, v)) continue;
                if (!dist.count(v) || dist[v] > dist[u] + 1) dist[v] = dist[u] + 1;
            }
        }
    }
    return dist;
}

void expect_optimal(const Topology& t) {
    const RoutingTable rt = compute_routes(t);
    const auto dist = oracle_hops(t);
    for (const auto& [id, spec] : t.nodes()) {
        if (id == t.coordinator()) continue;
        if (dist.count(id)) {
            ASSERT_TRUE(rt.hops(id).has_value()) << "node " << id;
            EXPECT_EQ(*rt.hops(id), dist.at(id)) << "node " << id;
            auto path = rt.uplink_path(id);
            ASSERT_TRUE(path);
            EXPECT_EQ(static_cast<int>(path->size()) - 1, dist.at(id));
            for (std::size_t i = 1; i < path->size(); ++i) EXPECT_TRUE(t.link_up((*path)[i - 1], (*path)[i]));
        } else {
            EXPECT_FALSE(rt.reachable(id)) << "node " << id;
            EXPECT_TRUE(rt.unreachable().count(id));
        }
    }
}

}  // namespace

TEST(BuildTopology, ReferenceScenarioHopStructure) {
    const Topology t = build_topology(reference_topology());
    EXPECT_EQ(t.nodes().size(), 6u);
    const RoutingTable rt = compute_routes(t);
    EXPECT_EQ(rt.hops(kLab1NodeId), 2);
    EXPECT_EQ(rt.hops(kRobotNodeId), 1);
    EXPECT_EQ(rt.route(kLab1NodeId)->next_hop, kRouter1Id);
    EXPECT_EQ(rt.route(kLab2NodeId)->next_hop, kRouter2Id);
    EXPECT_EQ(rt.route(kRobotNodeId)->next_hop, kCoordinatorId);
}

TEST(BuildTopology, ReferencePathLengthsEqualCoordinatorDistance) {
    const Topology t = build_topology(reference_topology());
    const RoutingTable rt = compute_routes(t);
    EXPECT_DOUBLE_EQ(path_length(t, *rt.uplink_path(kLab1NodeId)), 17.0);
    EXPECT_DOUBLE_EQ(path_length(t, *rt.uplink_path(kLab2NodeId)), 11.0);
    EXPECT_DOUBLE_EQ(path_length(t, *rt.uplink_path(kRobotNodeId)), 5.0);
}

TEST(BuildTopology, CoordinatorOnly) {
    TopologyConfig c;
    c.nodes = {{0, "C", Role::Coordinator, {0, 0}, 10, std::nullopt, std::nullopt}};
    const Topology t = build_topology(c);
    EXPECT_EQ(t.nodes().size(), 1u);
    EXPECT_TRUE(compute_routes(t).routes().empty());
}

TEST(BuildTopology, Errors) {
    auto base = [] {
        TopologyConfig c;
        c.nodes = {{0, "C", Role::Coordinator, {0, 0}, 10, std::nullopt, std::nullopt},
                   {1, "N", Role::EndDevice, {5, 0}, 10, std::nullopt, std::nullopt}};
        return c;
    };
    auto two = base();
    two.nodes[1].role = Role::Coordinator;
    EXPECT_THROW(build_topology(two), TopologyError);

    auto none = base();
    none.nodes[0].role = Role::Router;
    EXPECT_THROW(build_topology(none), TopologyError);

    auto dup = base();
    dup.nodes[1].id = 0;
    EXPECT_THROW(build_topology(dup), TopologyError);

    auto far = base();
    far.nodes[1].position = {50, 0};
    try {
        build_topology(far);
        FAIL() << "expected disconnected-node error";
    } catch (const TopologyError& e) {
        EXPECT_NE(std::string(e.what()).find("node 1"), std::string::npos);
    }

    auto sleepy_router = base();
    sleepy_router.nodes[1].role = Role::Router;
    sleepy_router.nodes[1].sleep = SleepSchedule{};
    EXPECT_THROW(build_topology(sleepy_router), TopologyError);

    auto wrong_pan = base();
    wrong_pan.pan_id = 7;
    wrong_pan.nodes[1].pan_id = 8;
    EXPECT_THROW(build_topology(wrong_pan), TopologyError);

    auto closed = base();
    closed.permit_join = false;
    EXPECT_THROW(build_topology(closed), TopologyError);

    auto zero_range = base();
    zero_range.nodes[1].radio_range = 0;
    EXPECT_THROW(build_topology(zero_range), TopologyError);
}

TEST(ComputeRoutes, TieBreaksToLowerNextHopId) {
    TopologyConfig c;
    c.nodes = {{0, "C", Role::Coordinator, {0, 0}, 10, std::nullopt, std::nullopt},
               {21, "RB", Role::Router, {5, -1}, 10, std::nullopt, std::nullopt},
               {20, "RA", Role::Router, {5, 1}, 10, std::nullopt, std::nullopt},
               {1, "N", Role::EndDevice, {10, 0}, 6, std::nullopt, std::nullopt}};
    const RoutingTable rt = compute_routes(build_topology(c));
    EXPECT_EQ(rt.route(1)->next_hop, 20);
    EXPECT_EQ(rt.hops(1), 2);
}

TEST(ComputeRoutes, EndDevicesNeverRelay) {
    TopologyConfig c;
    c.nodes = {{0, "C", Role::Coordinator, {0, 0}, 6, std::nullopt, std::nullopt},
               {1, "E1", Role::EndDevice, {5, 0}, 6, std::nullopt, std::nullopt},
               {2, "E2", Role::EndDevice, {10, 0}, 6, std::nullopt, std::nullopt}};
    EXPECT_THROW(build_topology(c), TopologyError);
}

TEST(ComputeRoutes, DownlinkIsReversedUplink) {
    const Topology t = build_topology(reference_topology());
    const RoutingTable rt = compute_routes(t);
    auto up = *rt.uplink_path(kLab1NodeId);
    auto down = *rt.path(kCoordinatorId, kLab1NodeId);
    std::reverse(up.begin(), up.end());
    EXPECT_EQ(up, down);
    EXPECT_EQ(rt.next_hop(kRouter1Id, kLab1NodeId), kLab1NodeId);
    EXPECT_EQ(rt.next_hop(kRouter1Id, kCoordinatorId), kCoordinatorId);
}

TEST(ComputeRoutes, OptimalUnderRandomMutations) {
    std::mt19937 gen(99);
    for (int trial = 0; trial < 40; ++trial) {
        TopologyConfig c;
        c.nodes.push_back({0, "C", Role::Coordinator, {0, 0}, 12, std::nullopt, std::nullopt});
        std::uniform_real_distribution<double> coord(-30, 30);
        for (int i = 1; i <= 14; ++i) {
            const Role role = i <= 7 ? Role::Router : Role::EndDevice;
            c.nodes.push_back({i, "n", role, {coord(gen), coord(gen)}, 14, std::nullopt, std::nullopt});
        }
        c.links_up.emplace_back(0, 1);  // keep something attached
        Topology t;
        try {
            t = build_topology(c);
        } catch (const TopologyError&) {
            continue;  // disconnected draw
        }
        expect_optimal(t);
        for (int m = 0; m < 6; ++m) {
            const NodeId a = static_cast<NodeId>(1 + gen() % 14);
            if (gen() % 2) {
                t.fail_node(a);
            } else {
                t.fail_link(a, static_cast<NodeId>(gen() % 15));
            }
            expect_optimal(t);
        }
    }
}

// --- latency model ----------------------------------------------------------

TEST(PathDelay, ExamplesWithCalibratedParams) {
    const Topology t = build_topology(reference_topology());
    const DelayParams p = calibrate_delay_params(reference_delay_rows());
    const std::vector<NodeId> robot{kRobotNodeId, kCoordinatorId};
    const std::vector<NodeId> node1{kLab1NodeId, kRouter1Id, kCoordinatorId};
    EXPECT_NEAR(path_delay(t, robot, p), 170.0, 1e-9);
    EXPECT_NEAR(path_delay(t, node1, p), 380.0, 1e-9);
    EXPECT_DOUBLE_EQ(path_delay(t, node1, DelayParams{}), 0.0);
}

TEST(Calibrate, ReferenceRowsMatchHandSolution) {
    // By hand: rows 2 and 3 differ only in meters, so 6k = 68; then t_hop = 74, t_base = 118/3.
    const DelayParams p = calibrate_delay_params(reference_delay_rows());
    EXPECT_NEAR(p.k_ms_per_m, 34.0 / 3.0, 1e-9);
    EXPECT_NEAR(p.t_hop_ms, 74.0, 1e-9);
    EXPECT_NEAR(p.t_base_ms, 118.0 / 3.0, 1e-9);
    for (const auto& r : reference_delay_rows()) {
        EXPECT_NEAR(delay_for(r.hops, r.path_m, p), r.delay_ms, 1e-9);
    }
}

TEST(Calibrate, RecoversGeneratingParams) {
    const DelayParams truth{10, 20, 3};
    std::vector<CalibrationRow> rows;
    for (auto [h, m] : std::vector<std::pair<int, double>>{{1, 4}, {2, 9}, {3, 9.5}}) {
        rows.push_back({h, m, truth.t_base_ms + h * truth.t_hop_ms + m * truth.k_ms_per_m});
    }
    const DelayParams p = calibrate_delay_params(rows);
    EXPECT_NEAR(p.t_base_ms, 10, 1e-9);
    EXPECT_NEAR(p.t_hop_ms, 20, 1e-9);
    EXPECT_NEAR(p.k_ms_per_m, 3, 1e-9);
}

TEST(Calibrate, SingularSystemsRejected) {
    const std::vector<CalibrationRow> same{{1, 5, 170}, {1, 5, 170}, {2, 11, 312}};
    EXPECT_THROW(calibrate_delay_params(same), CalibrationError);
    const std::vector<CalibrationRow> colinear{{1, 1, 10}, {2, 2, 20}, {3, 3, 30}};
    EXPECT_THROW(calibrate_delay_params(colinear), CalibrationError);
    const std::vector<CalibrationRow> two{{1, 5, 170}, {2, 11, 312}};
    EXPECT_THROW(calibrate_delay_params(two), CalibrationError);
}
