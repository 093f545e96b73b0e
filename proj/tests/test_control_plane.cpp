#include "sdvec/control_plane.hpp"

#include "oracles.hpp"

#include "sdvec/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sdvec;

namespace {

ControlTopology line(std::size_t n, double w, double node_cap)
{
    ControlTopology t;
    t.nodes.assign(n, AnNode{node_cap, 1.0});
    for (std::size_t i = 1; i < n; ++i) {
        t.edges.push_back({AnId(i - 1), AnId(i), w, 100.0});
    }
    return t;
}

std::vector<ControlDemand> one_per_node(std::size_t n, double rate = 1.0)
{
    std::vector<ControlDemand> d;
    for (std::size_t i = 0; i < n; ++i) {
        d.push_back({VehicleId(i), AnId(i), rate});
    }
    return d;
}

} // namespace

TEST(Topology, ShortestLatenciesAndConnectivity)
{
    auto t = line(4, 1e-3, 10);
    EXPECT_TRUE(t.connected());
    EXPECT_NEAR(t.shortest_latencies()(0, 3), 3e-3, 1e-15);
    EXPECT_DOUBLE_EQ(t.min_edge_latency(), 1e-3);
    t.edges.pop_back();
    EXPECT_FALSE(t.connected());
    EXPECT_TRUE(std::isinf(t.shortest_latencies()(0, 3)));
    EXPECT_THROW(check_topology(t), std::invalid_argument);
}

TEST(Placement, LatencyBoundDrivesControllerCount)
{
    const auto t = line(5, 1e-3, 10);
    const auto d = one_per_node(5);
    EXPECT_EQ(place_controllers_exact(t, d, 2e-3).controllers, (std::vector<AnId>{AnId(2u)}));
    EXPECT_EQ(place_controllers_exact(t, d, 1e-3).controllers.size(), 2u);
    EXPECT_EQ(place_controllers_exact(t, d, 0.5e-3).controllers.size(), 5u);
}

TEST(Placement, CapacityBinds)
{
    const auto t = line(3, 1e-3, 2);
    const auto d = one_per_node(3);
    const auto p = place_controllers_exact(t, d, 1.0);
    EXPECT_EQ(p.controllers.size(), 2u);
    std::map<AnId, int> load;
    for (const auto& [v, c] : p.domain) {
        ++load[c];
    }
    for (const auto& [c, n] : load) {
        EXPECT_LE(n, 2);
    }
}

TEST(Placement, InfeasibleReportsBindingConstraint)
{
    const auto t = line(2, 1e-3, 1);
    std::vector<ControlDemand> d{{VehicleId(0u), AnId(0u), 1.0}, {VehicleId(1u), AnId(0u), 1.0},
                                 {VehicleId(2u), AnId(0u), 1.0}};
    try {
        place_controllers_exact(t, d, 1.0);
        FAIL();
    } catch (const PlacementInfeasible& e) {
        EXPECT_EQ(e.binding(), BindingConstraint::capacity);
    }
}

TEST(Placement, UnequalRatesUseExactAssignment)
{
    // capacities 3 and 3; rates 2,2,1,1 fit only as {2,1},{2,1}
    ControlTopology t;
    t.nodes.assign(2, AnNode{3.0, 1.0});
    t.edges.push_back({AnId(0u), AnId(1u), 1e-3, 100.0});
    std::vector<ControlDemand> d{{VehicleId(0u), AnId(0u), 2.0}, {VehicleId(1u), AnId(0u), 2.0},
                                 {VehicleId(2u), AnId(0u), 1.0}, {VehicleId(3u), AnId(0u), 1.0}};
    const auto lat = t.shortest_latencies();
    std::map<VehicleId, AnId> domain;
    const std::vector<AnId> both{AnId(0u), AnId(1u)};
    ASSERT_TRUE(assignment_feasible(t, lat, d, both, 1.0, &domain));
    std::map<AnId, double> used;
    for (const auto& dem : d) {
        used[domain.at(dem.vehicle)] += dem.rate;
    }
    EXPECT_LE(used[AnId(0u)], 3.0);
    EXPECT_LE(used[AnId(1u)], 3.0);
    EXPECT_FALSE(assignment_feasible(t, lat, d, std::vector<AnId>{AnId(0u)}, 1.0));
}

TEST(Placement, ExactMatchesHallOracleOnSmallInstances)
{
    RngStream rng(21, stream_id(StreamKind::test, 21));
    for (int inst = 0; inst < 40; ++inst) {
        const std::size_t n = 3 + rng.uniform_index(4);
        ControlTopology t;
        std::vector<oracle::WeightedEdge> edges;
        std::vector<int> cap;
        for (std::size_t i = 0; i < n; ++i) {
            cap.push_back(1 + static_cast<int>(rng.uniform_index(3)));
            t.nodes.push_back({static_cast<double>(cap.back()), 1.0});
        }
        for (std::size_t i = 1; i < n; ++i) {
            const std::size_t a = rng.uniform_index(i);
            const double w = 1e-3 * static_cast<double>(1 + rng.uniform_index(3));
            edges.push_back({a, i, w});
            t.edges.push_back({AnId(a), AnId(i), w, 100.0});
        }
        std::vector<ControlDemand> d;
        std::vector<std::size_t> homes;
        for (std::size_t v = 0; v < 2 * n; ++v) {
            homes.push_back(rng.uniform_index(n));
            d.push_back({VehicleId(v), AnId(homes.back()), 1.0});
        }
        const double bound = 2e-3;
        const std::size_t want = oracle::min_controllers(n, edges, cap, homes, bound);
        if (want > n) {
            EXPECT_THROW(place_controllers_exact(t, d, bound), PlacementInfeasible);
        } else {
            EXPECT_EQ(place_controllers_exact(t, d, bound).controllers.size(), want);
        }
    }
}

TEST(Routing, EdgeLatencyModel)
{
    const ControlEdge e{AnId(0u), AnId(1u), 1e-3, 4.0};
    EXPECT_DOUBLE_EQ(edge_latency(e, 0.0, 1e-3), 1e-3);
    EXPECT_NEAR(edge_latency(e, 2.0, 1e-3), 1e-3 + 1e-3 * 2.0 / 2.0, 1e-15);
    EXPECT_TRUE(std::isinf(edge_latency(e, 4.0, 1e-3)));
}

TEST(Routing, SplitsIdenticalFlowsAcrossDiamond)
{
    ControlTopology t;
    t.nodes.assign(4, AnNode{100.0, 1.0});
    t.edges = {{AnId(0u), AnId(1u), 1e-3, 3.0}, {AnId(1u), AnId(3u), 1e-3, 3.0},
               {AnId(0u), AnId(2u), 1e-3, 3.0}, {AnId(2u), AnId(3u), 1e-3, 3.0}};
    Placement p{{AnId(3u)}, {}};
    std::vector<ControlDemand> d;
    for (std::uint32_t v = 0; v < 4; ++v) {
        d.push_back({VehicleId(v), AnId(0u), 1.0});
        p.domain[VehicleId(v)] = AnId(3u);
    }
    const auto r = balance_control_traffic(p, t, d, 1e-3);
    EXPECT_FALSE(r.congested());
    EXPECT_DOUBLE_EQ(r.edge_load[0], 2.0);
    EXPECT_DOUBLE_EQ(r.edge_load[2], 2.0);
    const double want = oracle::best_mean_path_latency(
        {{0, 1, 1e-3}, {1, 3, 1e-3}, {0, 2, 1e-3}, {2, 3, 1e-3}}, {3, 3, 3, 3}, 1e-3, {{0, 1}, {2, 3}}, 4);
    EXPECT_NEAR(r.mean_latency, want, 1e-15);
}

TEST(Routing, ReportsCongestionWhenUnavoidable)
{
    auto t = line(2, 1e-3, 10);
    t.edges[0].capacity = 1.0;
    Placement p{{AnId(1u)}, {{VehicleId(0u), AnId(1u)}, {VehicleId(1u), AnId(1u)}}};
    std::vector<ControlDemand> d{{VehicleId(0u), AnId(0u), 1.0}, {VehicleId(1u), AnId(0u), 1.0}};
    const auto r = balance_control_traffic(p, t, d, 1e-4);
    EXPECT_TRUE(r.congested());
}

TEST(Feedback, TightensBoundUntilTargetMet)
{
    // node 0 hosts the demand; node 1 sits 9 ms away, node 2 1 ms away
    ControlTopology t;
    t.nodes = {AnNode{0.0, 1.0}, AnNode{10.0, 1.0}, AnNode{10.0, 1.0}};
    t.edges = {{AnId(0u), AnId(1u), 9e-3, 100.0}, {AnId(0u), AnId(2u), 1e-3, 100.0}};
    std::vector<ControlDemand> d{{VehicleId(0u), AnId(0u), 1.0}};
    const Placement start{{AnId(1u)}, {{VehicleId(0u), AnId(1u)}}};
    const auto out = replace_on_feedback(start, 9e-3, 2e-3, t, d, 10e-3, FeedbackParams{0.8, 5, 0.0, 16});
    EXPECT_TRUE(out.target_met);
    EXPECT_FALSE(out.unattainable);
    EXPECT_EQ(out.placement.controllers, (std::vector<AnId>{AnId(2u)}));
    EXPECT_GE(out.tightenings, 1u);
    EXPECT_NEAR(out.achieved_latency, 1e-3, 1e-12);
}

TEST(Feedback, UnattainableTargetReported)
{
    ControlTopology t;
    t.nodes = {AnNode{0.0, 1.0}, AnNode{10.0, 1.0}};
    t.edges = {{AnId(0u), AnId(1u), 5e-3, 100.0}};
    std::vector<ControlDemand> d{{VehicleId(0u), AnId(0u), 1.0}};
    const Placement start{{AnId(1u)}, {{VehicleId(0u), AnId(1u)}}};
    const auto out = replace_on_feedback(start, 5e-3, 1e-3, t, d, 10e-3, FeedbackParams{0.5, 10, 0.0, 16});
    EXPECT_FALSE(out.target_met);
    EXPECT_TRUE(out.unattainable);
}

TEST(Sync, RoundsEqualDiameterOnPath)
{
    std::vector<std::vector<std::size_t>> g{{1}, {0, 2}, {1, 3}, {2}};
    VersionMatrix v = VersionMatrix::Zero(4, 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
        v(i, i) = 5;
    }
    const auto r = sync_controllers(g, v);
    EXPECT_EQ(r.rounds, 3u);
    EXPECT_EQ(r.views, VersionMatrix::Constant(4, 4, 5));
}

TEST(Sync, DisconnectedGraphRaisesWithComponents)
{
    std::vector<std::vector<std::size_t>> g{{1}, {0}, {}};
    try {
        sync_controllers(g, VersionMatrix::Identity(3, 3));
        FAIL();
    } catch (const SyncDivergence& e) {
        EXPECT_EQ(e.components().size(), 2u);
    }
}

TEST(Sync, OverlayLinksControllersThroughPlainNodes)
{
    const auto t = line(5, 1e-3, 10);
    const std::vector<AnId> ctl{AnId(0u), AnId(2u), AnId(4u)};
    const auto g = controller_overlay(t, ctl);
    ASSERT_EQ(g.size(), 3u);
    EXPECT_EQ(g[0], (std::vector<std::size_t>{1}));
    EXPECT_EQ(g[1], (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(g[2], (std::vector<std::size_t>{1}));
}
