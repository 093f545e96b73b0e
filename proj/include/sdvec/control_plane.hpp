#pragma once

#include "sdvec/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace sdvec {

struct AnNode {
    double capacity = 1.0; // control messages per slot a controller here can absorb
    double compute = 1.0;
};

/// Undirected link between two ANs.
struct ControlEdge {
    AnId a;
    AnId b;
    double latency = 1e-3; // seconds
    double capacity = 1.0; // control messages per slot
};

struct ControlTopology {
    std::vector<AnNode> nodes;
    std::vector<ControlEdge> edges;

    std::size_t node_count() const noexcept { return nodes.size(); }
    std::vector<std::vector<std::size_t>> neighbours() const;
    bool connected() const;
    double min_edge_latency() const;

    /// All-pairs static shortest latency (Floyd-Warshall); +inf when unreachable.
    Eigen::MatrixXd shortest_latencies() const;
};

/// Throws std::invalid_argument on bad references, non-positive weights or a disconnected graph.
void check_topology(const ControlTopology& topology);

struct ControlDemand {
    VehicleId vehicle;
    AnId home; // AN the vehicle's control traffic enters at
    double rate = 1.0;
};

struct Placement {
    std::vector<AnId> controllers; // ascending
    std::map<VehicleId, AnId> domain;

    bool operator==(const Placement&) const = default;
};

enum class BindingConstraint { capacity, latency };

class PlacementInfeasible : public std::runtime_error {
public:
    PlacementInfeasible(BindingConstraint binding, const std::string& what)
        : std::runtime_error(what)
        , binding_(binding)
    {
    }

    BindingConstraint binding() const noexcept { return binding_; }

private:
    BindingConstraint binding_;
};

/// Whether the demands can be assigned to `controllers` within capacity and
/// latency bound. Exact: b-matching by augmenting paths when all rates are
/// equal, backtracking otherwise. Fills `domain` on success when non-null.
bool assignment_feasible(const ControlTopology& topology, const Eigen::MatrixXd& latencies,
                         std::span<const ControlDemand> demands, std::span<const AnId> controllers,
                         double latency_bound, std::map<VehicleId, AnId>* domain = nullptr);

/// Minimum-cardinality placement by enumerating controller subsets in order
/// of increasing size (lexicographic within a size).
Placement place_controllers_exact(const ControlTopology& topology, std::span<const ControlDemand> demands,
                                  double latency_bound);

/// Greedy set cover: each round opens the AN able to absorb the most
/// still-unassigned demand.
Placement place_controllers_greedy(const ControlTopology& topology, std::span<const ControlDemand> demands,
                                   double latency_bound);

inline constexpr std::size_t kExactPlacementLimit = 12;

/// Exact for topologies with at most kExactPlacementLimit ANs, greedy above.
Placement place_controllers(const ControlTopology& topology, std::span<const ControlDemand> demands,
                            double latency_bound);

struct ControlFlowRouting {
    std::map<VehicleId, std::vector<AnId>> paths; // home ... controller
    std::vector<double> edge_load;                // indexed like topology.edges
    double mean_latency = 0.0;
    std::vector<std::size_t> congested_edges;     // load >= capacity after convergence
    std::size_t reroutes = 0;

    bool congested() const noexcept { return !congested_edges.empty(); }
};

/// Per-edge latency w + kappa * load / (cap - load); +inf at or above capacity.
double edge_latency(const ControlEdge& edge, double load, double kappa);

/// Mean path latency over vehicles for fixed paths (given as edge index lists).
double mean_control_latency(const ControlTopology& topology, std::span<const std::vector<std::size_t>> edge_paths,
                            std::span<const ControlDemand> demands, double kappa);

/// Local-search routing: start on static shortest paths, then repeatedly move
/// single vehicles (in id order) to the candidate simple path that lowers the
/// mean latency most, until no single move improves it. While some link is at
/// or above capacity, moves are ranked by total overload first.
ControlFlowRouting balance_control_traffic(const Placement& placement, const ControlTopology& topology,
                                           std::span<const ControlDemand> demands, double kappa,
                                           std::size_t max_paths = 256);

struct FeedbackParams {
    double theta = 0.8;
    std::size_t max_iters = 5;
    double kappa = 1e-4;
    std::size_t max_paths = 256;
};

struct FeedbackOutcome {
    Placement placement;
    double latency_bound = 0.0;
    double achieved_latency = 0.0;
    std::size_t tightenings = 0;
    bool target_met = false;
    bool unattainable = false;
};

/// Tightens the latency bound by theta and re-places while the achieved mean
/// latency exceeds the target. A bound below the smallest link latency is
/// reported as unattainable.
FeedbackOutcome replace_on_feedback(const Placement& placement, double achieved_latency, double target,
                                    const ControlTopology& topology, std::span<const ControlDemand> demands,
                                    double latency_bound, const FeedbackParams& params);

using VersionMatrix = Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic>;

class SyncDivergence : public std::runtime_error {
public:
    SyncDivergence(std::vector<std::vector<std::size_t>> components);

    const std::vector<std::vector<std::size_t>>& components() const noexcept { return components_; }

private:
    std::vector<std::vector<std::size_t>> components_;
};

struct SyncResult {
    std::size_t rounds = 0;
    VersionMatrix views;
};

/// Synchronous flooding: every round each controller takes the element-wise
/// max of its own and its neighbours' versioned views. Returns the first round
/// at which all rows agree. Throws SyncDivergence for a disconnected graph.
SyncResult sync_controllers(const std::vector<std::vector<std::size_t>>& controller_graph, VersionMatrix views);

/// Controllers i and j are adjacent when some topology path between them
/// passes through no other controller.
std::vector<std::vector<std::size_t>> controller_overlay(const ControlTopology& topology,
                                                         std::span<const AnId> controllers);

std::vector<std::vector<std::size_t>> connected_components(const std::vector<std::vector<std::size_t>>& graph);

} // namespace sdvec
