#include "sdvec/control_plane.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

namespace sdvec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool within(double latency, double bound)
{
    return latency <= bound * (1.0 + 1e-12);
}

std::vector<std::size_t> demand_order(std::span<const ControlDemand> demands)
{
    std::vector<std::size_t> order(demands.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (demands[a].rate != demands[b].rate) {
            return demands[a].rate > demands[b].rate;
        }
        return demands[a].vehicle < demands[b].vehicle;
    });
    return order;
}

// Equal-rate case: capacitated bipartite matching via augmenting paths.
bool match_equal_rates(const ControlTopology& topology, const Eigen::MatrixXd& lat,
                       std::span<const ControlDemand> demands, std::span<const AnId> controllers, double bound,
                       std::vector<std::size_t>& owner)
{
    const double rate = demands.front().rate;
    std::vector<std::size_t> slots(controllers.size());
    for (std::size_t c = 0; c < controllers.size(); ++c) {
        const double cap = topology.nodes[controllers[c].index()].capacity;
        slots[c] = rate > 0.0 ? static_cast<std::size_t>(std::floor(cap / rate * (1.0 + 1e-12)))
                              : demands.size();
    }
    std::vector<std::vector<std::size_t>> reach(demands.size());
    for (std::size_t v = 0; v < demands.size(); ++v) {
        for (std::size_t c = 0; c < controllers.size(); ++c) {
            if (within(lat(demands[v].home.index(), controllers[c].index()), bound)) {
                reach[v].push_back(c);
            }
        }
    }
    std::vector<std::vector<std::size_t>> held(controllers.size());
    std::vector<char> seen;
    std::function<bool(std::size_t)> augment = [&](std::size_t v) -> bool {
        for (std::size_t c : reach[v]) {
            if (seen[c]) {
                continue;
            }
            seen[c] = 1;
            if (held[c].size() < slots[c]) {
                held[c].push_back(v);
                owner[v] = c;
                return true;
            }
            for (std::size_t& w : held[c]) {
                const std::size_t prev = w;
                if (augment(prev)) {
                    // prev moved elsewhere; its seat here goes to v
                    auto it = std::find(held[c].begin(), held[c].end(), prev);
                    *it = v;
                    owner[v] = c;
                    return true;
                }
            }
        }
        return false;
    };
    owner.assign(demands.size(), controllers.size());
    for (std::size_t v = 0; v < demands.size(); ++v) {
        seen.assign(controllers.size(), 0);
        if (!augment(v)) {
            return false;
        }
    }
    return true;
}

bool backtrack_assign(const Eigen::MatrixXd& lat, std::span<const ControlDemand> demands,
                      std::span<const AnId> controllers, double bound, const std::vector<std::size_t>& order,
                      std::size_t depth, std::vector<double>& remaining, double remaining_demand,
                      std::vector<std::size_t>& owner)
{
    if (depth == order.size()) {
        return true;
    }
    const double spare = std::accumulate(remaining.begin(), remaining.end(), 0.0);
    if (remaining_demand > spare * (1.0 + 1e-12)) {
        return false;
    }
    const std::size_t v = order[depth];
    const double rate = demands[v].rate;
    for (std::size_t c = 0; c < controllers.size(); ++c) {
        if (!within(lat(demands[v].home.index(), controllers[c].index()), bound)) {
            continue;
        }
        if (rate > remaining[c] * (1.0 + 1e-12)) {
            continue;
        }
        remaining[c] -= rate;
        owner[v] = c;
        if (backtrack_assign(lat, demands, controllers, bound, order, depth + 1, remaining,
                             remaining_demand - rate, owner)) {
            return true;
        }
        remaining[c] += rate;
    }
    return false;
}

void check_reachable(const Eigen::MatrixXd& lat, std::span<const ControlDemand> demands, double bound,
                     const ControlTopology& topology)
{
    for (const auto& d : demands) {
        bool any = false;
        for (std::size_t n = 0; n < topology.node_count() && !any; ++n) {
            any = within(lat(d.home.index(), n), bound) && d.rate <= topology.nodes[n].capacity * (1.0 + 1e-12);
        }
        if (!any) {
            throw PlacementInfeasible(BindingConstraint::latency,
                                      "vehicle " + std::to_string(d.vehicle.value)
                                          + " has no AN within the latency bound able to host it");
        }
    }
    double total_demand = 0.0;
    double total_cap = 0.0;
    for (const auto& d : demands) {
        total_demand += d.rate;
    }
    for (const auto& n : topology.nodes) {
        total_cap += n.capacity;
    }
    if (total_demand > total_cap * (1.0 + 1e-12)) {
        throw PlacementInfeasible(BindingConstraint::capacity, "total control demand exceeds total AN capacity");
    }
}

std::vector<std::vector<std::size_t>> simple_paths(const ControlTopology& topology,
                                                   const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& adj,
                                                   std::size_t from, std::size_t to, std::size_t max_paths)
{
    // edge-index paths; ordered by static latency then lexicographically
    std::vector<std::vector<std::size_t>> out;
    if (from == to) {
        out.emplace_back();
        return out;
    }
    std::vector<char> on_path(topology.node_count(), 0);
    std::vector<std::size_t> edges;
    std::function<void(std::size_t)> dfs = [&](std::size_t node) {
        if (node == to) {
            out.push_back(edges);
            return;
        }
        for (auto [next, e] : adj[node]) {
            if (on_path[next]) {
                continue;
            }
            on_path[next] = 1;
            edges.push_back(e);
            dfs(next);
            edges.pop_back();
            on_path[next] = 0;
        }
    };
    on_path[from] = 1;
    dfs(from);
    auto static_cost = [&](const std::vector<std::size_t>& p) {
        double s = 0.0;
        for (std::size_t e : p) {
            s += topology.edges[e].latency;
        }
        return s;
    };
    std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
        const double ca = static_cost(a);
        const double cb = static_cost(b);
        if (ca != cb) {
            return ca < cb;
        }
        return a < b;
    });
    if (out.size() > max_paths) {
        out.resize(max_paths);
    }
    return out;
}

// Sum over vehicles of path latency, from per-edge demand load and vehicle counts.
double total_latency(const ControlTopology& topology, const std::vector<double>& load,
                     const std::vector<double>& count, double kappa)
{
    double total = 0.0;
    for (std::size_t e = 0; e < topology.edges.size(); ++e) {
        if (count[e] == 0.0) {
            continue;
        }
        total += count[e] * edge_latency(topology.edges[e], load[e], kappa);
    }
    return total;
}

// Ranks routings that overload links: total overload first, then latency of
// the links still below capacity.
struct RouteCost {
    double overflow = 0.0;
    double latency = 0.0;

    bool better_than(const RouteCost& o) const
    {
        const double tol = 1e-12;
        if (overflow < o.overflow - tol * std::max(1.0, o.overflow)) {
            return true;
        }
        if (overflow > o.overflow + tol * std::max(1.0, o.overflow)) {
            return false;
        }
        return latency < o.latency - tol * std::max(1.0, o.latency);
    }
};

RouteCost route_cost(const ControlTopology& topology, const std::vector<double>& load,
                     const std::vector<double>& count, double kappa)
{
    RouteCost c;
    for (std::size_t e = 0; e < topology.edges.size(); ++e) {
        if (count[e] == 0.0) {
            continue;
        }
        const auto& edge = topology.edges[e];
        if (load[e] >= edge.capacity) {
            c.overflow += count[e] * (load[e] - edge.capacity + 1.0);
        } else {
            c.latency += count[e] * edge_latency(edge, load[e], kappa);
        }
    }
    return c;
}

std::vector<AnId> path_nodes(const ControlTopology& topology, std::size_t from, const std::vector<std::size_t>& edges)
{
    std::vector<AnId> nodes{AnId(from)};
    std::size_t at = from;
    for (std::size_t e : edges) {
        const auto& edge = topology.edges[e];
        at = edge.a.index() == at ? edge.b.index() : edge.a.index();
        nodes.push_back(AnId(at));
    }
    return nodes;
}

} // namespace

std::vector<std::vector<std::size_t>> ControlTopology::neighbours() const
{
    std::vector<std::vector<std::size_t>> adj(nodes.size());
    for (const auto& e : edges) {
        adj[e.a.index()].push_back(e.b.index());
        adj[e.b.index()].push_back(e.a.index());
    }
    for (auto& l : adj) {
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
    }
    return adj;
}

std::vector<std::vector<std::size_t>> connected_components(const std::vector<std::vector<std::size_t>>& graph)
{
    std::vector<std::vector<std::size_t>> comps;
    std::vector<char> seen(graph.size(), 0);
    for (std::size_t s = 0; s < graph.size(); ++s) {
        if (seen[s]) {
            continue;
        }
        std::vector<std::size_t> comp;
        std::deque<std::size_t> queue{s};
        seen[s] = 1;
        while (!queue.empty()) {
            const std::size_t u = queue.front();
            queue.pop_front();
            comp.push_back(u);
            for (std::size_t v : graph[u]) {
                if (!seen[v]) {
                    seen[v] = 1;
                    queue.push_back(v);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

bool ControlTopology::connected() const
{
    return nodes.empty() || connected_components(neighbours()).size() == 1;
}

double ControlTopology::min_edge_latency() const
{
    double m = kInf;
    for (const auto& e : edges) {
        m = std::min(m, e.latency);
    }
    return m;
}

Eigen::MatrixXd ControlTopology::shortest_latencies() const
{
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, kInf);
    d.diagonal().setZero();
    for (const auto& e : edges) {
        const auto a = static_cast<Eigen::Index>(e.a.index());
        const auto b = static_cast<Eigen::Index>(e.b.index());
        d(a, b) = std::min(d(a, b), e.latency);
        d(b, a) = std::min(d(b, a), e.latency);
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
            }
        }
    }
    return d;
}

void check_topology(const ControlTopology& topology)
{
    if (topology.nodes.empty()) {
        throw std::invalid_argument("control topology has no ANs");
    }
    for (std::size_t i = 0; i < topology.nodes.size(); ++i) {
        if (!(topology.nodes[i].capacity > 0.0) || !(topology.nodes[i].compute > 0.0)) {
            throw std::invalid_argument("AN " + std::to_string(i) + ": capacities must be positive");
        }
    }
    for (std::size_t i = 0; i < topology.edges.size(); ++i) {
        const auto& e = topology.edges[i];
        if (e.a.index() >= topology.nodes.size() || e.b.index() >= topology.nodes.size() || e.a == e.b) {
            throw std::invalid_argument("control edge " + std::to_string(i) + ": invalid endpoints");
        }
        if (!(e.latency > 0.0) || !(e.capacity > 0.0)) {
            throw std::invalid_argument("control edge " + std::to_string(i) + ": latency and capacity must be positive");
        }
    }
    if (!topology.connected()) {
        throw std::invalid_argument("control topology is not connected");
    }
}

bool assignment_feasible(const ControlTopology& topology, const Eigen::MatrixXd& latencies,
                         std::span<const ControlDemand> demands, std::span<const AnId> controllers,
                         double latency_bound, std::map<VehicleId, AnId>* domain)
{
    if (demands.empty()) {
        if (domain) {
            domain->clear();
        }
        return true;
    }
    if (controllers.empty()) {
        return false;
    }
    std::vector<std::size_t> owner(demands.size(), controllers.size());
    const bool equal_rates = std::all_of(demands.begin(), demands.end(),
                                         [&](const ControlDemand& d) { return d.rate == demands.front().rate; });
    bool ok = false;
    if (equal_rates) {
        ok = match_equal_rates(topology, latencies, demands, controllers, latency_bound, owner);
    } else {
        std::vector<double> remaining;
        for (AnId c : controllers) {
            remaining.push_back(topology.nodes[c.index()].capacity);
        }
        double total = 0.0;
        for (const auto& d : demands) {
            total += d.rate;
        }
        ok = backtrack_assign(latencies, demands, controllers, latency_bound, demand_order(demands), 0, remaining,
                              total, owner);
    }
    if (ok && domain) {
        domain->clear();
        for (std::size_t v = 0; v < demands.size(); ++v) {
            (*domain)[demands[v].vehicle] = controllers[owner[v]];
        }
    }
    return ok;
}

Placement place_controllers_exact(const ControlTopology& topology, std::span<const ControlDemand> demands,
                                  double latency_bound)
{
    const Eigen::MatrixXd lat = topology.shortest_latencies();
    check_reachable(lat, demands, latency_bound, topology);
    const std::size_t n = topology.node_count();
    if (demands.empty()) {
        return {};
    }
    for (std::size_t k = 1; k <= n; ++k) {
        // lexicographic k-subsets of {0..n-1}
        std::vector<std::size_t> idx(k);
        std::iota(idx.begin(), idx.end(), 0);
        while (true) {
            std::vector<AnId> set;
            double cap = 0.0;
            for (std::size_t i : idx) {
                set.emplace_back(i);
                cap += topology.nodes[i].capacity;
            }
            double need = 0.0;
            for (const auto& d : demands) {
                need += d.rate;
            }
            Placement p;
            if (need <= cap * (1.0 + 1e-12) && assignment_feasible(topology, lat, demands, set, latency_bound, &p.domain)) {
                p.controllers = std::move(set);
                return p;
            }
            std::size_t i = k;
            while (i > 0 && idx[i - 1] == n - k + i - 1) {
                --i;
            }
            if (i == 0) {
                break;
            }
            ++idx[i - 1];
            for (std::size_t j = i; j < k; ++j) {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    throw PlacementInfeasible(BindingConstraint::capacity,
                              "no controller set can host all vehicles within capacity and latency bound");
}

Placement place_controllers_greedy(const ControlTopology& topology, std::span<const ControlDemand> demands,
                                   double latency_bound)
{
    const Eigen::MatrixXd lat = topology.shortest_latencies();
    check_reachable(lat, demands, latency_bound, topology);
    const std::vector<std::size_t> order = demand_order(demands);
    std::vector<char> assigned(demands.size(), 0);
    std::vector<char> open(topology.node_count(), 0);
    std::size_t left = demands.size();
    Placement p;
    while (left > 0) {
        std::size_t best = topology.node_count();
        double best_cover = 0.0;
        std::vector<std::size_t> best_take;
        for (std::size_t n = 0; n < topology.node_count(); ++n) {
            if (open[n]) {
                continue;
            }
            double rem = topology.nodes[n].capacity;
            double cover = 0.0;
            std::vector<std::size_t> take;
            for (std::size_t v : order) {
                if (assigned[v] || !within(lat(demands[v].home.index(), n), latency_bound)) {
                    continue;
                }
                if (demands[v].rate <= rem * (1.0 + 1e-12)) {
                    rem -= demands[v].rate;
                    cover += demands[v].rate;
                    take.push_back(v);
                }
            }
            if (take.size() > 0 && (best == topology.node_count() || cover > best_cover)) {
                best = n;
                best_cover = cover;
                best_take = std::move(take);
            }
        }
        if (best == topology.node_count()) {
            throw PlacementInfeasible(BindingConstraint::capacity,
                                      "greedy placement left " + std::to_string(left) + " vehicles unassigned");
        }
        open[best] = 1;
        for (std::size_t v : best_take) {
            assigned[v] = 1;
            p.domain[demands[v].vehicle] = AnId(best);
            --left;
        }
    }
    for (std::size_t n = 0; n < open.size(); ++n) {
        if (open[n]) {
            p.controllers.emplace_back(n);
        }
    }
    return p;
}

Placement place_controllers(const ControlTopology& topology, std::span<const ControlDemand> demands,
                            double latency_bound)
{
    if (topology.node_count() <= kExactPlacementLimit) {
        return place_controllers_exact(topology, demands, latency_bound);
    }
    return place_controllers_greedy(topology, demands, latency_bound);
}

double edge_latency(const ControlEdge& edge, double load, double kappa)
{
    if (load >= edge.capacity) {
        return kInf;
    }
    return edge.latency + kappa * load / (edge.capacity - load);
}

double mean_control_latency(const ControlTopology& topology, std::span<const std::vector<std::size_t>> edge_paths,
                            std::span<const ControlDemand> demands, double kappa)
{
    if (demands.empty()) {
        return 0.0;
    }
    std::vector<double> load(topology.edges.size(), 0.0);
    std::vector<double> count(topology.edges.size(), 0.0);
    for (std::size_t v = 0; v < demands.size(); ++v) {
        for (std::size_t e : edge_paths[v]) {
            load[e] += demands[v].rate;
            count[e] += 1.0;
        }
    }
    return total_latency(topology, load, count, kappa) / static_cast<double>(demands.size());
}

ControlFlowRouting balance_control_traffic(const Placement& placement, const ControlTopology& topology,
                                           std::span<const ControlDemand> demands, double kappa,
                                           std::size_t max_paths)
{
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(topology.node_count());
    for (std::size_t e = 0; e < topology.edges.size(); ++e) {
        adj[topology.edges[e].a.index()].push_back({topology.edges[e].b.index(), e});
        adj[topology.edges[e].b.index()].push_back({topology.edges[e].a.index(), e});
    }
    for (auto& l : adj) {
        std::sort(l.begin(), l.end());
    }

    // process vehicles in id order
    std::vector<std::size_t> order(demands.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return demands[a].vehicle < demands[b].vehicle; });

    std::vector<std::vector<std::vector<std::size_t>>> candidates(demands.size());
    std::vector<std::size_t> choice(demands.size(), 0);
    std::vector<double> load(topology.edges.size(), 0.0);
    std::vector<double> count(topology.edges.size(), 0.0);
    for (std::size_t v : order) {
        const auto it = placement.domain.find(demands[v].vehicle);
        if (it == placement.domain.end()) {
            throw std::invalid_argument("balance_control_traffic: vehicle " + std::to_string(demands[v].vehicle.value)
                                        + " has no controller");
        }
        candidates[v] = simple_paths(topology, adj, demands[v].home.index(), it->second.index(), max_paths);
        if (candidates[v].empty()) {
            throw std::invalid_argument("balance_control_traffic: controller unreachable");
        }
        for (std::size_t e : candidates[v][0]) {
            load[e] += demands[v].rate;
            count[e] += 1.0;
        }
    }

    ControlFlowRouting out;
    RouteCost current = route_cost(topology, load, count, kappa);
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t v : order) {
            for (std::size_t e : candidates[v][choice[v]]) {
                load[e] -= demands[v].rate;
                count[e] -= 1.0;
            }
            std::size_t best = choice[v];
            RouteCost best_cost = current;
            for (std::size_t p = 0; p < candidates[v].size(); ++p) {
                if (p == choice[v]) {
                    continue;
                }
                for (std::size_t e : candidates[v][p]) {
                    load[e] += demands[v].rate;
                    count[e] += 1.0;
                }
                const RouteCost c = route_cost(topology, load, count, kappa);
                for (std::size_t e : candidates[v][p]) {
                    load[e] -= demands[v].rate;
                    count[e] -= 1.0;
                }
                if (c.better_than(best_cost)) {
                    best = p;
                    best_cost = c;
                }
            }
            if (best != choice[v]) {
                choice[v] = best;
                current = best_cost;
                improved = true;
                ++out.reroutes;
            }
            for (std::size_t e : candidates[v][choice[v]]) {
                load[e] += demands[v].rate;
                count[e] += 1.0;
            }
        }
    }

    for (std::size_t v = 0; v < demands.size(); ++v) {
        out.paths[demands[v].vehicle] = path_nodes(topology, demands[v].home.index(), candidates[v][choice[v]]);
    }
    out.edge_load = load;
    out.mean_latency =
        demands.empty() ? 0.0 : total_latency(topology, load, count, kappa) / static_cast<double>(demands.size());
    for (std::size_t e = 0; e < load.size(); ++e) {
        if (load[e] >= topology.edges[e].capacity) {
            out.congested_edges.push_back(e);
        }
    }
    return out;
}

FeedbackOutcome replace_on_feedback(const Placement& placement, double achieved_latency, double target,
                                    const ControlTopology& topology, std::span<const ControlDemand> demands,
                                    double latency_bound, const FeedbackParams& params)
{
    if (!(params.theta > 0.0 && params.theta < 1.0)) {
        throw std::invalid_argument("replace_on_feedback: theta must be in (0, 1)");
    }
    FeedbackOutcome out{placement, latency_bound, achieved_latency, 0, achieved_latency <= target, false};
    const double floor_latency = topology.min_edge_latency();
    while (!out.target_met && out.tightenings < params.max_iters) {
        const double next = out.latency_bound * params.theta;
        if (next < floor_latency) {
            out.unattainable = true;
            break;
        }
        out.latency_bound = next;
        ++out.tightenings;
        try {
            out.placement = place_controllers(topology, demands, out.latency_bound);
        } catch (const PlacementInfeasible&) {
            out.unattainable = true;
            break;
        }
        const auto routing = balance_control_traffic(out.placement, topology, demands, params.kappa, params.max_paths);
        out.achieved_latency = routing.mean_latency;
        out.target_met = routing.mean_latency <= target;
    }
    return out;
}

SyncDivergence::SyncDivergence(std::vector<std::vector<std::size_t>> components)
    : std::runtime_error("controller graph is disconnected (" + std::to_string(components.size()) + " components)")
    , components_(std::move(components))
{
}

SyncResult sync_controllers(const std::vector<std::vector<std::size_t>>& controller_graph, VersionMatrix views)
{
    if (static_cast<std::size_t>(views.rows()) != controller_graph.size()) {
        throw std::invalid_argument("sync_controllers: one view per controller required");
    }
    auto comps = connected_components(controller_graph);
    if (comps.size() > 1) {
        throw SyncDivergence(std::move(comps));
    }
    auto agreed = [](const VersionMatrix& m) {
        for (Eigen::Index r = 1; r < m.rows(); ++r) {
            if (m.row(r) != m.row(0)) {
                return false;
            }
        }
        return true;
    };
    SyncResult out;
    while (!agreed(views)) {
        VersionMatrix next = views;
        for (std::size_t i = 0; i < controller_graph.size(); ++i) {
            for (std::size_t j : controller_graph[i]) {
                next.row(static_cast<Eigen::Index>(i)) =
                    next.row(static_cast<Eigen::Index>(i)).cwiseMax(views.row(static_cast<Eigen::Index>(j)));
            }
        }
        views = std::move(next);
        ++out.rounds;
    }
    out.views = std::move(views);
    return out;
}

std::vector<std::vector<std::size_t>> controller_overlay(const ControlTopology& topology,
                                                         std::span<const AnId> controllers)
{
    const auto adj = topology.neighbours();
    std::vector<std::size_t> slot_of(topology.node_count(), controllers.size());
    for (std::size_t i = 0; i < controllers.size(); ++i) {
        slot_of[controllers[i].index()] = i;
    }
    std::vector<std::vector<std::size_t>> overlay(controllers.size());
    for (std::size_t i = 0; i < controllers.size(); ++i) {
        std::vector<char> seen(topology.node_count(), 0);
        std::deque<std::size_t> queue{controllers[i].index()};
        seen[controllers[i].index()] = 1;
        while (!queue.empty()) {
            const std::size_t u = queue.front();
            queue.pop_front();
            for (std::size_t v : adj[u]) {
                if (seen[v]) {
                    continue;
                }
                seen[v] = 1;
                if (slot_of[v] < controllers.size()) {
                    overlay[i].push_back(slot_of[v]);
                } else {
                    queue.push_back(v);
                }
            }
        }
        std::sort(overlay[i].begin(), overlay[i].end());
    }
    return overlay;
}

} // namespace sdvec
