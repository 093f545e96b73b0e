#include "sdvec/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace sdvec {

VirtualCluster form_cluster(VehicleId vehicle, std::span<const RankedAp> candidates, std::size_t k_cluster,
                            std::uint64_t slot)
{
    if (k_cluster == 0) {
        throw std::invalid_argument("form_cluster: k_cluster must be >= 1");
    }
    std::vector<RankedAp> ranked(candidates.begin(), candidates.end());
    rank_by_snr(ranked);
    VirtualCluster cluster{vehicle, {}, slot};
    const std::size_t n = std::min(k_cluster, ranked.size());
    for (std::size_t i = 0; i < n; ++i) {
        cluster.members.push_back(ranked[i].ap);
    }
    return cluster;
}

const Slice* SliceAssignment::find(VehicleId cluster) const
{
    for (const auto& s : slices) {
        if (s.cluster == cluster) {
            return &s;
        }
    }
    return nullptr;
}

std::size_t SliceAssignment::unsatisfied() const
{
    std::size_t total = 0;
    for (const auto& s : slices) {
        total += s.unsatisfied();
    }
    return total;
}

SliceAssignment allocate_slices(std::span<const VirtualCluster> clusters, const CtuPool& pool,
                                std::span<const std::size_t> demands, std::span<const AnId> ap_to_an,
                                std::span<const double> an_power_w)
{
    if (demands.size() != clusters.size()) {
        throw std::invalid_argument("allocate_slices: one demand per cluster required");
    }
    std::vector<std::size_t> order(clusters.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (demands[a] != demands[b]) {
            return demands[a] > demands[b];
        }
        return clusters[a].center < clusters[b].center;
    });

    SliceAssignment out;
    std::uint32_t next_ctu = 0;
    for (std::size_t i : order) {
        Slice slice{clusters[i].center, {}, 0.0, demands[i]};
        const std::size_t take = std::min<std::size_t>(demands[i], pool.size() - next_ctu);
        for (std::size_t k = 0; k < take; ++k) {
            slice.ctus.push_back(CtuId{next_ctu++});
        }
        out.slices.push_back(std::move(slice));
    }

    // members hosted per AN, counted over clusters that got radio resources
    std::vector<double> members_per_an(an_power_w.size(), 0.0);
    auto an_of = [&](ApId ap) { return ap_to_an[ap.index()].index(); };
    for (std::size_t s = 0; s < out.slices.size(); ++s) {
        if (out.slices[s].ctus.empty()) {
            continue;
        }
        for (ApId ap : clusters[order[s]].members) {
            members_per_an.at(an_of(ap)) += 1.0;
        }
    }
    for (std::size_t s = 0; s < out.slices.size(); ++s) {
        if (out.slices[s].ctus.empty()) {
            continue;
        }
        for (ApId ap : clusters[order[s]].members) {
            const std::size_t an = an_of(ap);
            out.slices[s].power_w += an_power_w[an] / members_per_an[an];
        }
    }
    return out;
}

std::size_t count_overlaps(const SliceAssignment& assignment)
{
    std::set<CtuId> seen;
    std::size_t overlaps = 0;
    for (const auto& s : assignment.slices) {
        for (CtuId c : s.ctus) {
            if (!seen.insert(c).second) {
                ++overlaps;
            }
        }
    }
    return overlaps;
}

QLearner::QLearner(AnId owner, std::size_t states, std::size_t actions, double eta, double gamma, double epsilon)
    : owner_(owner)
    , eta_(eta)
    , gamma_(gamma)
    , epsilon_(epsilon)
    , q_(Eigen::MatrixXd::Zero(index(states), index(actions)))
{
    if (states == 0 || actions == 0) {
        throw std::invalid_argument("QLearner: empty state or action set");
    }
    if (!(eta > 0.0 && eta <= 1.0)) {
        throw std::invalid_argument("QLearner: eta must be in (0, 1]");
    }
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw std::invalid_argument("QLearner: gamma must be in [0, 1)");
    }
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw std::invalid_argument("QLearner: epsilon must be in [0, 1]");
    }
}

std::size_t QLearner::greedy(std::size_t state) const
{
    Eigen::Index best = 0;
    const auto row = q_.row(index(state));
    for (Eigen::Index a = 1; a < row.size(); ++a) {
        if (row(a) > row(best)) {
            best = a;
        }
    }
    return static_cast<std::size_t>(best);
}

std::size_t QLearner::select(std::size_t state, RngStream& rng) const
{
    const double u = rng.uniform();
    const auto explore = static_cast<std::size_t>(rng.uniform_index(actions()));
    return u < epsilon_ ? explore : greedy(state);
}

void QLearner::update(std::size_t state, std::size_t action, double reward, std::size_t next_state)
{
    const double target = reward + gamma_ * q_.row(index(next_state)).maxCoeff();
    double& q = q_(index(state), index(action));
    q += eta_ * (target - q);
}

double eco_reward(const EcoRewardWeights& w, bool delivered, double power_w)
{
    return w.delivered * (delivered ? 1.0 : 0.0) - w.power * power_w;
}

std::size_t eco_route_step(QLearner& learner, std::size_t state,
                           const std::function<EcoFeedback(std::size_t action)>& act, RngStream& rng)
{
    const std::size_t action = learner.select(state, rng);
    const EcoFeedback fb = act(action);
    learner.update(state, action, fb.reward, fb.next_state);
    return action;
}

std::size_t EcoStateSpace::encode(std::size_t load, double mean_snr_db) const
{
    const std::size_t l = std::min(load, load_buckets - 1);
    double b = std::floor((mean_snr_db - snr_floor_db) / snr_bucket_width_db);
    if (std::isnan(b) || b < 0.0) {
        b = 0.0;
    }
    const double top = static_cast<double>(snr_buckets - 1);
    const auto s = static_cast<std::size_t>(std::min(b, top));
    return l * snr_buckets + s;
}

} // namespace sdvec
