#pragma once

#include "sdvec/channel.hpp"
#include "sdvec/mac.hpp"
#include "sdvec/rng.hpp"
#include "sdvec/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

namespace sdvec {

/// Vehicle-centric set of serving APs. Clusters of different vehicles may overlap.
struct VirtualCluster {
    VehicleId center;
    std::vector<ApId> members; // descending SNR
    std::uint64_t formation_slot = 0;
};

/// Top-min(k, |candidates|) APs by SNR with AP-id tiebreak. Empty candidates
/// give an empty cluster (vehicle unserved).
VirtualCluster form_cluster(VehicleId vehicle, std::span<const RankedAp> candidates, std::size_t k_cluster,
                            std::uint64_t slot = 0);

struct Slice {
    VehicleId cluster;
    std::vector<CtuId> ctus;
    double power_w = 0.0;
    std::size_t demand = 0;

    std::size_t unsatisfied() const noexcept { return demand - ctus.size(); }
};

struct SliceAssignment {
    std::vector<Slice> slices; // in allocation order

    const Slice* find(VehicleId cluster) const;
    std::size_t unsatisfied() const;
};

/// Greedy partition of the pool. Clusters are served in descending demand
/// order (cluster id breaks ties), each taking min(demand, remaining) CTUs
/// from the low end of the remaining pool. Each AN's power budget is shared
/// among clusters that received CTUs, in proportion to their member APs
/// hosted by that AN.
SliceAssignment allocate_slices(std::span<const VirtualCluster> clusters, const CtuPool& pool,
                                std::span<const std::size_t> demands, std::span<const AnId> ap_to_an,
                                std::span<const double> an_power_w);

/// Number of CTUs appearing in more than one slice (0 for a valid assignment).
std::size_t count_overlaps(const SliceAssignment& assignment);

/// Tabular Q-learner owned by one AN.
class QLearner {
public:
    QLearner(AnId owner, std::size_t states, std::size_t actions, double eta, double gamma, double epsilon);

    AnId owner() const noexcept { return owner_; }
    std::size_t states() const noexcept { return static_cast<std::size_t>(q_.rows()); }
    std::size_t actions() const noexcept { return static_cast<std::size_t>(q_.cols()); }
    double eta() const noexcept { return eta_; }
    double gamma() const noexcept { return gamma_; }
    double epsilon() const noexcept { return epsilon_; }
    const Eigen::MatrixXd& table() const noexcept { return q_; }
    double q(std::size_t s, std::size_t a) const { return q_(index(s), index(a)); }
    void set_q(std::size_t s, std::size_t a, double v) { q_(index(s), index(a)) = v; }

    /// Lowest action index wins ties.
    std::size_t greedy(std::size_t state) const;
    std::size_t select(std::size_t state, RngStream& rng) const;

    /// Q(s,a) += eta * (r + gamma * max_a' Q(s',a') - Q(s,a)).
    void update(std::size_t state, std::size_t action, double reward, std::size_t next_state);

private:
    static Eigen::Index index(std::size_t i) { return static_cast<Eigen::Index>(i); }

    AnId owner_;
    double eta_;
    double gamma_;
    double epsilon_;
    Eigen::MatrixXd q_;
};

struct EcoRewardWeights {
    double delivered = 1.0;
    double power = 0.5;
};

double eco_reward(const EcoRewardWeights& w, bool delivered, double power_w);

/// Outcome of executing one downlink action; reward and next state feed the update.
struct EcoFeedback {
    double reward = 0.0;
    std::size_t next_state = 0;
};

/// Chooses an action epsilon-greedily, executes it through `act`, and applies
/// the Q update with the returned reward.
std::size_t eco_route_step(QLearner& learner, std::size_t state,
                           const std::function<EcoFeedback(std::size_t action)>& act, RngStream& rng);

/// Flattened (local load bucket, mean SNR bucket) state index.
struct EcoStateSpace {
    std::size_t load_buckets = 4;
    std::size_t snr_buckets = 4;
    double snr_floor_db = 0.0;
    double snr_bucket_width_db = 10.0;

    std::size_t size() const noexcept { return load_buckets * snr_buckets; }
    std::size_t encode(std::size_t load, double mean_snr_db) const;
};

} // namespace sdvec
