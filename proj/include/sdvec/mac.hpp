#pragma once

#include "sdvec/channel.hpp"
#include "sdvec/rng.hpp"
#include "sdvec/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace sdvec {

/// Grant-free resource grid: slot x frequency block x sequence.
struct CtuPool {
    std::uint32_t slots_per_frame = 1;
    std::uint32_t freq_blocks = 1;
    std::uint32_t sequences = 1;

    std::uint32_t size() const noexcept { return slots_per_frame * freq_blocks * sequences; }
};

struct CtuId {
    std::uint32_t value = 0;

    auto operator<=>(const CtuId&) const = default;
};

struct CtuCoords {
    std::uint32_t slot = 0;
    std::uint32_t freq_block = 0;
    std::uint32_t sequence = 0;
};

CtuId ctu_at(const CtuPool& pool, CtuCoords coords);
CtuCoords coords_of(const CtuPool& pool, CtuId id);

struct CtuAssignment {
    CtuId ctu;
    ApId ap;
};

struct CtuSelection {
    VehicleId vehicle;
    std::vector<CtuAssignment> ctus;
};

enum class CtuPolicy { random, preconfigured };

/// Uplink CTU choice. `random` draws `replicas` distinct CTUs without
/// replacement; `preconfigured` takes the first `replicas` entries of
/// `fixed`. Chosen CTUs are assigned to candidate APs round-robin in the
/// candidates' (descending SNR) order. Throws std::invalid_argument when
/// replicas is 0 or exceeds the pool (or the preconfigured list), or when
/// there are no candidates.
CtuSelection select_ctus(VehicleId vehicle, std::span<const RankedAp> candidates, std::size_t replicas,
                         CtuPolicy policy, const CtuPool& pool, RngStream& rng,
                         std::span<const CtuId> fixed = {});

using OccupancyMap = std::map<CtuId, std::vector<VehicleId>>;

/// Exact CTU -> occupants multimap for one slot's selections.
OccupancyMap detect_collisions(std::span<const CtuSelection> selections);

/// Threshold model of maximum-likelihood multiuser detection: a CTU with at
/// most k_max occupants is fully resolvable, otherwise nothing is.
bool mud_resolvable(std::size_t occupants, std::size_t k_max);
std::vector<bool> mud_resolve(std::span<const VehicleId> occupants, std::size_t k_max);

enum class RelayMode { amplify_forward, decode_forward };

/// Logistic stand-in for short-block LDPC performance:
/// BLER(s) = 1 / (1 + exp(alpha * (s_db - beta(bits)))).
struct BlerCurve {
    double alpha = 1.5;
    std::map<int, double> beta_db = {{128, 3.0}, {256, 4.0}};

    double bler(double snr_db, int payload_bits) const;
};

/// Two-hop effective SNR in linear scale. AF uses s*r/(s+r+1), DF uses min(s, r).
double effective_snr_linear(double snr_linear, double relay_snr_linear, RelayMode mode);
double effective_snr_db(double snr_db, double relay_snr_db, RelayMode mode);

/// One relayed path: success with probability 1 - BLER(SNR_eff). Always consumes one draw.
bool decode_path(SignalQuality snr, int payload_bits, RelayMode mode, SignalQuality relay_snr,
                 const BlerCurve& curve, RngStream& rng);

struct DecodeOutcome {
    std::vector<bool> path_success;
    bool combined = false;
    bool resolved_by_mud = false;
};

/// Selection combining: success iff any path decoded.
DecodeOutcome combine(std::span<const bool> paths);
DecodeOutcome combine(const std::vector<bool>& paths);

/// epsilon-greedy bandit over replica counts 1..r_max. Reward for arm r is
/// 1{success} - cost * r, estimates are incremental means.
class ReplicaBandit {
public:
    ReplicaBandit(std::size_t r_max, double epsilon, double cost);

    std::size_t arms() const noexcept { return estimates_.size(); }
    double epsilon() const noexcept { return epsilon_; }
    double cost() const noexcept { return cost_; }
    double estimate(std::size_t replicas) const { return estimates_.at(replicas - 1); }
    std::uint64_t pulls(std::size_t replicas) const { return counts_.at(replicas - 1); }

    void set_estimate(std::size_t replicas, double value) { estimates_.at(replicas - 1) = value; }

    void update(std::size_t replicas, bool success);

    /// Greedy choice breaks ties toward the lowest replica count.
    std::size_t select(RngStream& rng) const;

private:
    double epsilon_;
    double cost_;
    std::vector<double> estimates_;
    std::vector<std::uint64_t> counts_;
};

/// Applies the last slot's reward (if any) and picks the next replica count.
std::size_t bandit_select_and_update(ReplicaBandit& state, const std::optional<DecodeOutcome>& last_outcome,
                                     std::optional<std::size_t> last_replicas, RngStream& rng);

} // namespace sdvec
