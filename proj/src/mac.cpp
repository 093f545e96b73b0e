#include "sdvec/mac.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sdvec {

CtuId ctu_at(const CtuPool& pool, CtuCoords c)
{
    if (c.slot >= pool.slots_per_frame || c.freq_block >= pool.freq_blocks || c.sequence >= pool.sequences) {
        throw std::out_of_range("CTU coordinates outside pool");
    }
    return CtuId{(c.slot * pool.freq_blocks + c.freq_block) * pool.sequences + c.sequence};
}

CtuCoords coords_of(const CtuPool& pool, CtuId id)
{
    if (id.value >= pool.size()) {
        throw std::out_of_range("CTU id outside pool");
    }
    const std::uint32_t seq = id.value % pool.sequences;
    const std::uint32_t rest = id.value / pool.sequences;
    return {rest / pool.freq_blocks, rest % pool.freq_blocks, seq};
}

CtuSelection select_ctus(VehicleId vehicle, std::span<const RankedAp> candidates, std::size_t replicas,
                         CtuPolicy policy, const CtuPool& pool, RngStream& rng, std::span<const CtuId> fixed)
{
    if (replicas == 0) {
        throw std::invalid_argument("select_ctus: replicas must be >= 1");
    }
    if (candidates.empty()) {
        throw std::invalid_argument("select_ctus: no candidate APs");
    }
    if (replicas > pool.size()) {
        throw std::invalid_argument("select_ctus: replicas (" + std::to_string(replicas) + ") exceed pool size ("
                                    + std::to_string(pool.size()) + ")");
    }

    CtuSelection sel{vehicle, {}};
    sel.ctus.reserve(replicas);

    std::vector<CtuId> chosen;
    if (policy == CtuPolicy::random) {
        // partial Fisher-Yates over the pool
        std::vector<std::uint32_t> ids(pool.size());
        std::iota(ids.begin(), ids.end(), 0u);
        for (std::size_t i = 0; i < replicas; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.uniform_index(ids.size() - i));
            std::swap(ids[i], ids[j]);
            chosen.push_back(CtuId{ids[i]});
        }
    } else {
        if (replicas > fixed.size()) {
            throw std::invalid_argument("select_ctus: preconfigured mapping has fewer CTUs than replicas");
        }
        for (std::size_t i = 0; i < replicas; ++i) {
            if (fixed[i].value >= pool.size()) {
                throw std::invalid_argument("select_ctus: preconfigured CTU outside pool");
            }
            for (std::size_t k = 0; k < i; ++k) {
                if (fixed[k] == fixed[i]) {
                    throw std::invalid_argument("select_ctus: duplicate preconfigured CTU");
                }
            }
            chosen.push_back(fixed[i]);
        }
    }

    for (std::size_t i = 0; i < chosen.size(); ++i) {
        sel.ctus.push_back({chosen[i], candidates[i % candidates.size()].ap});
    }
    return sel;
}

OccupancyMap detect_collisions(std::span<const CtuSelection> selections)
{
    OccupancyMap occupancy;
    for (const auto& sel : selections) {
        for (const auto& a : sel.ctus) {
            occupancy[a.ctu].push_back(sel.vehicle);
        }
    }
    return occupancy;
}

bool mud_resolvable(std::size_t occupants, std::size_t k_max)
{
    return occupants >= 1 && occupants <= k_max;
}

std::vector<bool> mud_resolve(std::span<const VehicleId> occupants, std::size_t k_max)
{
    return std::vector<bool>(occupants.size(), mud_resolvable(occupants.size(), k_max));
}

double BlerCurve::bler(double snr_db, int payload_bits) const
{
    const auto it = beta_db.find(payload_bits);
    if (it == beta_db.end()) {
        throw std::invalid_argument("no BLER threshold configured for payload of " + std::to_string(payload_bits)
                                    + " bits");
    }
    if (std::isinf(snr_db)) {
        return snr_db > 0 ? 0.0 : 1.0;
    }
    return 1.0 / (1.0 + std::exp(alpha * (snr_db - it->second)));
}

double effective_snr_linear(double s, double r, RelayMode mode)
{
    if (mode == RelayMode::decode_forward) {
        return std::min(s, r);
    }
    if (std::isinf(s) && std::isinf(r)) {
        return std::numeric_limits<double>::infinity();
    }
    // s*r/(s+r+1), arranged to stay finite when one hop is unbounded
    const double hi = std::max(s, r);
    const double lo = std::min(s, r);
    return lo / (1.0 + (lo + 1.0) / hi);
}

double effective_snr_db(double snr_db, double relay_snr_db, RelayMode mode)
{
    return linear_to_db(effective_snr_linear(db_to_linear(snr_db), db_to_linear(relay_snr_db), mode));
}

bool decode_path(SignalQuality snr, int payload_bits, RelayMode mode, SignalQuality relay_snr,
                 const BlerCurve& curve, RngStream& rng)
{
    const double eff = effective_snr_db(snr.snr_db, relay_snr.snr_db, mode);
    const double p_fail = curve.bler(eff, payload_bits);
    return rng.uniform() >= p_fail;
}

DecodeOutcome combine(std::span<const bool> paths)
{
    DecodeOutcome out;
    out.path_success.assign(paths.begin(), paths.end());
    for (bool ok : paths) {
        out.combined = out.combined || ok;
    }
    return out;
}

DecodeOutcome combine(const std::vector<bool>& paths)
{
    DecodeOutcome out;
    out.path_success = paths;
    for (bool ok : paths) {
        out.combined = out.combined || ok;
    }
    return out;
}

ReplicaBandit::ReplicaBandit(std::size_t r_max, double epsilon, double cost)
    : epsilon_(epsilon)
    , cost_(cost)
    , estimates_(r_max, 0.0)
    , counts_(r_max, 0)
{
    if (r_max == 0) {
        throw std::invalid_argument("bandit needs at least one arm");
    }
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw std::invalid_argument("bandit epsilon must be in [0, 1]");
    }
    if (!std::isfinite(cost)) {
        throw std::invalid_argument("bandit cost must be finite");
    }
}

void ReplicaBandit::update(std::size_t replicas, bool success)
{
    const std::size_t i = replicas - 1;
    const double reward = (success ? 1.0 : 0.0) - cost_ * static_cast<double>(replicas);
    ++counts_.at(i);
    estimates_[i] += (reward - estimates_[i]) / static_cast<double>(counts_[i]);
}

std::size_t ReplicaBandit::select(RngStream& rng) const
{
    // both draws are always taken so the stream position does not depend on the branch
    const double u = rng.uniform();
    const std::size_t explore_arm = static_cast<std::size_t>(rng.uniform_index(estimates_.size()));
    if (u < epsilon_) {
        return explore_arm + 1;
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < estimates_.size(); ++i) {
        if (estimates_[i] > estimates_[best]) {
            best = i;
        }
    }
    return best + 1;
}

std::size_t bandit_select_and_update(ReplicaBandit& state, const std::optional<DecodeOutcome>& last_outcome,
                                     std::optional<std::size_t> last_replicas, RngStream& rng)
{
    if (last_outcome && last_replicas) {
        state.update(*last_replicas, last_outcome->combined);
    }
    return state.select(rng);
}

} // namespace sdvec
