#pragma once

#include "sdvec/types.hpp"

#include <cstdint>
#include <set>
#include <span>
#include <vector>

namespace sdvec {

struct Service {
    ServiceId id;
    double size = 1.0;        // storage units
    double cycles = 1e6;      // CPU cycles per task
    double popularity = 1.0;  // prior weight
};

struct CacheState {
    AnId an;
    std::set<ServiceId> cached;
    double capacity = 0.0;

    bool has(ServiceId s) const { return cached.contains(s); }
};

struct Task {
    ServiceId service;
    VehicleId source;
    double input_bits = 0.0;
    std::uint64_t arrival_slot = 0;
};

/// Virtual deficit queue enforcing a long-run per-slot energy budget.
struct EnergyLedger {
    AnId an;
    double deficit = 0.0; // joules
    double budget = 1.0;  // joules per slot
    double tradeoff = 1.0; // V
};

struct EdgeRates {
    double cpu_rate = 1e9;        // local cycles per second
    double cloud_rate = 1e10;     // cloud cycles per second
    double backhaul_rtt = 0.01;   // seconds, includes the result return trip
    double backhaul_rate = 1e8;   // bits per second
    double joules_per_cycle = 1e-9;
    double joules_per_bit = 1e-8;
};

/// Density-greedy cache fill (popularity per storage unit, id tiebreak),
/// compared against the single most popular service that fits; the better
/// of the two is returned. `weights` holds one popularity value per catalog
/// entry.
std::set<ServiceId> decide_cache(std::span<const Service> catalog, std::span<const double> weights, double capacity);

/// Sum of weights of a cached set.
double cache_hit_weight(std::span<const Service> catalog, std::span<const double> weights,
                        const std::set<ServiceId>& cached);

enum class OffloadTarget { local, cloud };

struct OffloadDecision {
    OffloadTarget target = OffloadTarget::cloud;
    bool forced = false; // uncached service
    double latency = 0.0;
    double energy = 0.0;
    double local_score = 0.0;
    double cloud_score = 0.0;
};

double local_latency(const Service& service, double queued_cycles, const EdgeRates& rates);
double cloud_latency(const Service& service, const Task& task, const EdgeRates& rates);
double local_energy(const Service& service, const EdgeRates& rates);
double cloud_energy(const Task& task, const EdgeRates& rates);

/// Drift-plus-penalty choice between local execution and cloud offload:
/// score = V * delay + Q_e * energy, local on ties. Uncached services always
/// go to the cloud. Does not touch the ledger; see settle_slot.
OffloadDecision decide_offload(const Task& task, const Service& service, const CacheState& cache,
                               const EnergyLedger& ledger, double queued_cycles, const EdgeRates& rates);

enum class OffloadPolicy { drift_plus_penalty, always_local, always_cloud };

/// Same as decide_offload for drift_plus_penalty; the baselines ignore the
/// ledger (always_local still sends uncached services to the cloud).
OffloadDecision decide_offload(OffloadPolicy policy, const Task& task, const Service& service,
                               const CacheState& cache, const EnergyLedger& ledger, double queued_cycles,
                               const EdgeRates& rates);

/// Q_e <- max(0, Q_e + energy_spent - budget).
void settle_slot(EnergyLedger& ledger, double energy_spent);

} // namespace sdvec
