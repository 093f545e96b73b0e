#include "sdvec/edge_compute.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace sdvec {

std::set<ServiceId> decide_cache(std::span<const Service> catalog, std::span<const double> weights, double capacity)
{
    if (weights.size() != catalog.size()) {
        throw std::invalid_argument("decide_cache: one weight per service required");
    }
    std::vector<std::size_t> order(catalog.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double da = weights[a] / catalog[a].size;
        const double db = weights[b] / catalog[b].size;
        if (da != db) {
            return da > db;
        }
        return catalog[a].id < catalog[b].id;
    });

    std::set<ServiceId> greedy;
    double used = 0.0;
    double greedy_weight = 0.0;
    for (std::size_t i : order) {
        if (used + catalog[i].size <= capacity * (1.0 + 1e-12)) {
            greedy.insert(catalog[i].id);
            used += catalog[i].size;
            greedy_weight += weights[i];
        }
    }

    std::size_t best_single = catalog.size();
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        if (catalog[i].size > capacity * (1.0 + 1e-12)) {
            continue;
        }
        if (best_single == catalog.size() || weights[i] > weights[best_single]
            || (weights[i] == weights[best_single] && catalog[i].id < catalog[best_single].id)) {
            best_single = i;
        }
    }
    if (best_single < catalog.size() && weights[best_single] > greedy_weight) {
        return {catalog[best_single].id};
    }
    return greedy;
}

double cache_hit_weight(std::span<const Service> catalog, std::span<const double> weights,
                        const std::set<ServiceId>& cached)
{
    double w = 0.0;
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        if (cached.contains(catalog[i].id)) {
            w += weights[i];
        }
    }
    return w;
}

double local_latency(const Service& service, double queued_cycles, const EdgeRates& rates)
{
    return (queued_cycles + service.cycles) / rates.cpu_rate;
}

double cloud_latency(const Service& service, const Task& task, const EdgeRates& rates)
{
    return rates.backhaul_rtt + service.cycles / rates.cloud_rate + task.input_bits / rates.backhaul_rate;
}

double local_energy(const Service& service, const EdgeRates& rates)
{
    return rates.joules_per_cycle * service.cycles;
}

double cloud_energy(const Task& task, const EdgeRates& rates)
{
    return rates.joules_per_bit * task.input_bits;
}

OffloadDecision decide_offload(const Task& task, const Service& service, const CacheState& cache,
                               const EnergyLedger& ledger, double queued_cycles, const EdgeRates& rates)
{
    if (task.service != service.id) {
        throw std::invalid_argument("decide_offload: task/service mismatch");
    }
    OffloadDecision d;
    const double d_cloud = cloud_latency(service, task, rates);
    const double e_cloud = cloud_energy(task, rates);
    d.cloud_score = ledger.tradeoff * d_cloud + ledger.deficit * e_cloud;
    if (!cache.has(service.id)) {
        d.target = OffloadTarget::cloud;
        d.forced = true;
        d.latency = d_cloud;
        d.energy = e_cloud;
        return d;
    }
    const double d_local = local_latency(service, queued_cycles, rates);
    const double e_local = local_energy(service, rates);
    d.local_score = ledger.tradeoff * d_local + ledger.deficit * e_local;
    if (d.local_score <= d.cloud_score) {
        d.target = OffloadTarget::local;
        d.latency = d_local;
        d.energy = e_local;
    } else {
        d.target = OffloadTarget::cloud;
        d.latency = d_cloud;
        d.energy = e_cloud;
    }
    return d;
}

OffloadDecision decide_offload(OffloadPolicy policy, const Task& task, const Service& service,
                               const CacheState& cache, const EnergyLedger& ledger, double queued_cycles,
                               const EdgeRates& rates)
{
    if (policy == OffloadPolicy::drift_plus_penalty) {
        return decide_offload(task, service, cache, ledger, queued_cycles, rates);
    }
    OffloadDecision d;
    const bool cached = cache.has(service.id);
    if (policy == OffloadPolicy::always_local && cached) {
        d.target = OffloadTarget::local;
        d.latency = local_latency(service, queued_cycles, rates);
        d.energy = local_energy(service, rates);
    } else {
        d.target = OffloadTarget::cloud;
        d.forced = !cached;
        d.latency = cloud_latency(service, task, rates);
        d.energy = cloud_energy(task, rates);
    }
    return d;
}

void settle_slot(EnergyLedger& ledger, double energy_spent)
{
    if (energy_spent < 0.0) {
        throw std::invalid_argument("settle_slot: negative energy");
    }
    ledger.deficit = std::max(0.0, ledger.deficit + energy_spent - ledger.budget);
}

} // namespace sdvec
