#include "sdvec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sdvec {

std::optional<double> percentile(std::vector<double> values, double q)
{
    if (!(q > 0.0 && q <= 1.0)) {
        throw std::invalid_argument("percentile: q must be in (0, 1]");
    }
    if (values.empty()) {
        return std::nullopt;
    }
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    return values[std::max<std::size_t>(rank, 1) - 1];
}

UplinkAggregates aggregate_uplink(const MetricsReport& report)
{
    UplinkAggregates agg;
    std::vector<double> latencies;
    std::uint64_t hits = 0;
    for (const auto& p : report.packets) {
        ++agg.emitted;
        if (!p.delivered) {
            ++agg.lost;
            continue;
        }
        ++agg.delivered;
        latencies.push_back(static_cast<double>(p.latency_slots));
        // tolerance covers slot_duration values that are not exact binary fractions
        if (static_cast<double>(p.latency_slots) * report.slot_duration <= report.deadline * (1.0 + 1e-9)) {
            ++hits;
        }
    }
    if (agg.emitted > 0) {
        agg.success_rate = static_cast<double>(agg.delivered) / static_cast<double>(agg.emitted);
        agg.deadline_hit_fraction = static_cast<double>(hits) / static_cast<double>(agg.emitted);
    }
    agg.latency_p50_slots = percentile(latencies, 0.5);
    agg.latency_p99_slots = percentile(std::move(latencies), 0.99);
    return agg;
}

double mean_energy_per_an_slot(const MetricsReport& report)
{
    if (report.energy_per_an.size() == 0) {
        return 0.0;
    }
    return report.energy_per_an.mean();
}

} // namespace sdvec
