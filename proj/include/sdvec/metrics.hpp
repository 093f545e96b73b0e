#pragma once

#include "sdvec/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sdvec {

struct PacketRecord {
    VehicleId vehicle;
    std::uint64_t emit_slot = 0;
    bool delivered = false;
    std::uint64_t latency_slots = 0; // meaningful only when delivered
    std::uint32_t replicas = 0;
    std::uint32_t paths = 0;
};

/// One row of decisions.csv: offload, cache and placement decisions.
struct DecisionRecord {
    std::uint64_t slot = 0;
    std::string kind;
    std::int64_t an = -1;
    std::int64_t subject = -1;
    std::string decision;
    double value = 0.0;
};

struct MacCounters {
    std::uint64_t collision_ctus = 0;
    std::uint64_t mud_resolved_paths = 0;
    std::uint64_t unresolved_paths = 0;
    std::uint64_t unserved = 0;
    std::uint64_t replicas_total = 0;
};

struct DownlinkCounters {
    std::uint64_t attempted = 0;
    std::uint64_t delivered = 0;
    std::uint64_t no_slice = 0;
    double power_w_total = 0.0;
};

struct PredictorCounters {
    bool enabled = false;
    std::uint64_t scored_bits = 0;
    std::uint64_t predicted_hits = 0;
    std::uint64_t persistence_hits = 0;
    std::uint64_t zero_likelihood_fallbacks = 0;
};

struct SliceCounters {
    std::uint64_t assignments = 0;
    std::uint64_t overlaps = 0;
    std::uint64_t unsatisfied_ctus = 0;
};

struct ControlCounters {
    std::uint64_t invocations = 0;
    std::uint64_t feedback_tightenings = 0;
    std::uint64_t infeasible = 0;
    std::size_t controllers_last = 0;
    double mean_latency_last = 0.0;
    std::uint64_t sync_rounds_last = 0;
    std::vector<std::uint32_t> controller_set_last;
};

struct EdgeCounters {
    std::uint64_t tasks = 0;
    std::uint64_t local = 0;
    std::uint64_t cloud = 0;
    std::uint64_t forced_cloud = 0;
    double latency_total_s = 0.0;
    double energy_total_j = 0.0;
    double energy_budget_j = 0.0; // per AN per slot
    std::vector<double> final_deficit;
};

struct CipherCounters {
    std::uint64_t sessions = 0;
    std::uint64_t checks = 0;
    std::uint64_t resyncs = 0;
    std::uint64_t roundtrip_ok = 0;
    std::uint64_t roundtrip_failures = 0;
    std::uint64_t recovered = 0;
    std::uint64_t compromised_sessions = 0;
};

struct MetricsReport {
    std::uint64_t seed = 0;
    std::uint64_t horizon = 0;
    double slot_duration = 1e-3;
    double deadline = 1e-3;

    std::vector<PacketRecord> packets;
    Eigen::MatrixXd energy_per_an; // horizon x AN count, joules
    std::vector<DecisionRecord> decisions;

    MacCounters mac;
    DownlinkCounters downlink;
    PredictorCounters predictor;
    SliceCounters slicing;
    ControlCounters control;
    EdgeCounters edge;
    CipherCounters cipher;
};

struct UplinkAggregates {
    std::uint64_t emitted = 0;
    std::uint64_t delivered = 0;
    std::uint64_t lost = 0;
    double success_rate = 0.0;
    std::optional<double> latency_p50_slots;
    std::optional<double> latency_p99_slots;
    double deadline_hit_fraction = 0.0;
};

/// Nearest-rank percentile, q in (0, 1]. Empty input yields nullopt.
std::optional<double> percentile(std::vector<double> values, double q);

UplinkAggregates aggregate_uplink(const MetricsReport& report);

/// Mean joules per AN per slot over the whole run.
double mean_energy_per_an_slot(const MetricsReport& report);

} // namespace sdvec
