#pragma once

#include "sdvec/channel.hpp"
#include "sdvec/cipher.hpp"
#include "sdvec/cluster.hpp"
#include "sdvec/control_plane.hpp"
#include "sdvec/edge_compute.hpp"
#include "sdvec/mac.hpp"
#include "sdvec/mobility.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sdvec {

inline constexpr int kScenarioSchemaVersion = 1;

struct VelocityChange {
    std::uint64_t slot = 0;
    std::size_t velocity_class = 0;
};

struct VehicleSpec {
    std::size_t cell = 0;
    std::size_t velocity_class = 0;
    std::vector<VelocityChange> velocity_schedule;
};

struct ApSpec {
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    std::size_t an = 0;
};

struct AnSpec {
    double controller_capacity = 100.0; // control messages per slot
    double cpu_rate = 1e9;              // cycles per second
    double storage_capacity = 10.0;
    double power_budget_w = 2.0;        // downlink power shared by slices
};

struct RoadSpec {
    RoadGraph graph;
    // velocity class -> per-cell probabilities aligned with graph.adjacency[cell]
    std::vector<std::vector<std::vector<double>>> velocity_classes;
};

struct BanditSpec {
    bool enabled = false;
    double epsilon = 0.1;
    double cost = 0.05;
    std::size_t r_max = 3;
};

struct MacSpec {
    CtuPool pool{4, 2, 2};
    CtuPolicy policy = CtuPolicy::random;
    std::map<std::size_t, std::vector<CtuId>> preconfigured; // vehicle index -> CTUs
    std::size_t replicas = 2;
    std::size_t k_max = 1;
    RelayMode relay = RelayMode::amplify_forward;
    double relay_snr_db = 30.0;
    BlerCurve bler;
    int payload_bits = 128;
    double packet_prob = 1.0;
    BanditSpec bandit;
};

struct ClusterSpec {
    std::size_t k_cluster = 2;
    std::size_t ctu_demand = 1;
    std::vector<double> power_levels_w = {0.1, 1.0};
    bool eco_routing = true;
    double eta = 0.1;
    double gamma = 0.0;
    double epsilon = 0.1;
    EcoRewardWeights reward;
    EcoStateSpace states;
};

struct PredictorSpec {
    bool enabled = true;
    double threshold = 0.5;
    bool derived = true;                     // observation model from channel parameters
    std::vector<std::vector<double>> matrix; // cells x APs, when not derived
    double obs_floor = 1e-3;
    bool downlink_uses_current_slot = false;
};

struct ControlSpec {
    bool enabled = true;
    std::vector<ControlEdge> edges;
    double vehicle_demand = 1.0;
    double latency_bound = 5e-3;
    double target_latency = 2e-3;
    double theta = 0.8;
    std::size_t max_iters = 5;
    double kappa = 1e-4;
    std::size_t period = 10;
    std::size_t max_paths = 256;
};

struct EdgeSpec {
    bool enabled = true;
    std::vector<Service> services;
    double task_prob = 0.5;
    double input_bits = 1e5;
    EdgeRates rates;
    double energy_budget = 0.01; // joules per AN per slot
    double tradeoff = 1.0;       // V
    std::size_t recache_period = 100;
    std::size_t stats_window = 100;
    OffloadPolicy policy = OffloadPolicy::drift_plus_penalty;
};

struct CipherSpec {
    bool enabled = true;
    std::size_t window = 4;
    std::size_t max_resync = 3;
    std::size_t message_bits = 256;
    double association_loss_prob = 0.0;
    std::string prf = kPrfName;
    std::string digest = kDigestName;
};

struct ScenarioConfig {
    int schema_version = kScenarioSchemaVersion;
    std::uint64_t seed = 1;
    std::uint64_t horizon = 100;
    double slot_duration = 1e-3;
    double deadline = 1e-3;

    RoadSpec road;
    std::vector<ApSpec> aps;
    std::vector<AnSpec> ans;
    std::vector<VehicleSpec> vehicles;
    ChannelParams channel;
    double candidate_threshold_db = 0.0;

    MacSpec mac;
    ClusterSpec cluster;
    PredictorSpec predictor;
    ControlSpec control;
    EdgeSpec edge;
    CipherSpec cipher;
};

struct FieldError {
    std::string path;
    std::string message;
};

enum class ValidationStatus { ok, unreadable, parse_error, invalid };

struct ValidationResult {
    ValidationStatus status = ValidationStatus::ok;
    std::vector<FieldError> errors;
    std::optional<ScenarioConfig> config;

    bool ok() const noexcept { return status == ValidationStatus::ok; }
};

/// Builds a config from a JSON tree, collecting type/shape errors by path.
/// Missing optional keys keep their defaults.
ScenarioConfig scenario_from_json(const nlohmann::json& doc, std::vector<FieldError>& errors);

/// Every invariant of the config; empty when valid.
std::vector<FieldError> validate(const ScenarioConfig& config);

ValidationResult validate_json(const nlohmann::json& doc);
ValidationResult validate_file(const std::filesystem::path& path);

/// Applies a dotted-path override (e.g. "mac.bandit.enabled") to a JSON tree;
/// the value text is parsed as JSON, falling back to a plain string.
void apply_override(nlohmann::json& doc, const std::string& dotted_path, const std::string& value_text);

/// Throws std::invalid_argument listing every field error.
ScenarioConfig load_scenario(const std::filesystem::path& path);

MarkovJumpModel<double> build_mobility_model(const ScenarioConfig& config);
ControlTopology build_control_topology(const ScenarioConfig& config);

} // namespace sdvec
