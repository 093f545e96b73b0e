#include "sdvec/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace sdvec {

using nlohmann::json;

namespace {

std::string join(const std::string& base, const std::string& key)
{
    return base.empty() ? key : base + "." + key;
}

std::string at_index(const std::string& base, std::size_t i)
{
    return base + "[" + std::to_string(i) + "]";
}

/// Reads typed fields from a JSON object, recording mismatches by path.
class Reader {
public:
    explicit Reader(std::vector<FieldError>& errors) : errors_(errors) {}

    template <typename T>
    void get(const json& obj, const char* key, T& out, const std::string& path)
    {
        if (!obj.is_object() || !obj.contains(key)) {
            return;
        }
        try {
            out = obj.at(key).get<T>();
        } catch (const json::exception&) {
            fail(join(path, key), std::string("expected ") + type_name<T>());
        }
    }

    const json* object(const json& obj, const char* key, const std::string& path)
    {
        if (!obj.is_object() || !obj.contains(key)) {
            return nullptr;
        }
        if (!obj.at(key).is_object()) {
            fail(join(path, key), "expected object");
            return nullptr;
        }
        return &obj.at(key);
    }

    const json* array(const json& obj, const char* key, const std::string& path)
    {
        if (!obj.is_object() || !obj.contains(key)) {
            return nullptr;
        }
        if (!obj.at(key).is_array()) {
            fail(join(path, key), "expected array");
            return nullptr;
        }
        return &obj.at(key);
    }

    void fail(std::string path, std::string message) { errors_.push_back({std::move(path), std::move(message)}); }

private:
    template <typename T>
    static const char* type_name()
    {
        if constexpr (std::is_same_v<T, bool>) {
            return "boolean";
        } else if constexpr (std::is_integral_v<T>) {
            return "non-negative integer";
        } else if constexpr (std::is_floating_point_v<T>) {
            return "number";
        } else if constexpr (std::is_same_v<T, std::string>) {
            return "string";
        } else {
            return "array";
        }
    }

    std::vector<FieldError>& errors_;
};

bool read_point(const json& j, Eigen::Vector2d& out)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        return false;
    }
    out = {j[0].get<double>(), j[1].get<double>()};
    return true;
}

void read_road(Reader& r, const json& doc, RoadSpec& road)
{
    const json* o = r.object(doc, "road", "");
    if (!o) {
        return;
    }
    if (const json* cells = r.array(*o, "cells", "road")) {
        for (std::size_t i = 0; i < cells->size(); ++i) {
            Eigen::Vector2d p;
            if (!read_point((*cells)[i], p)) {
                r.fail(at_index("road.cells", i), "expected [x, y]");
            }
            road.graph.centers.push_back(p);
        }
    }
    r.get(*o, "adjacency", road.graph.adjacency, "road");
    r.get(*o, "velocity_classes", road.velocity_classes, "road");
}

void read_mac(Reader& r, const json& doc, MacSpec& mac)
{
    const json* o = r.object(doc, "mac", "");
    if (!o) {
        return;
    }
    if (const json* pool = r.object(*o, "ctu_pool", "mac")) {
        r.get(*pool, "slots_per_frame", mac.pool.slots_per_frame, "mac.ctu_pool");
        r.get(*pool, "freq_blocks", mac.pool.freq_blocks, "mac.ctu_pool");
        r.get(*pool, "sequences", mac.pool.sequences, "mac.ctu_pool");
    }
    std::string policy = mac.policy == CtuPolicy::random ? "random" : "preconfigured";
    r.get(*o, "policy", policy, "mac");
    if (policy == "random") {
        mac.policy = CtuPolicy::random;
    } else if (policy == "preconfigured") {
        mac.policy = CtuPolicy::preconfigured;
    } else {
        r.fail("mac.policy", "expected \"random\" or \"preconfigured\"");
    }
    if (const json* pre = r.object(*o, "preconfigured", "mac")) {
        for (const auto& [key, val] : pre->items()) {
            const std::string path = "mac.preconfigured." + key;
            std::size_t vehicle = 0;
            try {
                std::size_t used = 0;
                vehicle = std::stoul(key, &used);
                if (used != key.size()) {
                    throw std::invalid_argument(key);
                }
            } catch (const std::exception&) {
                r.fail(path, "key must be a vehicle index");
                continue;
            }
            std::vector<std::uint32_t> ids;
            try {
                ids = val.get<std::vector<std::uint32_t>>();
            } catch (const json::exception&) {
                r.fail(path, "expected array of CTU ids");
                continue;
            }
            auto& list = mac.preconfigured[vehicle];
            for (auto id : ids) {
                list.push_back(CtuId{id});
            }
        }
    }
    r.get(*o, "replicas", mac.replicas, "mac");
    r.get(*o, "k_max", mac.k_max, "mac");
    std::string relay = mac.relay == RelayMode::amplify_forward ? "AF" : "DF";
    r.get(*o, "relay", relay, "mac");
    if (relay == "AF") {
        mac.relay = RelayMode::amplify_forward;
    } else if (relay == "DF") {
        mac.relay = RelayMode::decode_forward;
    } else {
        r.fail("mac.relay", "expected \"AF\" or \"DF\"");
    }
    r.get(*o, "relay_snr_db", mac.relay_snr_db, "mac");
    if (const json* bler = r.object(*o, "bler", "mac")) {
        r.get(*bler, "alpha", mac.bler.alpha, "mac.bler");
        if (const json* beta = r.object(*bler, "beta_db", "mac.bler")) {
            mac.bler.beta_db.clear();
            for (const auto& [key, val] : beta->items()) {
                try {
                    mac.bler.beta_db[std::stoi(key)] = val.get<double>();
                } catch (const std::exception&) {
                    r.fail("mac.bler.beta_db." + key, "expected payload bits -> number");
                }
            }
        }
    }
    r.get(*o, "payload_bits", mac.payload_bits, "mac");
    r.get(*o, "packet_prob", mac.packet_prob, "mac");
    if (const json* b = r.object(*o, "bandit", "mac")) {
        r.get(*b, "enabled", mac.bandit.enabled, "mac.bandit");
        r.get(*b, "epsilon", mac.bandit.epsilon, "mac.bandit");
        r.get(*b, "cost", mac.bandit.cost, "mac.bandit");
        r.get(*b, "r_max", mac.bandit.r_max, "mac.bandit");
    }
}

void read_cluster(Reader& r, const json& doc, ClusterSpec& c)
{
    const json* o = r.object(doc, "cluster", "");
    if (!o) {
        return;
    }
    r.get(*o, "k_cluster", c.k_cluster, "cluster");
    r.get(*o, "ctu_demand", c.ctu_demand, "cluster");
    r.get(*o, "power_levels_w", c.power_levels_w, "cluster");
    r.get(*o, "eco_routing", c.eco_routing, "cluster");
    if (const json* q = r.object(*o, "q", "cluster")) {
        r.get(*q, "eta", c.eta, "cluster.q");
        r.get(*q, "gamma", c.gamma, "cluster.q");
        r.get(*q, "epsilon", c.epsilon, "cluster.q");
    }
    if (const json* w = r.object(*o, "reward", "cluster")) {
        r.get(*w, "delivered", c.reward.delivered, "cluster.reward");
        r.get(*w, "power", c.reward.power, "cluster.reward");
    }
    if (const json* s = r.object(*o, "states", "cluster")) {
        r.get(*s, "load_buckets", c.states.load_buckets, "cluster.states");
        r.get(*s, "snr_buckets", c.states.snr_buckets, "cluster.states");
        r.get(*s, "snr_floor_db", c.states.snr_floor_db, "cluster.states");
        r.get(*s, "snr_bucket_width_db", c.states.snr_bucket_width_db, "cluster.states");
    }
}

void read_predictor(Reader& r, const json& doc, PredictorSpec& p)
{
    const json* o = r.object(doc, "predictor", "");
    if (!o) {
        return;
    }
    r.get(*o, "enabled", p.enabled, "predictor");
    r.get(*o, "threshold", p.threshold, "predictor");
    std::string model = p.derived ? "derived" : "matrix";
    r.get(*o, "observation_model", model, "predictor");
    if (model == "derived") {
        p.derived = true;
    } else if (model == "matrix") {
        p.derived = false;
    } else {
        r.fail("predictor.observation_model", "expected \"derived\" or \"matrix\"");
    }
    r.get(*o, "matrix", p.matrix, "predictor");
    r.get(*o, "obs_floor", p.obs_floor, "predictor");
    r.get(*o, "downlink_uses_current_slot", p.downlink_uses_current_slot, "predictor");
}

void read_control(Reader& r, const json& doc, ControlSpec& c)
{
    const json* o = r.object(doc, "control", "");
    if (!o) {
        return;
    }
    r.get(*o, "enabled", c.enabled, "control");
    if (const json* edges = r.array(*o, "edges", "control")) {
        for (std::size_t i = 0; i < edges->size(); ++i) {
            const json& e = (*edges)[i];
            const std::string path = at_index("control.edges", i);
            std::size_t a = 0;
            std::size_t b = 0;
            ControlEdge edge;
            r.get(e, "a", a, path);
            r.get(e, "b", b, path);
            r.get(e, "latency", edge.latency, path);
            r.get(e, "capacity", edge.capacity, path);
            edge.a = AnId(a);
            edge.b = AnId(b);
            c.edges.push_back(edge);
        }
    }
    r.get(*o, "vehicle_demand", c.vehicle_demand, "control");
    r.get(*o, "latency_bound", c.latency_bound, "control");
    r.get(*o, "target_latency", c.target_latency, "control");
    r.get(*o, "theta", c.theta, "control");
    r.get(*o, "max_iters", c.max_iters, "control");
    r.get(*o, "kappa", c.kappa, "control");
    r.get(*o, "period", c.period, "control");
    r.get(*o, "max_paths", c.max_paths, "control");
}

void read_edge(Reader& r, const json& doc, EdgeSpec& e)
{
    const json* o = r.object(doc, "edge", "");
    if (!o) {
        return;
    }
    r.get(*o, "enabled", e.enabled, "edge");
    if (const json* services = r.array(*o, "services", "edge")) {
        for (std::size_t i = 0; i < services->size(); ++i) {
            Service s;
            s.id = ServiceId(i);
            const std::string path = at_index("edge.services", i);
            r.get((*services)[i], "size", s.size, path);
            r.get((*services)[i], "cycles", s.cycles, path);
            r.get((*services)[i], "popularity", s.popularity, path);
            e.services.push_back(s);
        }
    }
    r.get(*o, "task_prob", e.task_prob, "edge");
    r.get(*o, "input_bits", e.input_bits, "edge");
    r.get(*o, "cloud_rate", e.rates.cloud_rate, "edge");
    r.get(*o, "backhaul_rtt", e.rates.backhaul_rtt, "edge");
    r.get(*o, "backhaul_rate", e.rates.backhaul_rate, "edge");
    r.get(*o, "joules_per_cycle", e.rates.joules_per_cycle, "edge");
    r.get(*o, "joules_per_bit", e.rates.joules_per_bit, "edge");
    r.get(*o, "energy_budget", e.energy_budget, "edge");
    r.get(*o, "V", e.tradeoff, "edge");
    r.get(*o, "recache_period", e.recache_period, "edge");
    r.get(*o, "stats_window", e.stats_window, "edge");
    std::string policy = "dpp";
    r.get(*o, "policy", policy, "edge");
    if (policy == "dpp") {
        e.policy = OffloadPolicy::drift_plus_penalty;
    } else if (policy == "local") {
        e.policy = OffloadPolicy::always_local;
    } else if (policy == "cloud") {
        e.policy = OffloadPolicy::always_cloud;
    } else {
        r.fail("edge.policy", "expected \"dpp\", \"local\" or \"cloud\"");
    }
}

void read_cipher(Reader& r, const json& doc, CipherSpec& c)
{
    const json* o = r.object(doc, "cipher", "");
    if (!o) {
        return;
    }
    r.get(*o, "enabled", c.enabled, "cipher");
    r.get(*o, "window", c.window, "cipher");
    r.get(*o, "max_resync", c.max_resync, "cipher");
    r.get(*o, "message_bits", c.message_bits, "cipher");
    r.get(*o, "association_loss_prob", c.association_loss_prob, "cipher");
    r.get(*o, "prf", c.prf, "cipher");
    r.get(*o, "digest", c.digest, "cipher");
}

bool is_probability(double p)
{
    return p >= 0.0 && p <= 1.0;
}

} // namespace

ScenarioConfig scenario_from_json(const json& doc, std::vector<FieldError>& errors)
{
    ScenarioConfig cfg;
    Reader r(errors);
    if (!doc.is_object()) {
        r.fail("", "scenario must be a JSON object");
        return cfg;
    }
    r.get(doc, "schema_version", cfg.schema_version, "");
    r.get(doc, "seed", cfg.seed, "");
    r.get(doc, "horizon", cfg.horizon, "");
    r.get(doc, "slot_duration", cfg.slot_duration, "");
    r.get(doc, "deadline", cfg.deadline, "");
    read_road(r, doc, cfg.road);

    if (const json* aps = r.array(doc, "aps", "")) {
        for (std::size_t i = 0; i < aps->size(); ++i) {
            ApSpec ap;
            const std::string path = at_index("aps", i);
            const json& j = (*aps)[i];
            if (!j.is_object() || !j.contains("position") || !read_point(j.at("position"), ap.position)) {
                r.fail(path + ".position", "expected [x, y]");
            }
            r.get(j, "an", ap.an, path);
            cfg.aps.push_back(ap);
        }
    }
    if (const json* ans = r.array(doc, "ans", "")) {
        for (std::size_t i = 0; i < ans->size(); ++i) {
            AnSpec an;
            const std::string path = at_index("ans", i);
            r.get((*ans)[i], "controller_capacity", an.controller_capacity, path);
            r.get((*ans)[i], "cpu_rate", an.cpu_rate, path);
            r.get((*ans)[i], "storage_capacity", an.storage_capacity, path);
            r.get((*ans)[i], "power_budget_w", an.power_budget_w, path);
            cfg.ans.push_back(an);
        }
    }
    if (const json* vs = r.array(doc, "vehicles", "")) {
        for (std::size_t i = 0; i < vs->size(); ++i) {
            VehicleSpec v;
            const std::string path = at_index("vehicles", i);
            r.get((*vs)[i], "cell", v.cell, path);
            r.get((*vs)[i], "velocity_class", v.velocity_class, path);
            if (const json* sched = r.array((*vs)[i], "velocity_schedule", path)) {
                for (std::size_t k = 0; k < sched->size(); ++k) {
                    VelocityChange ch;
                    const std::string sp = at_index(path + ".velocity_schedule", k);
                    r.get((*sched)[k], "slot", ch.slot, sp);
                    r.get((*sched)[k], "class", ch.velocity_class, sp);
                    v.velocity_schedule.push_back(ch);
                }
            }
            cfg.vehicles.push_back(std::move(v));
        }
    }
    if (const json* ch = r.object(doc, "channel", "")) {
        r.get(*ch, "tx_power_dbm", cfg.channel.tx_power_dbm, "channel");
        r.get(*ch, "pl0_db", cfg.channel.pl0_db, "channel");
        r.get(*ch, "exponent", cfg.channel.exponent, "channel");
        r.get(*ch, "d0", cfg.channel.d0, "channel");
        r.get(*ch, "noise_dbm", cfg.channel.noise_dbm, "channel");
        r.get(*ch, "candidate_threshold_db", cfg.candidate_threshold_db, "channel");
    }
    read_mac(r, doc, cfg.mac);
    read_cluster(r, doc, cfg.cluster);
    read_predictor(r, doc, cfg.predictor);
    read_control(r, doc, cfg.control);
    read_edge(r, doc, cfg.edge);
    read_cipher(r, doc, cfg.cipher);
    return cfg;
}

std::vector<FieldError> validate(const ScenarioConfig& cfg)
{
    std::vector<FieldError> errs;
    auto fail = [&](std::string path, std::string msg) { errs.push_back({std::move(path), std::move(msg)}); };

    if (cfg.schema_version != kScenarioSchemaVersion) {
        fail("schema_version", "unsupported version " + std::to_string(cfg.schema_version));
    }
    if (cfg.horizon < 1) {
        fail("horizon", "must be >= 1");
    }
    if (!(cfg.slot_duration > 0.0) || !std::isfinite(cfg.slot_duration)) {
        fail("slot_duration", "must be > 0");
    }
    if (!(cfg.deadline > 0.0)) {
        fail("deadline", "must be > 0");
    }

    // road graph and transition rows
    const auto& g = cfg.road.graph;
    const std::size_t cells = g.centers.size();
    if (cells == 0) {
        fail("road.cells", "at least one cell required");
    }
    if (g.adjacency.size() != cells) {
        fail("road.adjacency", "must have one entry per cell (" + std::to_string(cells) + ")");
    } else {
        for (std::size_t c = 0; c < cells; ++c) {
            if (g.adjacency[c].empty()) {
                fail(at_index("road.adjacency", c), "cell needs at least one outgoing edge");
            }
            for (std::size_t to : g.adjacency[c]) {
                if (to >= cells) {
                    fail(at_index("road.adjacency", c), "references missing cell " + std::to_string(to));
                }
            }
        }
    }
    if (cfg.road.velocity_classes.empty()) {
        fail("road.velocity_classes", "at least one velocity class required");
    }
    for (std::size_t k = 0; k < cfg.road.velocity_classes.size(); ++k) {
        const auto& rows = cfg.road.velocity_classes[k];
        const std::string kp = at_index("road.velocity_classes", k);
        if (rows.size() != cells) {
            fail(kp, "must have one row per cell (" + std::to_string(cells) + ")");
            continue;
        }
        for (std::size_t c = 0; c < cells; ++c) {
            const std::string rp = at_index(kp, c);
            if (c < g.adjacency.size() && rows[c].size() != g.adjacency[c].size()) {
                fail(rp, "row length must match road.adjacency[" + std::to_string(c) + "]");
                continue;
            }
            double sum = 0.0;
            bool bad = false;
            for (double p : rows[c]) {
                bad = bad || !std::isfinite(p) || p < 0.0;
                sum += p;
            }
            if (bad) {
                fail(rp, "probabilities must be finite and non-negative");
            } else if (std::abs(sum - 1.0) > MarkovJumpModel<double>::kRowTolerance) {
                std::ostringstream os;
                os << "transition row sums to " << sum << ", expected 1";
                fail(rp, os.str());
            }
        }
    }

    if (cfg.ans.empty()) {
        fail("ans", "at least one AN required");
    }
    for (std::size_t i = 0; i < cfg.ans.size(); ++i) {
        const auto& an = cfg.ans[i];
        const std::string p = at_index("ans", i);
        if (!(an.controller_capacity > 0.0)) {
            fail(p + ".controller_capacity", "must be > 0");
        }
        if (!(an.cpu_rate > 0.0)) {
            fail(p + ".cpu_rate", "must be > 0");
        }
        if (!(an.storage_capacity >= 0.0)) {
            fail(p + ".storage_capacity", "must be >= 0");
        }
        if (!(an.power_budget_w > 0.0)) {
            fail(p + ".power_budget_w", "must be > 0");
        }
    }
    if (cfg.aps.empty()) {
        fail("aps", "at least one AP required");
    }
    for (std::size_t i = 0; i < cfg.aps.size(); ++i) {
        if (cfg.aps[i].an >= cfg.ans.size()) {
            fail(at_index("aps", i) + ".an", "references missing AN " + std::to_string(cfg.aps[i].an));
        }
    }
    if (cfg.vehicles.empty()) {
        fail("vehicles", "at least one vehicle required");
    }
    const std::size_t classes = cfg.road.velocity_classes.size();
    for (std::size_t i = 0; i < cfg.vehicles.size(); ++i) {
        const auto& v = cfg.vehicles[i];
        const std::string p = at_index("vehicles", i);
        if (v.cell >= cells) {
            fail(p + ".cell", "references missing cell " + std::to_string(v.cell));
        }
        if (v.velocity_class >= classes) {
            fail(p + ".velocity_class", "references missing velocity class");
        }
        for (std::size_t k = 0; k < v.velocity_schedule.size(); ++k) {
            if (v.velocity_schedule[k].velocity_class >= classes) {
                fail(at_index(p + ".velocity_schedule", k) + ".class", "references missing velocity class");
            }
        }
    }

    const auto& ch = cfg.channel;
    if (!(ch.d0 > 0.0)) {
        fail("channel.d0", "must be > 0");
    }
    if (!std::isfinite(ch.exponent) || ch.exponent < 0.0) {
        fail("channel.exponent", "must be finite and >= 0");
    }
    if (!std::isfinite(ch.tx_power_dbm) || !std::isfinite(ch.pl0_db) || !std::isfinite(ch.noise_dbm)) {
        fail("channel", "power, PL0 and noise must be finite");
    }
    if (std::isnan(cfg.candidate_threshold_db)) {
        fail("channel.candidate_threshold_db", "must not be NaN");
    }

    const auto& mac = cfg.mac;
    const std::uint64_t pool_size = mac.pool.size();
    if (mac.pool.slots_per_frame < 1 || mac.pool.freq_blocks < 1 || mac.pool.sequences < 1) {
        fail("mac.ctu_pool", "all dimensions must be >= 1");
    }
    if (mac.replicas < 1) {
        fail("mac.replicas", "must be >= 1");
    } else if (mac.replicas > pool_size) {
        fail("mac.replicas", "mac.replicas (" + std::to_string(mac.replicas) + ") exceeds mac.ctu_pool size ("
                                 + std::to_string(pool_size) + ")");
    }
    if (mac.k_max < 1) {
        fail("mac.k_max", "must be >= 1");
    }
    if (!mac.bler.beta_db.contains(mac.payload_bits)) {
        fail("mac.payload_bits", "no mac.bler.beta_db entry for " + std::to_string(mac.payload_bits) + " bits");
    }
    if (!(mac.bler.alpha > 0.0)) {
        fail("mac.bler.alpha", "must be > 0");
    }
    if (!is_probability(mac.packet_prob)) {
        fail("mac.packet_prob", "must be in [0, 1]");
    }
    if (!is_probability(mac.bandit.epsilon)) {
        fail("mac.bandit.epsilon", "must be in [0, 1]");
    }
    if (!std::isfinite(mac.bandit.cost)) {
        fail("mac.bandit.cost", "must be finite");
    }
    if (mac.bandit.r_max < 1) {
        fail("mac.bandit.r_max", "must be >= 1");
    } else if (mac.bandit.enabled && mac.bandit.r_max > pool_size) {
        fail("mac.bandit.r_max", "mac.bandit.r_max (" + std::to_string(mac.bandit.r_max)
                                     + ") exceeds mac.ctu_pool size (" + std::to_string(pool_size) + ")");
    }
    if (mac.policy == CtuPolicy::preconfigured) {
        const std::size_t need = mac.bandit.enabled ? std::max(mac.replicas, mac.bandit.r_max) : mac.replicas;
        for (std::size_t v = 0; v < cfg.vehicles.size(); ++v) {
            const std::string p = "mac.preconfigured." + std::to_string(v);
            const auto it = mac.preconfigured.find(v);
            if (it == mac.preconfigured.end()) {
                fail(p, "preconfigured policy needs a CTU list for every vehicle");
                continue;
            }
            if (it->second.size() < need) {
                fail(p, "lists fewer CTUs than mac.replicas");
            }
            for (std::size_t a = 0; a < it->second.size(); ++a) {
                if (it->second[a].value >= pool_size) {
                    fail(p, "CTU " + std::to_string(it->second[a].value) + " outside mac.ctu_pool");
                }
                for (std::size_t b = 0; b < a; ++b) {
                    if (it->second[a] == it->second[b]) {
                        fail(p, "duplicate CTU " + std::to_string(it->second[a].value));
                    }
                }
            }
        }
    }
    for (const auto& [v, _] : mac.preconfigured) {
        if (v >= cfg.vehicles.size()) {
            fail("mac.preconfigured." + std::to_string(v), "references missing vehicle");
        }
    }

    const auto& cl = cfg.cluster;
    if (cl.k_cluster < 1) {
        fail("cluster.k_cluster", "must be >= 1");
    }
    if (cl.power_levels_w.empty()) {
        fail("cluster.power_levels_w", "at least one power level required");
    }
    for (std::size_t i = 0; i < cl.power_levels_w.size(); ++i) {
        if (!(cl.power_levels_w[i] > 0.0)) {
            fail(at_index("cluster.power_levels_w", i), "must be > 0");
        }
    }
    if (!(cl.eta > 0.0 && cl.eta <= 1.0)) {
        fail("cluster.q.eta", "must be in (0, 1]");
    }
    if (!(cl.gamma >= 0.0 && cl.gamma < 1.0)) {
        fail("cluster.q.gamma", "must be in [0, 1)");
    }
    if (!is_probability(cl.epsilon)) {
        fail("cluster.q.epsilon", "must be in [0, 1]");
    }
    if (cl.states.load_buckets < 1 || cl.states.snr_buckets < 1) {
        fail("cluster.states", "bucket counts must be >= 1");
    }
    if (!(cl.states.snr_bucket_width_db > 0.0)) {
        fail("cluster.states.snr_bucket_width_db", "must be > 0");
    }

    const auto& pr = cfg.predictor;
    if (!(pr.threshold > 0.0 && pr.threshold < 1.0)) {
        fail("predictor.threshold", "must be in (0, 1)");
    }
    if (!(pr.obs_floor >= 0.0 && pr.obs_floor < 0.5)) {
        fail("predictor.obs_floor", "must be in [0, 0.5)");
    }
    if (!pr.derived) {
        if (pr.matrix.size() != cells) {
            fail("predictor.matrix", "must have one row per road cell");
        }
        for (std::size_t c = 0; c < pr.matrix.size(); ++c) {
            if (pr.matrix[c].size() != cfg.aps.size()) {
                fail(at_index("predictor.matrix", c), "must have one entry per AP");
            }
            for (double p : pr.matrix[c]) {
                if (!is_probability(p)) {
                    fail(at_index("predictor.matrix", c), "likelihoods must be in [0, 1]");
                    break;
                }
            }
        }
    }

    const auto& cp = cfg.control;
    for (std::size_t i = 0; i < cp.edges.size(); ++i) {
        const auto& e = cp.edges[i];
        const std::string p = at_index("control.edges", i);
        if (e.a.index() >= cfg.ans.size() || e.b.index() >= cfg.ans.size() || e.a == e.b) {
            fail(p, "endpoints must be two distinct existing ANs");
        }
        if (!(e.latency > 0.0)) {
            fail(p + ".latency", "must be > 0");
        }
        if (!(e.capacity > 0.0)) {
            fail(p + ".capacity", "must be > 0");
        }
    }
    if (cp.enabled && errs.empty() && !cfg.ans.empty() && !build_control_topology(cfg).connected()) {
        fail("control.edges", "control topology must connect every AN");
    }
    if (!(cp.vehicle_demand > 0.0)) {
        fail("control.vehicle_demand", "must be > 0");
    }
    if (!(cp.latency_bound > 0.0)) {
        fail("control.latency_bound", "must be > 0");
    }
    if (!(cp.target_latency > 0.0)) {
        fail("control.target_latency", "must be > 0");
    }
    if (!(cp.theta > 0.0 && cp.theta < 1.0)) {
        fail("control.theta", "must be in (0, 1)");
    }
    if (cp.period < 1) {
        fail("control.period", "must be >= 1");
    }
    if (cp.max_paths < 1) {
        fail("control.max_paths", "must be >= 1");
    }
    if (!(cp.kappa >= 0.0)) {
        fail("control.kappa", "must be >= 0");
    }

    const auto& ed = cfg.edge;
    if (ed.enabled && ed.services.empty()) {
        fail("edge.services", "at least one service required when edge compute is enabled");
    }
    for (std::size_t i = 0; i < ed.services.size(); ++i) {
        const auto& s = ed.services[i];
        const std::string p = at_index("edge.services", i);
        if (!(s.size > 0.0)) {
            fail(p + ".size", "must be > 0");
        }
        if (!(s.cycles > 0.0)) {
            fail(p + ".cycles", "must be > 0");
        }
        if (!(s.popularity >= 0.0)) {
            fail(p + ".popularity", "must be >= 0");
        }
    }
    if (!is_probability(ed.task_prob)) {
        fail("edge.task_prob", "must be in [0, 1]");
    }
    if (!(ed.input_bits >= 0.0)) {
        fail("edge.input_bits", "must be >= 0");
    }
    if (!(ed.rates.cloud_rate > 0.0) || !(ed.rates.backhaul_rate > 0.0) || !(ed.rates.backhaul_rtt >= 0.0)) {
        fail("edge", "cloud_rate and backhaul_rate must be > 0, backhaul_rtt >= 0");
    }
    if (!(ed.rates.joules_per_cycle >= 0.0) || !(ed.rates.joules_per_bit >= 0.0)) {
        fail("edge", "energy coefficients must be >= 0");
    }
    if (!(ed.energy_budget > 0.0)) {
        fail("edge.energy_budget", "must be > 0");
    }
    if (!(ed.tradeoff > 0.0)) {
        fail("edge.V", "must be > 0");
    }
    if (ed.recache_period < 1) {
        fail("edge.recache_period", "must be >= 1");
    }
    if (ed.stats_window < 1) {
        fail("edge.stats_window", "must be >= 1");
    }

    const auto& ci = cfg.cipher;
    if (ci.window < 1) {
        fail("cipher.window", "must be >= 1");
    }
    if (ci.message_bits < 1) {
        fail("cipher.message_bits", "must be >= 1");
    }
    if (!is_probability(ci.association_loss_prob)) {
        fail("cipher.association_loss_prob", "must be in [0, 1]");
    }
    if (ci.prf != kPrfName) {
        fail("cipher.prf", std::string("unsupported PRF; expected \"") + kPrfName + "\"");
    }
    if (ci.digest != kDigestName) {
        fail("cipher.digest", std::string("unsupported digest; expected \"") + kDigestName + "\"");
    }
    return errs;
}

ValidationResult validate_json(const json& doc)
{
    ValidationResult out;
    std::vector<FieldError> errors;
    ScenarioConfig cfg = scenario_from_json(doc, errors);
    if (errors.empty()) {
        errors = validate(cfg);
    }
    if (!errors.empty()) {
        out.status = ValidationStatus::invalid;
        out.errors = std::move(errors);
        return out;
    }
    out.config = std::move(cfg);
    return out;
}

ValidationResult validate_file(const std::filesystem::path& path)
{
    ValidationResult out;
    std::ifstream in(path);
    if (!in) {
        out.status = ValidationStatus::unreadable;
        out.errors.push_back({"", "cannot read " + path.string()});
        return out;
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        out.status = ValidationStatus::parse_error;
        out.errors.push_back({"", e.what()});
        return out;
    }
    return validate_json(doc);
}

void apply_override(json& doc, const std::string& dotted_path, const std::string& value_text)
{
    if (dotted_path.empty()) {
        throw std::invalid_argument("override path is empty");
    }
    json value;
    try {
        value = json::parse(value_text);
    } catch (const json::parse_error&) {
        value = value_text;
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = dotted_path.find('.', start);
        const std::string key = dotted_path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) {
            throw std::invalid_argument("override path has an empty segment: " + dotted_path);
        }
        const bool numeric = key.find_first_not_of("0123456789") == std::string::npos;
        json* next = nullptr;
        if (node->is_array() && numeric) {
            const std::size_t i = std::stoul(key);
            if (i >= node->size()) {
                throw std::invalid_argument("override index out of range: " + dotted_path);
            }
            next = &(*node)[i];
        } else {
            if (node->is_null()) {
                *node = json::object();
            }
            if (!node->is_object()) {
                throw std::invalid_argument("override path crosses a non-object: " + dotted_path);
            }
            next = &(*node)[key];
        }
        if (dot == std::string::npos) {
            *next = value;
            return;
        }
        node = next;
        start = dot + 1;
    }
}

ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    ValidationResult r = validate_file(path);
    if (!r.ok()) {
        std::string msg = "invalid scenario " + path.string() + ":";
        for (const auto& e : r.errors) {
            msg += "\n  " + (e.path.empty() ? std::string("<root>") : e.path) + ": " + e.message;
        }
        throw std::invalid_argument(msg);
    }
    return std::move(*r.config);
}

MarkovJumpModel<double> build_mobility_model(const ScenarioConfig& cfg)
{
    const auto& g = cfg.road.graph;
    const auto n = static_cast<Eigen::Index>(g.cell_count());
    std::vector<Eigen::MatrixXd> per_class;
    for (const auto& rows : cfg.road.velocity_classes) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t c = 0; c < rows.size() && c < g.adjacency.size(); ++c) {
            for (std::size_t k = 0; k < rows[c].size() && k < g.adjacency[c].size(); ++k) {
                m(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(g.adjacency[c][k])) += rows[c][k];
            }
        }
        per_class.push_back(std::move(m));
    }
    return MarkovJumpModel<double>(g, std::move(per_class));
}

ControlTopology build_control_topology(const ScenarioConfig& cfg)
{
    ControlTopology t;
    for (const auto& an : cfg.ans) {
        t.nodes.push_back({an.controller_capacity, an.cpu_rate});
    }
    t.edges = cfg.control.edges;
    return t;
}

} // namespace sdvec
