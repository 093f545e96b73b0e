#include "sdvec/report_io.hpp"

#include "sdvec/simulation.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

namespace sdvec {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double ratio(double num, double den)
{
    return den > 0.0 ? num / den : 0.0;
}

json optional_number(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

json read_json_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationFailure(ValidationStatus::unreadable, {{"", "cannot read " + path.string()}});
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationFailure(ValidationStatus::parse_error, {{"", e.what()}});
    }
}

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << content;
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

std::vector<Override> overrides_from_json(const json& node, const std::string& where)
{
    std::vector<Override> out;
    if (node.is_null()) {
        return out;
    }
    if (!node.is_object()) {
        throw ValidationFailure(ValidationStatus::invalid, {{where, "expected an object of dotted path -> value"}});
    }
    for (const auto& [k, v] : node.items()) {
        out.push_back({k, v.dump()});
    }
    return out;
}

std::vector<std::uint64_t> seeds_from_json(const json& node, const std::string& where)
{
    std::vector<std::uint64_t> seeds;
    if (!node.is_array() || node.empty()) {
        throw ValidationFailure(ValidationStatus::invalid, {{where, "expected a non-empty array of seeds"}});
    }
    for (const auto& s : node) {
        if (!s.is_number_unsigned()) {
            throw ValidationFailure(ValidationStatus::invalid, {{where, "seeds must be non-negative integers"}});
        }
        seeds.push_back(s.get<std::uint64_t>());
    }
    return seeds;
}

fs::path scenario_from_request(const json& doc, const fs::path& request_path)
{
    if (!doc.contains("scenario") || !doc["scenario"].is_string()) {
        throw ValidationFailure(ValidationStatus::invalid, {{"scenario", "expected a scenario path"}});
    }
    fs::path p = doc["scenario"].get<std::string>();
    if (p.is_relative()) {
        p = request_path.parent_path() / p;
    }
    return p;
}

void check_version(const json& doc)
{
    if (doc.contains("schema_version") && doc["schema_version"] != kOutputSchemaVersion) {
        throw ValidationFailure(ValidationStatus::invalid,
                                {{"schema_version", "unsupported version " + doc["schema_version"].dump()}});
    }
}

std::string value_label(const json& v)
{
    return v.is_string() ? v.get<std::string>() : v.dump();
}

} // namespace

ValidationFailure::ValidationFailure(ValidationStatus status, std::vector<FieldError> errors)
    : std::runtime_error("scenario validation failed")
    , status_(status)
    , errors_(std::move(errors))
{
}

std::string to_string(ValidationStatus status)
{
    switch (status) {
    case ValidationStatus::ok:
        return "ok";
    case ValidationStatus::unreadable:
        return "unreadable";
    case ValidationStatus::parse_error:
        return "parse_error";
    case ValidationStatus::invalid:
        return "invalid";
    }
    return "invalid";
}

Override parse_override(const std::string& text)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw std::invalid_argument("override must look like key=value: " + text);
    }
    return {text.substr(0, eq), text.substr(eq + 1)};
}

fs::path default_out_dir()
{
    const char* env = std::getenv(kOutDirEnv);
    if (env != nullptr && *env != '\0') {
        return env;
    }
    return kDefaultOutDir;
}

ScenarioConfig resolve_request(const RunRequest& request)
{
    json doc = read_json_file(request.scenario);
    std::vector<FieldError> errors;
    for (const auto& o : request.overrides) {
        try {
            apply_override(doc, o.path, o.value);
        } catch (const std::exception& e) {
            errors.push_back({o.path, e.what()});
        }
    }
    if (request.seed) {
        doc["seed"] = *request.seed;
    }
    if (!errors.empty()) {
        throw ValidationFailure(ValidationStatus::invalid, std::move(errors));
    }
    ValidationResult r = validate_json(doc);
    if (!r.ok()) {
        throw ValidationFailure(r.status, std::move(r.errors));
    }
    return std::move(*r.config);
}

std::string packets_csv(const MetricsReport& report)
{
    std::ostringstream out;
    out << kPacketsHeader << '\n';
    for (const auto& p : report.packets) {
        out << p.vehicle.value << ',' << p.emit_slot << ',' << (p.delivered ? 1 : 0) << ',';
        if (p.delivered) {
            out << p.latency_slots;
        }
        out << ',' << p.replicas << ',' << p.paths << '\n';
    }
    return out.str();
}

std::string decisions_csv(const MetricsReport& report)
{
    std::ostringstream out;
    out << kDecisionsHeader << '\n';
    for (const auto& d : report.decisions) {
        out << d.slot << ',' << d.kind << ',';
        if (d.an >= 0) {
            out << d.an;
        }
        out << ',';
        if (d.subject >= 0) {
            out << d.subject;
        }
        out << ',' << d.decision << ',' << format_double(d.value) << '\n';
    }
    return out.str();
}

json summary_json(const MetricsReport& r)
{
    const UplinkAggregates up = aggregate_uplink(r);
    const auto an_count = static_cast<double>(r.energy_per_an.cols());
    const auto slots = static_cast<double>(r.horizon);

    json s;
    s["schema_version"] = kOutputSchemaVersion;
    s["seed"] = r.seed;
    s["horizon"] = r.horizon;
    s["slot_duration_s"] = r.slot_duration;
    s["deadline_s"] = r.deadline;
    s["schema"] = {
        {"packets_csv", {{"schema_version", kOutputSchemaVersion}, {"header", kPacketsHeader}}},
        {"decisions_csv", {{"schema_version", kOutputSchemaVersion}, {"header", kDecisionsHeader}}},
    };

    std::optional<double> p99_s;
    if (up.latency_p99_slots) {
        p99_s = *up.latency_p99_slots * r.slot_duration;
    }
    s["uplink"] = {
        {"emitted", up.emitted},
        {"delivered", up.delivered},
        {"lost", up.lost},
        {"success_rate", up.success_rate},
        {"latency_p50_slots", optional_number(up.latency_p50_slots)},
        {"latency_p99_slots", optional_number(up.latency_p99_slots)},
        {"latency_p99_s", optional_number(p99_s)},
        {"deadline_hit_fraction", up.deadline_hit_fraction},
        {"collision_ctus", r.mac.collision_ctus},
        {"mud_resolved_paths", r.mac.mud_resolved_paths},
        {"unresolved_paths", r.mac.unresolved_paths},
        {"unserved", r.mac.unserved},
        {"mean_replicas", ratio(static_cast<double>(r.mac.replicas_total),
                                static_cast<double>(up.emitted - r.mac.unserved))},
    };

    double total_energy = r.energy_per_an.sum();
    json per_an = json::array();
    for (Eigen::Index a = 0; a < r.energy_per_an.cols(); ++a) {
        per_an.push_back(r.energy_per_an.col(a).sum());
    }
    s["energy"] = {
        {"total_j", total_energy},
        {"mean_per_an_slot_j", mean_energy_per_an_slot(r)},
        {"per_an_total_j", per_an},
    };

    s["downlink"] = {
        {"attempted", r.downlink.attempted},
        {"delivered", r.downlink.delivered},
        {"no_slice", r.downlink.no_slice},
        {"delivery_rate", ratio(static_cast<double>(r.downlink.delivered), static_cast<double>(r.downlink.attempted))},
        {"mean_power_w", ratio(r.downlink.power_w_total, static_cast<double>(r.downlink.attempted))},
    };

    const auto scored = static_cast<double>(r.predictor.scored_bits);
    s["predictor"] = {
        {"enabled", r.predictor.enabled},
        {"scored_bits", r.predictor.scored_bits},
        {"hamming_accuracy", ratio(static_cast<double>(r.predictor.predicted_hits), scored)},
        {"persistence_accuracy", ratio(static_cast<double>(r.predictor.persistence_hits), scored)},
        {"zero_likelihood_fallbacks", r.predictor.zero_likelihood_fallbacks},
    };

    s["slicing"] = {
        {"assignments", r.slicing.assignments},
        {"overlaps", r.slicing.overlaps},
        {"unsatisfied_ctus", r.slicing.unsatisfied_ctus},
    };

    s["control_plane"] = {
        {"invocations", r.control.invocations},
        {"infeasible", r.control.infeasible},
        {"feedback_tightenings", r.control.feedback_tightenings},
        {"controllers", r.control.controllers_last},
        {"controller_set", r.control.controller_set_last},
        {"mean_latency_s", r.control.mean_latency_last},
        {"sync_rounds", r.control.sync_rounds_last},
    };

    const double edge_slots = slots * an_count;
    s["edge"] = {
        {"tasks", r.edge.tasks},
        {"local", r.edge.local},
        {"cloud", r.edge.cloud},
        {"forced_cloud", r.edge.forced_cloud},
        {"mean_task_latency_s", ratio(r.edge.latency_total_s, static_cast<double>(r.edge.tasks))},
        {"mean_energy_per_an_slot_j", ratio(r.edge.energy_total_j, edge_slots)},
        {"energy_budget_j", r.edge.energy_budget_j},
        {"final_deficit_j", r.edge.final_deficit},
    };

    s["cipher"] = {
        {"sessions", r.cipher.sessions},
        {"checks", r.cipher.checks},
        {"resyncs", r.cipher.resyncs},
        {"resync_rate", ratio(static_cast<double>(r.cipher.resyncs), static_cast<double>(r.cipher.checks))},
        {"roundtrip_ok", r.cipher.roundtrip_ok},
        {"roundtrip_failures", r.cipher.roundtrip_failures},
        {"recovered", r.cipher.recovered},
        {"compromised_sessions", r.cipher.compromised_sessions},
    };
    return s;
}

void write_outputs(const MetricsReport& report, const fs::path& dir)
{
    fs::create_directories(dir);
    write_file(dir / "packets.csv", packets_csv(report));
    write_file(dir / "decisions.csv", decisions_csv(report));
    write_file(dir / "summary.json", summary_json(report).dump(2) + "\n");
}

json run_and_report(const RunRequest& request)
{
    const ScenarioConfig cfg = resolve_request(request);
    const MetricsReport report = run(cfg);
    write_outputs(report, request.out_dir);
    return summary_json(report);
}

SweepSpec load_sweep_spec(const fs::path& path)
{
    const json doc = read_json_file(path);
    check_version(doc);
    SweepSpec spec;
    spec.scenario = scenario_from_request(doc, path);
    spec.seeds = seeds_from_json(doc.value("seeds", json()), "seeds");
    if (doc.contains("parameter") && !doc["parameter"].is_null()) {
        const json& p = doc["parameter"];
        if (!p.is_object() || !p.contains("name") || !p["name"].is_string()) {
            throw ValidationFailure(ValidationStatus::invalid, {{"parameter.name", "expected a dotted path"}});
        }
        if (!p.contains("values") || !p["values"].is_array() || p["values"].empty()) {
            throw ValidationFailure(ValidationStatus::invalid, {{"parameter.values", "expected a non-empty array"}});
        }
        spec.parameter = p["name"].get<std::string>();
        spec.values.assign(p["values"].begin(), p["values"].end());
    }
    spec.overrides = overrides_from_json(doc.value("overrides", json()), "overrides");
    return spec;
}

json run_sweep(const SweepSpec& spec, const fs::path& out, unsigned threads)
{
    struct Job {
        std::optional<json> value;
        std::uint64_t seed = 0;
        RunRequest request;
        fs::path rel;
    };
    std::vector<Job> jobs;
    const std::vector<std::optional<json>> values = [&] {
        std::vector<std::optional<json>> v;
        if (spec.parameter) {
            v.assign(spec.values.begin(), spec.values.end());
        } else {
            v.emplace_back();
        }
        return v;
    }();
    for (const auto& value : values) {
        for (std::uint64_t seed : spec.seeds) {
            Job job{value, seed, {spec.scenario, seed, {}, spec.overrides}, {}};
            if (value) {
                job.request.overrides.push_back({*spec.parameter, value->dump()});
                job.rel = *spec.parameter + "=" + value_label(*value);
            }
            job.rel /= "seed_" + std::to_string(seed);
            job.request.out_dir = out / job.rel;
            jobs.push_back(std::move(job));
        }
    }

    // validate everything up front so a bad value fails before any run
    std::vector<ScenarioConfig> configs;
    for (const auto& job : jobs) {
        configs.push_back(resolve_request(job.request));
    }

    std::vector<MetricsReport> reports(jobs.size());
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, jobs.size()));
    for (std::size_t start = 0; start < jobs.size(); start += workers) {
        std::vector<std::future<MetricsReport>> batch;
        for (std::size_t i = start; i < std::min(jobs.size(), start + workers); ++i) {
            batch.push_back(std::async(std::launch::async, [&configs, i] { return run(configs[i]); }));
        }
        for (std::size_t k = 0; k < batch.size(); ++k) {
            reports[start + k] = batch[k].get();
        }
    }

    std::map<std::uint64_t, json> groups;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        write_outputs(reports[i], jobs[i].request.out_dir);
        json row = {{"dir", jobs[i].rel.generic_string()}, {"summary", summary_json(reports[i])}};
        row["value"] = jobs[i].value ? *jobs[i].value : json(nullptr);
        groups[jobs[i].seed].push_back(std::move(row));
    }

    json doc;
    doc["schema_version"] = kOutputSchemaVersion;
    doc["scenario"] = spec.scenario.generic_string();
    doc["parameter"] = spec.parameter ? json(*spec.parameter) : json(nullptr);
    doc["seeds"] = spec.seeds;
    doc["by_seed"] = json::object();
    for (auto& [seed, rows] : groups) {
        doc["by_seed"][std::to_string(seed)] = std::move(rows);
    }
    fs::create_directories(out);
    write_file(out / "sweep_summary.json", doc.dump(2) + "\n");
    return doc;
}

CompareRequest load_compare_request(const fs::path& path)
{
    const json doc = read_json_file(path);
    check_version(doc);
    CompareRequest req;
    req.scenario = scenario_from_request(doc, path);
    req.seeds = seeds_from_json(doc.value("seeds", json()), "seeds");
    req.overrides = overrides_from_json(doc.value("overrides", json()), "overrides");
    return req;
}

json compare_runs(const CompareRequest& base, const CompareRequest& treat)
{
    std::error_code ec_a;
    std::error_code ec_b;
    const fs::path a = fs::weakly_canonical(base.scenario, ec_a);
    const fs::path b = fs::weakly_canonical(treat.scenario, ec_b);
    if (ec_a || ec_b || a != b) {
        throw std::invalid_argument("baseline and treatment use different scenarios: " + base.scenario.string()
                                    + " vs " + treat.scenario.string());
    }
    if (base.seeds != treat.seeds) {
        throw std::invalid_argument("baseline and treatment use different seed lists");
    }

    struct Metric {
        const char* name;
        double (*get)(const json&);
    };
    static const Metric metrics[] = {
        {"success_rate", [](const json& s) { return s["uplink"]["success_rate"].get<double>(); }},
        {"latency_p99_s",
         [](const json& s) {
             const auto& v = s["uplink"]["latency_p99_s"];
             return v.is_null() ? 0.0 : v.get<double>();
         }},
        {"mean_energy_per_an_slot_j", [](const json& s) { return s["energy"]["mean_per_an_slot_j"].get<double>(); }},
        {"predictor_accuracy", [](const json& s) { return s["predictor"]["hamming_accuracy"].get<double>(); }},
        {"downlink_delivery_rate", [](const json& s) { return s["downlink"]["delivery_rate"].get<double>(); }},
    };

    json rows = json::array();
    std::map<std::string, std::map<std::string, int>> signs;
    for (std::uint64_t seed : base.seeds) {
        const json sb = summary_json(run(resolve_request({base.scenario, seed, {}, base.overrides})));
        const json st = summary_json(run(resolve_request({treat.scenario, seed, {}, treat.overrides})));
        json row = {{"seed", seed}};
        for (const auto& m : metrics) {
            const double vb = m.get(sb);
            const double vt = m.get(st);
            const double d = vt - vb;
            row[m.name] = {{"baseline", vb}, {"treatment", vt}, {"delta", d}};
            auto& count = signs[m.name];
            ++count[d > 0.0 ? "positive" : (d < 0.0 ? "negative" : "zero")];
        }
        rows.push_back(std::move(row));
    }
    json summary = json::object();
    for (const auto& m : metrics) {
        auto& c = signs[m.name];
        summary[m.name] = {{"positive", c["positive"]}, {"negative", c["negative"]}, {"zero", c["zero"]}};
    }
    return {{"schema_version", kOutputSchemaVersion},
            {"scenario", base.scenario.generic_string()},
            {"seeds", base.seeds},
            {"deltas", rows},
            {"sign_summary", summary}};
}

json error_json(const std::string& kind, const std::string& message, const std::vector<FieldError>& errors)
{
    json out = {{"schema_version", kOutputSchemaVersion}, {"status", "error"}, {"kind", kind}, {"message", message}};
    json list = json::array();
    for (const auto& e : errors) {
        list.push_back({{"path", e.path}, {"message", e.message}});
    }
    out["errors"] = list;
    return out;
}

} // namespace sdvec
