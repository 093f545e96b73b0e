#pragma once

#include "sdvec/metrics.hpp"
#include "sdvec/scenario.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sdvec {

inline constexpr int kOutputSchemaVersion = 1;
inline constexpr const char* kOutDirEnv = "SDVEC_OUT";
inline constexpr const char* kDefaultOutDir = "sdvec-out";

inline constexpr const char* kPacketsHeader = "vehicle_id,emit_slot,delivered,latency_slots,replicas,paths";
inline constexpr const char* kDecisionsHeader = "slot,kind,an_id,subject_id,decision,value";

/// Scenario rejected before any slot ran.
class ValidationFailure : public std::runtime_error {
public:
    ValidationFailure(ValidationStatus status, std::vector<FieldError> errors);

    ValidationStatus status() const noexcept { return status_; }
    const std::vector<FieldError>& errors() const noexcept { return errors_; }

private:
    ValidationStatus status_;
    std::vector<FieldError> errors_;
};

struct Override {
    std::string path;
    std::string value;
};

/// Parses "k=v"; throws std::invalid_argument without '='.
Override parse_override(const std::string& text);

struct RunRequest {
    std::filesystem::path scenario;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out_dir;
    std::vector<Override> overrides;
};

/// $SDVEC_OUT when set and non-empty, else ./sdvec-out.
std::filesystem::path default_out_dir();

/// Loads, overrides and validates. Throws ValidationFailure.
ScenarioConfig resolve_request(const RunRequest& request);

std::string packets_csv(const MetricsReport& report);
std::string decisions_csv(const MetricsReport& report);
nlohmann::json summary_json(const MetricsReport& report);

/// Writes packets.csv, decisions.csv and summary.json into `dir`.
void write_outputs(const MetricsReport& report, const std::filesystem::path& dir);

/// Validate, run, write. Returns the summary.
nlohmann::json run_and_report(const RunRequest& request);

struct SweepSpec {
    std::filesystem::path scenario;
    std::vector<std::uint64_t> seeds;
    std::optional<std::string> parameter;
    std::vector<nlohmann::json> values;
    std::vector<Override> overrides;
};

/// Relative scenario paths resolve against the spec file's directory.
SweepSpec load_sweep_spec(const std::filesystem::path& path);

/// One isolated simulation per (value, seed), run on up to `threads` workers.
/// Per-run outputs go to out/[<param>=<value>/]seed_<n>/; the merged
/// sweep_summary.json groups rows by seed.
nlohmann::json run_sweep(const SweepSpec& spec, const std::filesystem::path& out, unsigned threads);

struct CompareRequest {
    std::filesystem::path scenario;
    std::vector<std::uint64_t> seeds;
    std::vector<Override> overrides;
};

CompareRequest load_compare_request(const std::filesystem::path& path);

/// Paired per-seed deltas (treatment minus baseline). Throws
/// std::invalid_argument when scenarios or seed lists differ.
nlohmann::json compare_runs(const CompareRequest& base, const CompareRequest& treat);

nlohmann::json error_json(const std::string& kind, const std::string& message,
                          const std::vector<FieldError>& errors = {});

std::string to_string(ValidationStatus status);

} // namespace sdvec
