#include "sdvec/report_io.hpp"

#include "sdvec/simulation.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

using namespace sdvec;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(SDVEC_SOURCE_DIR) / "scenarios";

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string first_line(const std::string& s)
{
    return s.substr(0, s.find('\n'));
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path()
               / ("sdvec_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    // Runs the CLI with stdout captured; returns the exit status.
    int cli(const std::string& args, const std::string& env = {})
    {
        const std::string cmd = env + " '" + std::string(SDVEC_CLI) + "' " + args + " > '" + (dir_ / "stdout").string()
                                + "' 2> '" + (dir_ / "stderr").string() + "'";
        const int raw = std::system(cmd.c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    }
    json stdout_json() const { return json::parse(slurp(dir_ / "stdout")); }
    std::string scenario(const std::string& name) const { return "'" + (kScenarios / name).string() + "'"; }

    fs::path dir_;
};

} // namespace

TEST(ReportIo, CsvHeadersAreStable)
{
    const auto r = run(load_scenario(kScenarios / "smoke.json"));
    EXPECT_EQ(first_line(packets_csv(r)), "vehicle_id,emit_slot,delivered,latency_slots,replicas,paths");
    EXPECT_EQ(first_line(decisions_csv(r)), "slot,kind,an_id,subject_id,decision,value");
}

TEST(ReportIo, SummaryKeySet)
{
    const auto s = summary_json(run(load_scenario(kScenarios / "smoke.json")));
    std::set<std::string> keys;
    for (const auto& [k, v] : s.items()) {
        keys.insert(k);
    }
    const std::set<std::string> want{"schema_version", "seed", "horizon", "slot_duration_s", "deadline_s",
                                     "schema", "uplink", "energy", "downlink", "predictor", "slicing",
                                     "control_plane", "edge", "cipher"};
    EXPECT_EQ(keys, want);
    EXPECT_EQ(s["schema_version"], kOutputSchemaVersion);
    EXPECT_EQ(s["schema"]["packets_csv"]["schema_version"], kOutputSchemaVersion);
    EXPECT_EQ(s["schema"]["decisions_csv"]["schema_version"], kOutputSchemaVersion);
    for (const char* k : {"emitted", "delivered", "lost", "success_rate", "latency_p50_slots", "latency_p99_slots",
                          "latency_p99_s", "deadline_hit_fraction"}) {
        EXPECT_TRUE(s["uplink"].contains(k)) << k;
    }
    EXPECT_TRUE(s["energy"].contains("mean_per_an_slot_j"));
}

TEST(ReportIo, UndeliveredPacketsLeaveLatencyEmpty)
{
    MetricsReport r;
    r.packets.push_back({VehicleId(3u), 5, false, 0, 2, 0});
    r.packets.push_back({VehicleId(1u), 6, true, 1, 2, 1});
    EXPECT_EQ(packets_csv(r), std::string(kPacketsHeader) + "\n3,5,0,,2,0\n1,6,1,1,2,1\n");
}

TEST(ReportIo, OverrideParsing)
{
    const auto o = parse_override("mac.replicas=3");
    EXPECT_EQ(o.path, "mac.replicas");
    EXPECT_EQ(o.value, "3");
    EXPECT_EQ(parse_override("a=b=c").value, "b=c");
    EXPECT_THROW(parse_override("novalue"), std::invalid_argument);
}

TEST(ReportIo, ResolveRequestAppliesOverridesAndSeed)
{
    RunRequest req{kScenarios / "smoke.json", 99, {}, {{"mac.replicas", "1"}}};
    const auto cfg = resolve_request(req);
    EXPECT_EQ(cfg.seed, 99u);
    EXPECT_EQ(cfg.mac.replicas, 1u);
    req.overrides = {{"horizon", "0"}};
    try {
        resolve_request(req);
        FAIL();
    } catch (const ValidationFailure& e) {
        EXPECT_EQ(e.status(), ValidationStatus::invalid);
        ASSERT_FALSE(e.errors().empty());
        EXPECT_EQ(e.errors().front().path, "horizon");
    }
}

TEST(ReportIo, ErrorJsonShape)
{
    const auto e = error_json("invalid", "bad", {{"mac.replicas", "too many"}});
    EXPECT_EQ(e["schema_version"], kOutputSchemaVersion);
    EXPECT_EQ(e["status"], "error");
    EXPECT_EQ(e["kind"], "invalid");
    EXPECT_EQ(e["errors"][0]["path"], "mac.replicas");
}

TEST_F(CliTest, RunWritesAllOutputs)
{
    ASSERT_EQ(cli("run " + scenario("smoke.json") + " --out '" + (dir_ / "out").string() + "'"), 0);
    for (const char* f : {"packets.csv", "summary.json", "decisions.csv"}) {
        EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
    }
    EXPECT_EQ(stdout_json()["schema_version"], kOutputSchemaVersion);
}

TEST_F(CliTest, ValidateOkAndInvalid)
{
    EXPECT_EQ(cli("validate " + scenario("smoke.json")), 0);
    EXPECT_EQ(cli("validate '" + (dir_ / "nope.json").string() + "'"), 2);
    EXPECT_EQ(stdout_json()["kind"], "unreadable");
    {
        std::ofstream(dir_ / "broken.json") << "{";
    }
    EXPECT_EQ(cli("validate '" + (dir_ / "broken.json").string() + "'"), 2);
    EXPECT_EQ(stdout_json()["kind"], "parse_error");
    EXPECT_EQ(cli("run " + scenario("smoke.json") + " --override horizon=0 --out '" + (dir_ / "o").string() + "'"), 2);
    const auto err = stdout_json();
    EXPECT_EQ(err["status"], "error");
    EXPECT_EQ(err["kind"], "invalid");
    EXPECT_EQ(err["errors"][0]["path"], "horizon");
    EXPECT_FALSE(fs::exists(dir_ / "o" / "summary.json"));
}

TEST_F(CliTest, UsageErrorExitsTwo)
{
    EXPECT_EQ(cli("frobnicate"), 2);
    EXPECT_EQ(cli("run"), 2);
}

TEST_F(CliTest, RuntimeFailureExitsThree)
{
    // output path is an existing regular file, so writing fails after the run
    {
        std::ofstream(dir_ / "blocker") << "x";
    }
    EXPECT_EQ(cli("run " + scenario("smoke.json") + " --out '" + (dir_ / "blocker").string() + "'"), 3);
    EXPECT_EQ(stdout_json()["status"], "error");
}

TEST_F(CliTest, OutDirFromEnvironment)
{
    const auto target = dir_ / "from_env";
    ASSERT_EQ(cli("run " + scenario("degenerate.json"), "SDVEC_OUT='" + target.string() + "'"), 0);
    EXPECT_TRUE(fs::exists(target / "summary.json"));
}

TEST_F(CliTest, RunDoesNotModifyScenario)
{
    const auto before = slurp(kScenarios / "smoke.json");
    ASSERT_EQ(cli("run " + scenario("smoke.json") + " --seed 3 --override mac.replicas=1 --out '"
                  + (dir_ / "o").string() + "'"),
              0);
    EXPECT_EQ(slurp(kScenarios / "smoke.json"), before);
    EXPECT_EQ(json::parse(slurp(dir_ / "o" / "summary.json"))["seed"], 3);
}

TEST_F(CliTest, SeedOverrideIsDeterministic)
{
    ASSERT_EQ(cli("run " + scenario("smoke.json") + " --seed 5 --out '" + (dir_ / "a").string() + "'"), 0);
    ASSERT_EQ(cli("run " + scenario("smoke.json") + " --seed 5 --out '" + (dir_ / "b").string() + "'"), 0);
    for (const char* f : {"packets.csv", "summary.json", "decisions.csv"}) {
        EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
    }
}

TEST_F(CliTest, SweepGroupsBySeed)
{
    ASSERT_EQ(cli("sweep " + scenario("sweep_smoke.json") + " --threads 2 --out '" + (dir_ / "sw").string() + "'"), 0);
    const auto s = json::parse(slurp(dir_ / "sw" / "sweep_summary.json"));
    EXPECT_EQ(s["schema_version"], kOutputSchemaVersion);
    EXPECT_EQ(s["by_seed"].size(), 10u);
    for (int seed = 1; seed <= 10; ++seed) {
        EXPECT_TRUE(fs::exists(dir_ / "sw" / ("seed_" + std::to_string(seed)) / "summary.json")) << seed;
    }
}

TEST_F(CliTest, SweepIsolatesRunsAcrossThreads)
{
    ASSERT_EQ(cli("sweep " + scenario("sweep_smoke.json") + " --threads 1 --out '" + (dir_ / "one").string() + "'"),
              0);
    ASSERT_EQ(cli("sweep " + scenario("sweep_smoke.json") + " --threads 4 --out '" + (dir_ / "four").string() + "'"),
              0);
    for (int seed = 1; seed <= 10; ++seed) {
        const auto sub = fs::path("seed_" + std::to_string(seed)) / "packets.csv";
        EXPECT_EQ(slurp(dir_ / "one" / sub), slurp(dir_ / "four" / sub)) << seed;
    }
}

TEST_F(CliTest, SweepParameterDirectories)
{
    ASSERT_EQ(cli("sweep " + scenario("sweep_replicas.json") + " --out '" + (dir_ / "sw").string() + "'"), 0);
    const auto s = json::parse(slurp(dir_ / "sw" / "sweep_summary.json"));
    for (const auto& [seed, rows] : s["by_seed"].items()) {
        EXPECT_EQ(rows.size(), 3u) << seed;
    }
    EXPECT_TRUE(fs::exists(dir_ / "sw" / "mac.replicas=2"));
}

TEST_F(CliTest, CompareIdenticalPoliciesGivesZeroDeltas)
{
    const auto req = scenario("compare_persistence.json");
    ASSERT_EQ(cli("compare " + req + " " + req), 0);
    const auto c = stdout_json();
    EXPECT_EQ(c["schema_version"], kOutputSchemaVersion);
    ASSERT_EQ(c["deltas"].size(), c["seeds"].size());
    for (const auto& row : c["deltas"]) {
        for (const auto& [metric, v] : row.items()) {
            if (metric != "seed") {
                EXPECT_DOUBLE_EQ(v["delta"].get<double>(), 0.0) << metric;
            }
        }
    }
    for (const auto& [metric, counts] : c["sign_summary"].items()) {
        EXPECT_EQ(counts["zero"], c["seeds"].size()) << metric;
    }
}

TEST_F(CliTest, CompareRejectsMismatchedScenarios)
{
    EXPECT_EQ(cli("compare " + scenario("compare_persistence.json") + " " + scenario("compare_eco_random.json")), 2);
    EXPECT_EQ(stdout_json()["status"], "error");
}

TEST_F(CliTest, SmokeRunIsFast)
{
    const auto t0 = std::chrono::steady_clock::now();
    ASSERT_EQ(cli("run " + scenario("smoke.json") + " --out '" + (dir_ / "o").string() + "'"), 0);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_LT(secs, 5.0);
}
