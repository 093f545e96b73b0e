#include "sdvec/scenario.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>

using namespace sdvec;
using nlohmann::json;

namespace {

const std::filesystem::path kScenarios = std::filesystem::path(SDVEC_SOURCE_DIR) / "scenarios";

json read_json(const std::filesystem::path& p)
{
    std::ifstream in(p);
    return json::parse(in);
}

bool has_error(const ValidationResult& r, const std::string& path, const std::string& fragment = {})
{
    for (const auto& e : r.errors) {
        if (e.path == path && e.message.find(fragment) != std::string::npos) {
            return true;
        }
    }
    return false;
}

} // namespace

TEST(Scenario, BundledScenariosValidate)
{
    std::size_t checked = 0;
    for (const auto& entry : std::filesystem::directory_iterator(kScenarios)) {
        const auto doc = read_json(entry.path());
        if (doc.contains("seeds")) {
            continue; // sweep and compare specs
        }
        const auto r = validate_file(entry.path());
        EXPECT_TRUE(r.ok()) << entry.path() << ": " << (r.errors.empty() ? "" : r.errors.front().message);
        ++checked;
    }
    EXPECT_GE(checked, 5u);
}

TEST(Scenario, RowSumErrorNamesClassAndCell)
{
    auto doc = read_json(kScenarios / "smoke.json");
    for (auto& p : doc["road"]["velocity_classes"][0][2]) {
        p = p.get<double>() * 0.9;
    }
    const auto r = validate_json(doc);
    ASSERT_EQ(r.status, ValidationStatus::invalid);
    EXPECT_TRUE(has_error(r, "road.velocity_classes[0][2]", "0.9"));
}

TEST(Scenario, ReplicasAbovePoolNamesBothFields)
{
    auto doc = read_json(kScenarios / "smoke.json");
    const auto& pool = doc["mac"]["ctu_pool"];
    std::size_t size = 1;
    for (const auto& [k, v] : pool.items()) {
        size *= v.get<std::size_t>();
    }
    doc["mac"]["replicas"] = size + 1;
    const auto r = validate_json(doc);
    ASSERT_EQ(r.status, ValidationStatus::invalid);
    EXPECT_TRUE(has_error(r, "mac.replicas", "mac.ctu_pool"));
}

TEST(Scenario, CollectsEveryError)
{
    auto doc = read_json(kScenarios / "smoke.json");
    doc["horizon"] = 0;
    doc["slot_duration"] = -1.0;
    const auto r = validate_json(doc);
    ASSERT_EQ(r.status, ValidationStatus::invalid);
    EXPECT_TRUE(has_error(r, "horizon"));
    EXPECT_TRUE(has_error(r, "slot_duration"));
}

TEST(Scenario, TypeMismatchReportedByPath)
{
    auto doc = read_json(kScenarios / "smoke.json");
    doc["mac"]["replicas"] = "two";
    const auto r = validate_json(doc);
    ASSERT_EQ(r.status, ValidationStatus::invalid);
    EXPECT_TRUE(has_error(r, "mac.replicas"));
}

TEST(Scenario, DistinctFailureStatuses)
{
    const auto dir = std::filesystem::temp_directory_path() / "sdvec_test_scenario";
    std::filesystem::create_directories(dir);
    EXPECT_EQ(validate_file(dir / "missing.json").status, ValidationStatus::unreadable);
    {
        std::ofstream(dir / "broken.json") << "{ \"horizon\": ";
    }
    EXPECT_EQ(validate_file(dir / "broken.json").status, ValidationStatus::parse_error);
    {
        std::ofstream(dir / "empty_obj.json") << "[]";
    }
    EXPECT_EQ(validate_file(dir / "empty_obj.json").status, ValidationStatus::invalid);
    std::filesystem::remove_all(dir);
}

TEST(Scenario, OverridesParseJsonOrFallBackToString)
{
    json doc = {{"mac", {{"replicas", 1}}}, {"list", {1, 2, 3}}};
    apply_override(doc, "mac.replicas", "3");
    apply_override(doc, "mac.policy", "random");
    apply_override(doc, "predictor.enabled", "false");
    apply_override(doc, "list.1", "9");
    EXPECT_EQ(doc["mac"]["replicas"], 3);
    EXPECT_EQ(doc["mac"]["policy"], "random");
    EXPECT_EQ(doc["predictor"]["enabled"], false);
    EXPECT_EQ(doc["list"][1], 9);
    EXPECT_THROW(apply_override(doc, "list.5", "1"), std::invalid_argument);
    EXPECT_THROW(apply_override(doc, "a..b", "1"), std::invalid_argument);
    EXPECT_THROW(apply_override(doc, "", "1"), std::invalid_argument);
}

TEST(Scenario, LoadScenarioThrowsOnInvalid)
{
    EXPECT_NO_THROW(load_scenario(kScenarios / "smoke.json"));
    EXPECT_ANY_THROW(load_scenario(kScenarios / "does_not_exist.json"));
}

TEST(Scenario, MobilityModelRowsAreStochastic)
{
    const auto cfg = load_scenario(kScenarios / "smoke.json");
    const auto model = build_mobility_model(cfg);
    for (std::size_t k = 0; k < model.class_count(); ++k) {
        const auto& t = model.transition(k);
        for (Eigen::Index r = 0; r < t.rows(); ++r) {
            EXPECT_NEAR(t.row(r).sum(), 1.0, 1e-9);
        }
    }
}
