#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "wiresens/error.hpp"
#include "wiresens/scenario.hpp"

using namespace wiresens;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

const std::string kSmall = R"({
  "devices": [{"deviceId": 1, "rows": 8, "cols": 8, "protocol": "espnow", "intermittent": true},
              {"deviceId": 2, "rows": 8, "cols": 8, "protocol": "espnow"}],
  "protocol": "espnow",
  "stimulus": {"preset": "repeated press"},
  "durationUs": 12000000,
  "seed": 5
})";

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("simulate is byte-deterministic") {
    const auto spec = scenario_from_json(json::parse(kSmall));
    const auto a = fs::temp_directory_path() / "wiresens_test_sim_a";
    const auto b = fs::temp_directory_path() / "wiresens_test_sim_b";
    fs::remove_all(a);
    fs::remove_all(b);
    simulate(spec, a.string());
    simulate(spec, b.string());
    for (const char* f : {"device_1.wrs", "device_2.wrs", "stats.json"}) {
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
}

TEST_CASE("scenario validation") {
    json j = json::parse(kSmall);
    j["devices"] = json::array();
    for (int i = 0; i < 6; ++i) j["devices"].push_back({{"deviceId", i}, {"rows", 4}, {"cols", 4}});
    CHECK_THROWS_AS(scenario_from_json(j), ValidationError);

    j = json::parse(kSmall);
    j["stimulus"] = "does/not/exist.json";
    CHECK_THROWS_AS(scenario_from_json(j, "/tmp"), ValidationError);
    j = json::parse(kSmall);
    j.erase("devices");
    CHECK_THROWS_AS(scenario_from_json(j), ValidationError);
    j = json::parse(kSmall);
    j["protocol"] = "carrier pigeon";
    CHECK_THROWS_AS(scenario_from_json(j), ValidationError);
}

TEST_CASE("bundled scenarios load") {
    for (const char* name : {"wifi_n1", "espnow_n3", "ble_n3", "repeated_press"}) {
        const auto spec = load_scenario(std::string(WIRESENS_SOURCE_DIR) + "/scenarios/" + name + ".json");
        CHECK(!spec.devices.empty());
        CHECK(spec.durationUs > 0);
    }
}

}
