#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wiresens/channel.hpp"
#include "wiresens/config.hpp"
#include "wiresens/sensor.hpp"

namespace wiresens {

struct ScenarioSpec {
    std::vector<DeviceConfig> devices;
    ProtocolModel protocol;
    StimulusScript stimulus;
    std::uint64_t durationUs = 180'000'000;
    std::uint64_t seed = 1;
    std::string outputs = "out";
};

/// Relative paths inside the scenario resolve against `baseDir`.
ScenarioSpec scenario_from_json(const json& j, const std::string& baseDir = ".");
ScenarioSpec load_scenario(const std::string& path);

/// Runs the scenario and writes device_<id>.wrs per device plus stats.json
/// into `outDir`. Returns the trace.
Trace simulate(const ScenarioSpec& spec, const std::string& outDir);

}  // namespace wiresens
