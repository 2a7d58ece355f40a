#include "wiresens/scenario.hpp"

#include <filesystem>
#include <fstream>

#include "wiresens/error.hpp"
#include "wiresens/receiver.hpp"

namespace wiresens {

namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& baseDir, const std::string& p) {
    fs::path path(p);
    if (path.is_relative()) path = fs::path(baseDir) / path;
    if (!fs::exists(path)) throw ValidationError("path", "referenced file does not exist: " + path.string());
    return path.string();
}

json load_json_file(const std::string& path) { return parse_json_text(read_text_file(path)); }

}  // namespace

ScenarioSpec scenario_from_json(const json& j, const std::string& baseDir) {
    if (!j.is_object()) throw ValidationError("scenario", "scenario must be a JSON object");
    ScenarioSpec s;
    try {
        s.durationUs = j.value("durationUs", s.durationUs);
        s.seed = j.value("seed", s.seed);
        s.outputs = j.value("outputs", s.outputs);
    } catch (const json::type_error& e) {
        throw ValidationError("scenario", e.what());
    }

    const auto devIt = j.find("devices");
    if (devIt == j.end()) throw ValidationError("devices", "scenario requires a devices list");
    json devices = devIt->is_string() ? load_json_file(resolve(baseDir, devIt->get<std::string>())) : *devIt;
    if (devices.is_object() && devices.contains("devices")) devices = devices["devices"];
    if (!devices.is_array()) throw ValidationError("devices", "devices must be an array");
    for (const auto& d : devices) s.devices.push_back(device_config_from_json(d));
    if (s.devices.empty() || s.devices.size() > 5)
        throw ValidationError("devices", "scenario needs 1 to 5 devices (got " + std::to_string(s.devices.size()) + ")");

    if (auto it = j.find("protocol"); it != j.end()) {
        if (it->is_object() && it->contains("file")) {
            s.protocol = protocol_model_from_json(load_json_file(resolve(baseDir, it->at("file").get<std::string>())));
        } else {
            s.protocol = protocol_model_from_json(*it);
        }
    } else {
        s.protocol = default_protocol_model(s.devices.front().protocol);
    }

    const int rows = s.devices.front().rows;
    const int cols = s.devices.front().cols;
    if (auto it = j.find("stimulus"); it != j.end()) {
        if (it->is_string()) {
            s.stimulus = load_stimulus(resolve(baseDir, it->get<std::string>()));
        } else {
            json st = *it;
            if (st.contains("preset")) {
                st["rows"] = st.value("rows", rows);
                st["cols"] = st.value("cols", cols);
                st["durationUs"] = st.value("durationUs", s.durationUs);
            }
            try {
                s.stimulus = stimulus_from_json(st);
            } catch (const json::exception& e) {
                throw ValidationError("stimulus", e.what());
            }
        }
    } else {
        s.stimulus = stimulus_preset("idle", rows, cols, s.durationUs);
    }
    for (const auto& d : s.devices) s.stimulus.validate(d.rows, d.cols);
    return s;
}

ScenarioSpec load_scenario(const std::string& path) {
    const json j = load_json_file(path);
    return scenario_from_json(j, fs::path(path).parent_path().string());
}

Trace simulate(const ScenarioSpec& spec, const std::string& outDir) {
    Trace trace = run_scenario(spec.devices, spec.protocol, spec.stimulus, spec.durationUs, spec.seed);
    std::error_code ec;
    fs::create_directories(outDir, ec);
    if (ec) throw IoError("cannot create " + outDir + ": " + ec.message());

    std::map<int, std::vector<Frame>> byDevice;
    for (const auto& d : spec.devices) byDevice[d.deviceId] = trace.received[d.deviceId];
    record(byDevice, outDir, spec.devices.front().adcBits);
    for (const auto& d : spec.devices) {
        // Empty sessions still need the configured geometry in the header.
        if (!trace.received[d.deviceId].empty()) continue;
        const ReadArea a = d.readArea.normalized();
        write_recording(recording_path(outDir, d.deviceId),
                        {static_cast<std::uint8_t>(d.deviceId), static_cast<std::uint8_t>(a.rows()),
                         static_cast<std::uint8_t>(a.cols()), static_cast<std::uint8_t>(d.adcBits)},
                        {});
    }

    const std::string statsPath = (fs::path(outDir) / "stats.json").string();
    std::ofstream out(statsPath, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + statsPath + " for writing");
    out << stats_json(trace).dump(2) << '\n';
    if (!out) throw IoError("write failed: " + statsPath);
    return trace;
}

}  // namespace wiresens
