#include "wiresens/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wiresens/error.hpp"

namespace wiresens {

std::string_view to_string(Protocol p) {
    switch (p) {
        case Protocol::wifi: return "wifi";
        case Protocol::ble: return "ble";
        case Protocol::espnow: return "espnow";
    }
    return "unknown";
}

Protocol protocol_from_string(std::string_view name) {
    if (name == "wifi") return Protocol::wifi;
    if (name == "ble") return Protocol::ble;
    if (name == "espnow") return Protocol::espnow;
    throw ValidationError("protocol", "protocol must be one of wifi, ble, espnow (got '" +
                                          std::string(name) + "')");
}

ReadArea ReadArea::normalized() const {
    return {{std::min(first.readWire, second.readWire), std::min(first.groundWire, second.groundWire)},
            {std::max(first.readWire, second.readWire), std::max(first.groundWire, second.groundWire)}};
}

int ReadArea::rows() const {
    auto n = normalized();
    return n.second.readWire - n.first.readWire + 1;
}

int ReadArea::cols() const {
    auto n = normalized();
    return n.second.groundWire - n.first.groundWire + 1;
}

ReadArea full_area(int rows, int cols) { return {{0, 0}, {rows - 1, cols - 1}}; }

bool on_pot_grid(double ohms) {
    // kPotStepOhms is exactly representable, so grid points divide exactly.
    double steps = ohms / kPotStepOhms;
    return std::isfinite(steps) && steps == std::round(steps);
}

json parse_json_text(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON at byte ") + std::to_string(e.byte) + ": " + e.what(),
                         e.byte);
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

template <class T>
T field(const json& j, const char* name, T fallback) {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return fallback;
    if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ValidationError(name, std::string(name) + " must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer())
            throw ValidationError(name, std::string(name) + " must be an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ValidationError(name, std::string(name) + " must be a number");
    }
    return it->get<T>();
}

Coord coord_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        throw ValidationError("readArea", "readArea corners must be [readWire, groundWire] integer pairs");
    return {j[0].get<int>(), j[1].get<int>()};
}

void require(bool ok, const char* fieldName, const std::string& msg) {
    if (!ok) throw ValidationError(fieldName, msg);
}

}  // namespace

void validate(const DeviceConfig& c) {
    require(c.deviceId >= 0 && c.deviceId <= 255, "deviceId", "deviceId must be in 0..255");
    require(c.rows >= 1, "rows", "rows must be at least 1");
    require(c.rows <= kMaxWires, "rows", "rows exceeds 32");
    require(c.cols >= 1, "cols", "cols must be at least 1");
    require(c.cols <= kMaxWires, "cols", "cols exceeds 32");
    require(c.rows * c.cols <= kMaxNodes, "rows", "rows*cols exceeds 1024");
    require(c.adcBits >= 1 && c.adcBits <= 16, "adcBits", "adcBits must be in 1..16");
    require(c.vRef > 0, "vRef", "vRef must be positive");
    require(c.vRef < c.vSupply, "vRef", "vRef must be below vSupply");
    require(c.p >= 1, "p", "p must be at least 1");
    require(c.d >= 0, "d", "d must be non-negative");
    require(c.scanDelayUs >= 0, "scanDelayUs", "scanDelayUs must be non-negative");
    require(c.nodeReadUs >= 0, "nodeReadUs", "nodeReadUs must be non-negative");
    auto a = c.readArea.normalized();
    require(a.first.readWire >= 0 && a.second.readWire < c.rows && a.first.groundWire >= 0 &&
                a.second.groundWire < c.cols,
            "readArea", "readArea outside sensor geometry");
    require(c.calibration.durationMs > 0, "calibration.durationMs", "calibration.durationMs must be positive");
    require(c.calibration.minPercentile > 0 && c.calibration.minPercentile <= 100,
            "calibration.minPercentile", "calibration.minPercentile must be in (0, 100]");
    require(c.rPot >= kPotStepOhms && c.rPot <= kPotMaxOhms, "rPot", "rPot must be in [390.625, 50000]");
    require(on_pot_grid(c.rPot), "rPot", "rPot must be a multiple of 390.625");
}

DeviceConfig device_config_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("device", "device config must be a JSON object");
    DeviceConfig c;
    c.deviceId = field(j, "deviceId", c.deviceId);
    c.rows = field(j, "rows", c.rows);
    c.cols = field(j, "cols", c.cols);
    c.adcBits = field(j, "adcBits", c.adcBits);
    c.vRef = field(j, "vRef", c.vRef);
    c.vSupply = field(j, "vSupply", c.vSupply);
    if (auto it = j.find("protocol"); it != j.end()) {
        if (!it->is_string()) throw ValidationError("protocol", "protocol must be a string");
        c.protocol = protocol_from_string(it->get<std::string>());
    }
    c.p = field(j, "p", c.p);
    c.d = field(j, "d", c.d);
    c.intermittent = field(j, "intermittent", c.intermittent);
    c.scanDelayUs = field(j, "scanDelayUs", c.scanDelayUs);
    c.nodeReadUs = field(j, "nodeReadUs", c.nodeReadUs);
    if (auto it = j.find("readArea"); it != j.end()) {
        if (!it->is_array() || it->size() != 2)
            throw ValidationError("readArea", "readArea must be [[readWire, groundWire], [readWire, groundWire]]");
        c.readArea = {coord_from_json((*it)[0]), coord_from_json((*it)[1])};
    } else {
        c.readArea = full_area(std::clamp(c.rows, 1, kMaxWires), std::clamp(c.cols, 1, kMaxWires));
    }
    if (auto it = j.find("calibration"); it != j.end()) {
        if (!it->is_object()) throw ValidationError("calibration", "calibration must be an object");
        c.calibration.durationMs = field(*it, "durationMs", c.calibration.durationMs);
        c.calibration.minPercentile = field(*it, "minPercentile", c.calibration.minPercentile);
    }
    c.rPot = field(j, "rPot", c.rPot);
    validate(c);
    return c;
}

std::vector<DeviceConfig> parse_config(std::string_view jsonText) {
    json j = parse_json_text(jsonText);
    const json* list = &j;
    if (j.is_object() && j.contains("devices")) list = &j["devices"];
    std::vector<DeviceConfig> out;
    if (list->is_array()) {
        for (const auto& item : *list) out.push_back(device_config_from_json(item));
    } else {
        out.push_back(device_config_from_json(*list));
    }
    return out;
}

json to_json(const DeviceConfig& c) {
    return {
        {"deviceId", c.deviceId},
        {"rows", c.rows},
        {"cols", c.cols},
        {"adcBits", c.adcBits},
        {"vRef", c.vRef},
        {"vSupply", c.vSupply},
        {"protocol", std::string(to_string(c.protocol))},
        {"p", c.p},
        {"d", c.d},
        {"intermittent", c.intermittent},
        {"scanDelayUs", c.scanDelayUs},
        {"nodeReadUs", c.nodeReadUs},
        {"readArea",
         {{c.readArea.first.readWire, c.readArea.first.groundWire},
          {c.readArea.second.readWire, c.readArea.second.groundWire}}},
        {"calibration", {{"durationMs", c.calibration.durationMs}, {"minPercentile", c.calibration.minPercentile}}},
        {"rPot", c.rPot},
    };
}

std::string serialize_config(const DeviceConfig& cfg) { return to_json(cfg).dump(2); }

}  // namespace wiresens
