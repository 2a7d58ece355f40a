#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wiresens/types.hpp"

namespace wiresens {

using json = nlohmann::json;

/// Parses either a single device object, an array of device objects, or an
/// object with a "devices" array. Absent fields take the defaults documented
/// in docs/config.md; a missing readArea covers the full geometry.
///
/// Throws ParseError on malformed JSON and ValidationError naming the
/// offending field on invariant violations.
std::vector<DeviceConfig> parse_config(std::string_view jsonText);

DeviceConfig device_config_from_json(const json& j);
json to_json(const DeviceConfig& cfg);
std::string serialize_config(const DeviceConfig& cfg);

/// Throws ValidationError if any invariant is violated.
void validate(const DeviceConfig& cfg);

ReadArea full_area(int rows, int cols);
bool on_pot_grid(double ohms);

/// Shared by every JSON loader in the library.
json parse_json_text(std::string_view text);
std::string read_text_file(const std::string& path);

}  // namespace wiresens
