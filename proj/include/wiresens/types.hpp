#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace wiresens {

inline constexpr int kMaxWires = 32;
inline constexpr int kMaxNodes = 1024;

/// Fixed input resistance of the adaptive amplifier stage; rPot/kInputOhms is the gain.
inline constexpr double kInputOhms = 3125.0;
/// 50 kOhm digital potentiometer, 128 wiper steps.
inline constexpr double kPotMaxOhms = 50000.0;
inline constexpr int kPotSteps = 128;
inline constexpr double kPotStepOhms = kPotMaxOhms / kPotSteps;  // 390.625

enum class Protocol : std::uint8_t { wifi, ble, espnow };

std::string_view to_string(Protocol p);
Protocol protocol_from_string(std::string_view name);

/// (readWire, groundWire) selection. readWire indexes rows, groundWire columns.
struct Coord {
    int readWire = 0;
    int groundWire = 0;

    friend bool operator==(const Coord&, const Coord&) = default;
};

struct ReadArea {
    Coord first;
    Coord second;

    /// Corner-ordered copy: first <= second componentwise.
    ReadArea normalized() const;
    int rows() const;
    int cols() const;

    friend bool operator==(const ReadArea&, const ReadArea&) = default;
};

struct CalibrationSettings {
    int durationMs = 5000;
    double minPercentile = 1.0;  // q in (0, 100]

    friend bool operator==(const CalibrationSettings&, const CalibrationSettings&) = default;
};

struct DeviceConfig {
    int deviceId = 0;
    int rows = 32;
    int cols = 32;
    int adcBits = 12;
    double vRef = 0.9;
    double vSupply = 3.3;
    Protocol protocol = Protocol::wifi;
    int p = 29;
    int d = 26;
    bool intermittent = false;
    std::int64_t scanDelayUs = 0;
    std::int64_t nodeReadUs = 10;
    ReadArea readArea{{0, 0}, {31, 31}};
    CalibrationSettings calibration;
    double rPot = kInputOhms;

    int adc_max() const { return (1 << adcBits) - 1; }

    friend bool operator==(const DeviceConfig&, const DeviceConfig&) = default;
};

/// One scan of a read area in ADC counts, row-major.
struct Frame {
    std::uint8_t deviceId = 0;
    std::uint32_t packetId = 0;
    std::uint64_t timestampUs = 0;
    std::uint8_t rows = 0;
    std::uint8_t cols = 0;
    std::vector<std::uint16_t> values;
    bool reconstructed = false;

    std::size_t size() const { return values.size(); }
    bool same_geometry(const Frame& other) const {
        return rows == other.rows && cols == other.cols;
    }

    friend bool operator==(const Frame&, const Frame&) = default;
};

}  // namespace wiresens
