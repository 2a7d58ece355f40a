#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "wiresens/packet.hpp"
#include "wiresens/sensor.hpp"
#include "wiresens/types.hpp"

namespace wiresens {

enum class Mode : std::uint8_t { continuous, intermittent, calibrating };

struct CalibrationResult {
    double vMin = 0.0;
    double rPotSolved = 0.0;
    double rPotApplied = 0.0;
    int wiperStep = 0;
};

/// Simulated device. Shadow frames mirror exactly what the receiver holds
/// (sent frames, or the prediction it will make for a skipped one).
struct DeviceState {
    DeviceConfig config;
    AdaptiveModule module;
    std::optional<Frame> shadowPrev;
    std::optional<Frame> shadowLast;
    std::uint32_t packetCounter = 0;
    Mode mode = Mode::continuous;
    std::vector<double> calibSamples;

    explicit DeviceState(const DeviceConfig& cfg);

    /// Switches to unity gain and clears the calibration accumulator.
    void enter_calibration();
    Mode operating_mode() const { return config.intermittent ? Mode::intermittent : Mode::continuous; }
};

Frame scan_array(const DeviceState& state, const RawField& field, std::uint64_t tUs = 0);
int read_node(const DeviceState& state, const RawField& field, Coord coord);

/// Per node: last + trunc((last - prev) / p), clamped to [0, 2^adcBits - 1].
Frame predict_frame(const Frame& prev, const Frame& last, int p, int adcBits = 12);
void predict_values(std::span<const std::uint16_t> prev, std::span<const std::uint16_t> last, int p, int maxCount,
                    std::span<std::uint16_t> out);

std::int64_t abs_error_sum(std::span<const std::uint16_t> a, std::span<const std::uint16_t> b);

/// True iff sum|actual - predicted| > d * N, i.e. the frame is sent unless
/// its mean absolute prediction error is at most d.
bool should_send(const Frame& actual, const Frame& predicted, int d);

struct TimedField {
    std::uint64_t tUs = 0;
    RawField field;
};

/// Solves for the pot resistance that drives vOut to 0 at vMin, then floors
/// it onto the wiper grid (clamped to [1, 128] steps).
CalibrationResult solve_calibration(double vMin, double vRef);

/// Requires state.mode == calibrating. Consumes fields whose timestamps fall
/// within durationMs of the first one, averages the lowest q% of unity-gain
/// output voltages, and applies the solved rPot to the state.
CalibrationResult calibrate(DeviceState& state, std::span<const TimedField> stream, int durationMs,
                            double minPercentile);

struct DeviceStep {
    Frame frame;                 // the scan as read, packetId assigned
    std::optional<Bytes> packet; // present when transmitted
};

/// One scan/decide/emit cycle. packetCounter increments whether or not the
/// frame is sent.
DeviceStep device_step(DeviceState& state, std::uint64_t tUs, const RawField& field);

}  // namespace wiresens
