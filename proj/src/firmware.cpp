#include "wiresens/firmware.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "wiresens/error.hpp"

namespace wiresens {

DeviceState::DeviceState(const DeviceConfig& cfg)
    : config(cfg), module{cfg.rPot, cfg.vRef, cfg.vSupply}, mode(operating_mode()) {}

void DeviceState::enter_calibration() {
    mode = Mode::calibrating;
    module.rPot = kInputOhms;
    calibSamples.clear();
}

namespace {

ReadArea checked_area(const DeviceState& s, const RawField& field) {
    ReadArea a = s.config.readArea.normalized();
    if (a.first.readWire < 0 || a.first.groundWire < 0 || a.second.readWire >= s.config.rows ||
        a.second.groundWire >= s.config.cols)
        throw GeometryError("read area outside sensor geometry");
    if (field.rows < s.config.rows || field.cols < s.config.cols)
        throw GeometryError("raw field smaller than sensor geometry");
    return a;
}

void require_same_geometry(const Frame& a, const Frame& b) {
    if (!a.same_geometry(b) || a.values.size() != b.values.size())
        throw GeometryError("frame geometry mismatch");
}

}  // namespace

Frame scan_array(const DeviceState& s, const RawField& field, std::uint64_t tUs) {
    const ReadArea a = checked_area(s, field);
    Frame f;
    f.deviceId = static_cast<std::uint8_t>(s.config.deviceId);
    f.timestampUs = tUs;
    f.rows = static_cast<std::uint8_t>(a.rows());
    f.cols = static_cast<std::uint8_t>(a.cols());
    f.values.reserve(static_cast<std::size_t>(f.rows) * f.cols);
    for (int r = a.first.readWire; r <= a.second.readWire; ++r) {
        for (int c = a.first.groundWire; c <= a.second.groundWire; ++c) {
            const double vOut = adaptive_transfer(field.at(r, c), s.module);
            f.values.push_back(static_cast<std::uint16_t>(adc_quantize(vOut, s.module.vRef, s.config.adcBits)));
        }
    }
    return f;
}

int read_node(const DeviceState& s, const RawField& field, Coord coord) {
    if (coord.readWire < 0 || coord.readWire >= s.config.rows || coord.groundWire < 0 ||
        coord.groundWire >= s.config.cols || coord.readWire >= field.rows || coord.groundWire >= field.cols)
        throw GeometryError("coordinate (" + std::to_string(coord.readWire) + ", " +
                            std::to_string(coord.groundWire) + ") outside sensor geometry");
    const double vOut = adaptive_transfer(field.at(coord.readWire, coord.groundWire), s.module);
    return adc_quantize(vOut, s.module.vRef, s.config.adcBits);
}

void predict_values(std::span<const std::uint16_t> prev, std::span<const std::uint16_t> last, int p, int maxCount,
                    std::span<std::uint16_t> out) {
    for (std::size_t i = 0; i < last.size(); ++i) {
        const int delta = static_cast<int>(last[i]) - static_cast<int>(prev[i]);
        // C++ integer division truncates toward zero.
        const int v = static_cast<int>(last[i]) + (delta == 0 ? 0 : delta / p);
        out[i] = static_cast<std::uint16_t>(std::clamp(v, 0, maxCount));
    }
}

Frame predict_frame(const Frame& prev, const Frame& last, int p, int adcBits) {
    require_same_geometry(prev, last);
    if (p < 1) throw DomainError("p must be at least 1");
    Frame out = last;
    out.reconstructed = true;
    predict_values(prev.values, last.values, p, (1 << adcBits) - 1, out.values);
    return out;
}

std::int64_t abs_error_sum(std::span<const std::uint16_t> a, std::span<const std::uint16_t> b) {
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(static_cast<int>(a[i]) - static_cast<int>(b[i]));
    return sum;
}

bool should_send(const Frame& actual, const Frame& predicted, int d) {
    require_same_geometry(actual, predicted);
    if (d < 0) throw DomainError("d must be non-negative");
    return abs_error_sum(actual.values, predicted.values) >
           static_cast<std::int64_t>(d) * static_cast<std::int64_t>(actual.values.size());
}

CalibrationResult solve_calibration(double vMin, double vRef) {
    if (!(vMin < vRef)) throw CalibrationError("no dynamic range observed");
    CalibrationResult r;
    r.vMin = vMin;
    r.rPotSolved = kInputOhms * vRef / (vRef - vMin);
    // Relative slack absorbs rounding when the solution lands on a grid point.
    const double steps = std::floor(r.rPotSolved / kPotStepOhms * (1.0 + 1e-12));
    r.wiperStep = static_cast<int>(std::clamp(steps, 1.0, static_cast<double>(kPotSteps)));
    r.rPotApplied = r.wiperStep * kPotStepOhms;
    return r;
}

CalibrationResult calibrate(DeviceState& s, std::span<const TimedField> stream, int durationMs,
                            double minPercentile) {
    if (s.mode != Mode::calibrating) throw CalibrationError("device is not in calibrating mode");
    if (durationMs <= 0) throw CalibrationError("calibration duration must be positive");
    if (!(minPercentile > 0 && minPercentile <= 100)) throw CalibrationError("minPercentile must be in (0, 100]");
    if (stream.empty()) throw CalibrationError("calibration window collected no frames");

    const AdaptiveModule unity{kInputOhms, s.config.vRef, s.config.vSupply};
    const std::uint64_t t0 = stream.front().tUs;
    const std::uint64_t tEnd = t0 + static_cast<std::uint64_t>(durationMs) * 1000;
    std::size_t frames = 0;
    for (const auto& tf : stream) {
        if (tf.tUs < t0 || tf.tUs >= tEnd) continue;
        const ReadArea a = checked_area(s, tf.field);
        for (int r = a.first.readWire; r <= a.second.readWire; ++r)
            for (int c = a.first.groundWire; c <= a.second.groundWire; ++c)
                s.calibSamples.push_back(adaptive_transfer(tf.field.at(r, c), unity));
        ++frames;
    }
    if (frames == 0) throw CalibrationError("calibration window collected no frames");

    // Full sort keeps the sum independent of the observation order.
    std::vector<double> samples = s.calibSamples;
    std::sort(samples.begin(), samples.end());
    const auto k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(minPercentile / 100.0 * static_cast<double>(samples.size()))));
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += samples[i];
    const double vMin = sum / static_cast<double>(k);

    CalibrationResult result = solve_calibration(vMin, s.config.vRef);
    s.module.rPot = result.rPotApplied;
    s.config.rPot = result.rPotApplied;
    s.calibSamples.clear();
    s.mode = s.operating_mode();
    return result;
}

DeviceStep device_step(DeviceState& s, std::uint64_t tUs, const RawField& field) {
    if (s.mode == Mode::calibrating) throw DomainError("device_step called while calibrating");
    DeviceStep step;
    step.frame = scan_array(s, field, tUs);
    step.frame.packetId = s.packetCounter;

    bool send = true;
    Frame visible = step.frame;
    if (s.mode == Mode::intermittent && s.shadowPrev && s.shadowLast) {
        Frame predicted = predict_frame(*s.shadowPrev, *s.shadowLast, s.config.p, s.config.adcBits);
        predicted.packetId = s.packetCounter;
        predicted.timestampUs = tUs;
        if (!should_send(step.frame, predicted, s.config.d)) {
            send = false;
            visible = std::move(predicted);
        }
    }
    if (send) step.packet = encode_packet(step.frame, s.config.adcBits);
    s.shadowPrev = std::move(s.shadowLast);
    s.shadowLast = std::move(visible);
    ++s.packetCounter;
    return step;
}

}  // namespace wiresens
