#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "wiresens/config.hpp"
#include "wiresens/types.hpp"

namespace wiresens {

/// Piezoresistive node model: conductance grows linearly with force, with a
/// shallower slope above breakForceN.
struct MatrixModel {
    double r0 = 50000.0;       // unloaded node resistance, ohms
    double kLow = 4.0e-7;      // siemens per newton below breakForceN
    double kHigh = 1.6e-7;     // siemens per newton above breakForceN
    double breakForceN = 100.0;

    friend bool operator==(const MatrixModel&, const MatrixModel&) = default;
};

void validate(const MatrixModel& m);

/// Inverting variable-gain stage; gain = rPot / kInputOhms.
struct AdaptiveModule {
    double rPot = kInputOhms;
    double vRef = 0.9;
    double vSupply = 3.3;

    double gain() const { return rPot / kInputOhms; }
};

/// Raw electrode voltage in [vRef, vSupply); equals vRef at zero force.
double node_raw_voltage(double forceN, const MatrixModel& model, double vRef, double vSupply);

/// vOut = clamp(vRef - gain * (vRaw - vRef), 0, vRef).
/// Throws DomainError if vRaw is outside [vRef, vSupply].
double adaptive_transfer(double vRaw, const AdaptiveModule& module);

/// Round-half-up quantization of vOut in [0, vRef], clamped to the ADC range.
int adc_quantize(double vOut, double vRef, int adcBits);

enum class Profile : std::uint8_t { step, ramp, sine };

struct StimulusEvent {
    std::uint64_t tStartUs = 0;
    std::uint64_t tEndUs = 0;
    Coord from;  // inclusive rectangle corners (row, col)
    Coord to;
    double forceN = 0.0;
    Profile profile = Profile::step;

    /// Force contributed at time t; zero outside [tStartUs, tEndUs).
    double force_at(std::uint64_t tUs) const;
    bool covers(int row, int col) const;
};

struct StimulusScript {
    std::vector<StimulusEvent> events;
    /// Gaussian noise stddev, in ADC counts at unity gain; applied to raw volts.
    double noiseStddevCounts = 0.0;
    MatrixModel model;
    std::uint64_t horizonUs = 0;

    /// Throws ValidationError if an event is malformed or falls outside rows x cols.
    void validate(int rows, int cols) const;
};

StimulusScript stimulus_from_json(const json& j);
json to_json(const StimulusScript& s);
StimulusScript load_stimulus(const std::string& path);

/// Named scenario presets: "idle", "low pressure", "high pressure", "repeated press".
StimulusScript stimulus_preset(std::string_view name, int rows, int cols, std::uint64_t durationUs);

struct RawField {
    int rows = 0;
    int cols = 0;
    std::vector<double> volts;  // row-major

    double at(int r, int c) const { return volts[static_cast<std::size_t>(r) * cols + c]; }
};

/// Per-device render state. Owns its RNG stream; not shared between devices.
class RenderContext {
public:
    RenderContext(StimulusScript script, double vRef, double vSupply, int adcBits, std::uint64_t seed);

    RawField render(std::uint64_t tUs, int rows, int cols);
    const StimulusScript& script() const { return script_; }

private:
    StimulusScript script_;
    double vRef_;
    double vSupply_;
    double noiseVolts_;
    std::mt19937_64 rng_;
};

/// Stateless convenience: builds a fresh RenderContext and renders once.
RawField render_raw_field(const StimulusScript& script, std::uint64_t tUs, int rows, int cols, double vRef,
                          double vSupply, int adcBits, std::uint64_t seed);

}  // namespace wiresens
