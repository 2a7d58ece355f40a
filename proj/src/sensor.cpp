#include "wiresens/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wiresens/error.hpp"

namespace wiresens {

void validate(const MatrixModel& m) {
    if (!(m.r0 > 0)) throw ValidationError("model.r0", "model.r0 must be positive");
    if (!(m.kHigh > 0)) throw ValidationError("model.kHigh", "model.kHigh must be positive");
    if (!(m.kLow > m.kHigh)) throw ValidationError("model.kLow", "model.kLow must exceed model.kHigh");
    if (!(m.breakForceN > 0)) throw ValidationError("model.breakForceN", "model.breakForceN must be positive");
}

double node_raw_voltage(double forceN, const MatrixModel& m, double vRef, double vSupply) {
    const double f = std::max(0.0, forceN);
    double g = 1.0 / m.r0;
    if (f <= m.breakForceN) {
        g += m.kLow * f;
    } else {
        g += m.kLow * m.breakForceN + m.kHigh * (f - m.breakForceN);
    }
    // 1 - r/r0 with r = 1/g, written so that zero force gives exactly vRef.
    const double x = g * m.r0 - 1.0;
    return vRef + (vSupply - vRef) * (x / (1.0 + x));
}

double adaptive_transfer(double vRaw, const AdaptiveModule& module) {
    if (!(vRaw >= module.vRef && vRaw <= module.vSupply))
        throw DomainError("vRaw " + std::to_string(vRaw) + " outside [vRef, vSupply]");
    const double v = module.vRef - module.gain() * (vRaw - module.vRef);
    return std::clamp(v, 0.0, module.vRef);
}

int adc_quantize(double vOut, double vRef, int adcBits) {
    const int maxCount = (1 << adcBits) - 1;
    const double counts = std::floor(vOut / vRef * maxCount + 0.5);
    return static_cast<int>(std::clamp(counts, 0.0, static_cast<double>(maxCount)));
}

double StimulusEvent::force_at(std::uint64_t tUs) const {
    if (tUs < tStartUs || tUs >= tEndUs) return 0.0;
    const double u = static_cast<double>(tUs - tStartUs) / static_cast<double>(tEndUs - tStartUs);
    switch (profile) {
        case Profile::step: return forceN;
        case Profile::ramp: return forceN * u;
        case Profile::sine: return forceN * std::sin(std::numbers::pi * u);
    }
    return 0.0;
}

bool StimulusEvent::covers(int row, int col) const {
    return row >= std::min(from.readWire, to.readWire) && row <= std::max(from.readWire, to.readWire) &&
           col >= std::min(from.groundWire, to.groundWire) && col <= std::max(from.groundWire, to.groundWire);
}

void StimulusScript::validate(int rows, int cols) const {
    wiresens::validate(model);
    if (noiseStddevCounts < 0) throw ValidationError("noiseStddevCounts", "noiseStddevCounts must be >= 0");
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        const std::string where = "events[" + std::to_string(i) + "]";
        if (e.tStartUs >= e.tEndUs) throw ValidationError(where, where + ": tStartUs must be < tEndUs");
        if (e.forceN < 0) throw ValidationError(where, where + ": forceN must be >= 0");
        for (const Coord& c : {e.from, e.to}) {
            if (c.readWire < 0 || c.readWire >= rows || c.groundWire < 0 || c.groundWire >= cols)
                throw ValidationError(where, where + ": region outside geometry");
        }
    }
}

namespace {

Profile profile_from_string(const std::string& s) {
    if (s == "step") return Profile::step;
    if (s == "ramp") return Profile::ramp;
    if (s == "sine") return Profile::sine;
    throw ValidationError("profile", "profile must be one of step, ramp, sine");
}

const char* profile_name(Profile p) {
    switch (p) {
        case Profile::step: return "step";
        case Profile::ramp: return "ramp";
        case Profile::sine: return "sine";
    }
    return "step";
}

}  // namespace

StimulusScript stimulus_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("stimulus", "stimulus must be a JSON object");
    StimulusScript s;
    if (j.contains("preset")) {
        s = stimulus_preset(j.at("preset").get<std::string>(), j.value("rows", 32), j.value("cols", 32),
                            j.value<std::uint64_t>("durationUs", 60'000'000));
    }
    s.noiseStddevCounts = j.value("noiseStddevCounts", s.noiseStddevCounts);
    s.horizonUs = j.value("horizonUs", s.horizonUs);
    if (auto it = j.find("model"); it != j.end()) {
        s.model.r0 = it->value("r0", s.model.r0);
        s.model.kLow = it->value("kLow", s.model.kLow);
        s.model.kHigh = it->value("kHigh", s.model.kHigh);
        s.model.breakForceN = it->value("breakForceN", s.model.breakForceN);
    }
    if (auto it = j.find("events"); it != j.end()) {
        for (const auto& e : *it) {
            StimulusEvent ev;
            ev.tStartUs = e.at("tStartUs").get<std::uint64_t>();
            ev.tEndUs = e.at("tEndUs").get<std::uint64_t>();
            const auto& region = e.at("region");
            ev.from = {region.at(0).at(0).get<int>(), region.at(0).at(1).get<int>()};
            ev.to = {region.at(1).at(0).get<int>(), region.at(1).at(1).get<int>()};
            ev.forceN = e.at("forceN").get<double>();
            ev.profile = profile_from_string(e.value("profile", std::string("step")));
            s.events.push_back(ev);
            s.horizonUs = std::max(s.horizonUs, ev.tEndUs);
        }
    }
    return s;
}

json to_json(const StimulusScript& s) {
    json events = json::array();
    for (const auto& e : s.events) {
        events.push_back({{"tStartUs", e.tStartUs},
                          {"tEndUs", e.tEndUs},
                          {"region", {{e.from.readWire, e.from.groundWire}, {e.to.readWire, e.to.groundWire}}},
                          {"forceN", e.forceN},
                          {"profile", profile_name(e.profile)}});
    }
    return {{"noiseStddevCounts", s.noiseStddevCounts},
            {"horizonUs", s.horizonUs},
            {"model",
             {{"r0", s.model.r0}, {"kLow", s.model.kLow}, {"kHigh", s.model.kHigh}, {"breakForceN", s.model.breakForceN}}},
            {"events", std::move(events)}};
}

StimulusScript load_stimulus(const std::string& path) {
    try {
        return stimulus_from_json(parse_json_text(read_text_file(path)));
    } catch (const json::exception& e) {
        throw ValidationError("stimulus", path + ": " + e.what());
    }
}

StimulusScript stimulus_preset(std::string_view name, int rows, int cols, std::uint64_t durationUs) {
    StimulusScript s;
    s.horizonUs = durationUs;
    s.noiseStddevCounts = 2.0;
    // Centered 4x4 patch, matching the calibration experiments.
    auto patch = [&](int h, int w) {
        h = std::clamp(h, 1, rows);
        w = std::clamp(w, 1, cols);
        Coord from{(rows - h) / 2, (cols - w) / 2};
        return std::pair{from, Coord{from.readWire + h - 1, from.groundWire + w - 1}};
    };
    auto presses = [&](int h, int w, double forceN, std::uint64_t periodUs, std::uint64_t onUs,
                       std::uint64_t offsetUs, Profile profile) {
        auto [from, to] = patch(h, w);
        for (std::uint64_t t = offsetUs; t + onUs <= durationUs; t += periodUs)
            s.events.push_back({t, t + onUs, from, to, forceN, profile});
    };

    if (name == "idle") {
        return s;
    }
    if (name == "low pressure") {
        presses(4, 4, 20.0, 4'000'000, 2'000'000, 1'000'000, Profile::sine);
        return s;
    }
    if (name == "high pressure") {
        presses(4, 4, 250.0, 4'000'000, 2'000'000, 1'000'000, Profile::sine);
        return s;
    }
    if (name == "repeated press") {
        // 1.5 s held press every 10 s: 85% idle.
        presses(rows / 3, cols / 3, 25.0, 10'000'000, 1'500'000, 2'000'000, Profile::step);
        return s;
    }
    throw ValidationError("preset", "unknown stimulus preset '" + std::string(name) + "'");
}

RenderContext::RenderContext(StimulusScript script, double vRef, double vSupply, int adcBits, std::uint64_t seed)
    : script_(std::move(script)),
      vRef_(vRef),
      vSupply_(vSupply),
      noiseVolts_(script_.noiseStddevCounts * vRef / ((1 << adcBits) - 1)),
      rng_(seed) {}

RawField RenderContext::render(std::uint64_t tUs, int rows, int cols) {
    RawField field{rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0)};
    std::vector<double> force(field.volts.size(), 0.0);
    for (const auto& e : script_.events) {
        const double f = e.force_at(tUs);
        if (f <= 0.0) continue;
        const int r0 = std::max(0, std::min(e.from.readWire, e.to.readWire));
        const int r1 = std::min(rows - 1, std::max(e.from.readWire, e.to.readWire));
        const int c0 = std::max(0, std::min(e.from.groundWire, e.to.groundWire));
        const int c1 = std::min(cols - 1, std::max(e.from.groundWire, e.to.groundWire));
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c) force[static_cast<std::size_t>(r) * cols + c] += f;
    }
    std::normal_distribution<double> noise(0.0, noiseVolts_);
    for (std::size_t i = 0; i < force.size(); ++i) {
        double v = force[i] > 0.0 ? node_raw_voltage(force[i], script_.model, vRef_, vSupply_) : vRef_;
        if (noiseVolts_ > 0.0) v += noise(rng_);
        field.volts[i] = std::clamp(v, vRef_, vSupply_);
    }
    return field;
}

RawField render_raw_field(const StimulusScript& script, std::uint64_t tUs, int rows, int cols, double vRef,
                          double vSupply, int adcBits, std::uint64_t seed) {
    RenderContext ctx(script, vRef, vSupply, adcBits, seed);
    return ctx.render(tUs, rows, cols);
}

}  // namespace wiresens
