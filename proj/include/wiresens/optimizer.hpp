#pragma once

#include <span>
#include <string>
#include <vector>

#include "wiresens/config.hpp"
#include "wiresens/types.hpp"

namespace wiresens {

struct ParamScore {
    double E = 0.0;  // NRMSE of the receiver view against the recording
    double r = 0.0;  // fraction of frames transmitted
};

/// Replays the device's intermittent-send decision over `frames` (treated as
/// ground truth) on a lossless channel and scores the receiver's view.
/// Requires at least 3 frames of identical geometry.
ParamScore evaluate_params(std::span<const Frame> frames, int p, int d, int adcBits = 12);

struct SurfaceCell {
    int p = 0;
    int d = 0;
    double E = 0.0;
    double r = 0.0;
    double objective = 0.0;

    friend bool operator==(const SurfaceCell&, const SurfaceCell&) = default;
};

struct OptimizationSurface {
    std::vector<int> pValues;
    std::vector<int> dValues;
    double alpha = 0.5;
    std::vector<SurfaceCell> cells;  // p-major: cells[i * dValues.size() + j]
    SurfaceCell argmin;

    const SurfaceCell& at(int p, int d) const;

    friend bool operator==(const OptimizationSurface&, const OptimizationSurface&) = default;
};

struct IntRange {
    int lo = 0;
    int hi = 0;  // inclusive
    int step = 1;

    std::vector<int> values() const;
};

/// Exhaustive search minimizing alpha * E + (1 - alpha) * r. Ties resolve to the
/// lower E, then the lexicographically smaller (p, d). `threads` = 0 picks
/// hardware concurrency; results do not depend on it.
OptimizationSurface grid_search(std::span<const Frame> frames, const std::vector<int>& pValues,
                                const std::vector<int>& dValues, double alpha, int adcBits = 12,
                                unsigned threads = 0);

enum class SurfaceFormat { csv, json };

std::string surface_to_csv(const OptimizationSurface& s);
std::string surface_to_json(const OptimizationSurface& s);
OptimizationSurface surface_from_csv(const std::string& text, double alpha);
OptimizationSurface surface_from_json(const std::string& text);

void export_surface(const OptimizationSurface& s, const std::string& path, SurfaceFormat format);
OptimizationSurface load_surface(const std::string& path, SurfaceFormat format, double alpha = 0.5);

}  // namespace wiresens
