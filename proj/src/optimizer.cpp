#include "wiresens/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "wiresens/error.hpp"
#include "wiresens/firmware.hpp"

namespace wiresens {

ParamScore evaluate_params(std::span<const Frame> frames, int p, int d, int adcBits) {
    if (frames.size() < 3) throw DomainError("recording must contain at least 3 frames");
    if (p < 1) throw DomainError("p must be at least 1");
    if (d < 0) throw DomainError("d must be non-negative");
    const std::size_t n = frames.front().values.size();
    for (const auto& f : frames)
        if (!f.same_geometry(frames.front()) || f.values.size() != n)
            throw GeometryError("recording frames differ in geometry");

    const int maxCount = (1 << adcBits) - 1;
    const auto budget = static_cast<std::int64_t>(d) * static_cast<std::int64_t>(n);
    // Receiver-visible history, rotated through three buffers.
    std::vector<std::uint16_t> prev = frames[0].values;
    std::vector<std::uint16_t> last = frames[1].values;
    std::vector<std::uint16_t> pred(n);
    std::size_t sent = 2;
    double sq = 0.0;
    for (std::size_t k = 2; k < frames.size(); ++k) {
        const auto& actual = frames[k].values;
        predict_values(prev, last, p, maxCount, pred);
        if (abs_error_sum(actual, pred) > budget) {
            ++sent;
            std::copy(actual.begin(), actual.end(), pred.begin());
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                const double e = static_cast<double>(pred[i]) - static_cast<double>(actual[i]);
                sq += e * e;
            }
        }
        std::swap(prev, last);
        std::swap(last, pred);
    }
    ParamScore s;
    s.r = static_cast<double>(sent) / static_cast<double>(frames.size());
    s.E = std::sqrt(sq / static_cast<double>(n * frames.size())) / static_cast<double>(maxCount);
    return s;
}

std::vector<int> IntRange::values() const {
    if (step < 1) throw ValidationError("range", "range step must be at least 1");
    std::vector<int> out;
    for (int v = lo; v <= hi; v += step) out.push_back(v);
    return out;
}

const SurfaceCell& OptimizationSurface::at(int p, int d) const {
    auto pi = std::find(pValues.begin(), pValues.end(), p);
    auto di = std::find(dValues.begin(), dValues.end(), d);
    if (pi == pValues.end() || di == dValues.end())
        throw DomainError("(" + std::to_string(p) + ", " + std::to_string(d) + ") not on the grid");
    return cells[static_cast<std::size_t>(pi - pValues.begin()) * dValues.size() +
                 static_cast<std::size_t>(di - dValues.begin())];
}

namespace {

bool better(const SurfaceCell& a, const SurfaceCell& b) {
    if (a.objective != b.objective) return a.objective < b.objective;
    if (a.E != b.E) return a.E < b.E;
    if (a.p != b.p) return a.p < b.p;
    return a.d < b.d;
}

SurfaceCell pick_argmin(const std::vector<SurfaceCell>& cells) {
    SurfaceCell best = cells.front();
    for (const auto& c : cells)
        if (better(c, best)) best = c;
    return best;
}

}  // namespace

OptimizationSurface grid_search(std::span<const Frame> frames, const std::vector<int>& pValues,
                                const std::vector<int>& dValues, double alpha, int adcBits, unsigned threads) {
    if (pValues.empty() || dValues.empty()) throw ValidationError("range", "search ranges must be non-empty");
    if (!(alpha >= 0 && alpha <= 1)) throw ValidationError("alpha", "alpha must be in [0, 1]");
    for (int p : pValues)
        if (p < 1) throw ValidationError("p", "p values must be at least 1");
    for (int d : dValues)
        if (d < 0) throw ValidationError("d", "d values must be non-negative");

    OptimizationSurface s;
    s.pValues = pValues;
    s.dValues = dValues;
    s.alpha = alpha;
    s.cells.resize(pValues.size() * dValues.size());
    for (std::size_t i = 0; i < pValues.size(); ++i)
        for (std::size_t j = 0; j < dValues.size(); ++j) {
            auto& c = s.cells[i * dValues.size() + j];
            c.p = pValues[i];
            c.d = dValues[j];
        }

    // Validate once on the calling thread so errors surface synchronously.
    (void)evaluate_params(frames.first(3), pValues.front(), dValues.front(), adcBits);

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(s.cells.size()));
    auto work = [&](unsigned w) {
        for (std::size_t k = w; k < s.cells.size(); k += threads) {
            auto& c = s.cells[k];
            const ParamScore score = evaluate_params(frames, c.p, c.d, adcBits);
            c.E = score.E;
            c.r = score.r;
            c.objective = alpha * c.E + (1.0 - alpha) * c.r;
        }
    };
    if (threads <= 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    }
    s.argmin = pick_argmin(s.cells);
    return s;
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

OptimizationSurface assemble(std::vector<SurfaceCell> cells, double alpha) {
    OptimizationSurface s;
    s.alpha = alpha;
    for (const auto& c : cells) {
        if (std::find(s.pValues.begin(), s.pValues.end(), c.p) == s.pValues.end()) s.pValues.push_back(c.p);
        if (std::find(s.dValues.begin(), s.dValues.end(), c.d) == s.dValues.end()) s.dValues.push_back(c.d);
    }
    if (cells.size() != s.pValues.size() * s.dValues.size())
        throw ValidationError("surface", "surface rows do not form a complete grid");
    s.cells = std::move(cells);
    if (!s.cells.empty()) s.argmin = pick_argmin(s.cells);
    return s;
}

}  // namespace

std::string surface_to_csv(const OptimizationSurface& s) {
    std::ostringstream os;
    os << "p,d,E,r,objective\n";
    for (const auto& c : s.cells)
        os << c.p << ',' << c.d << ',' << fmt_double(c.E) << ',' << fmt_double(c.r) << ','
           << fmt_double(c.objective) << '\n';
    return os.str();
}

std::string surface_to_json(const OptimizationSurface& s) {
    json cells = json::array();
    for (const auto& c : s.cells)
        cells.push_back({{"p", c.p}, {"d", c.d}, {"E", c.E}, {"r", c.r}, {"objective", c.objective}});
    json j = {{"alpha", s.alpha},
              {"pValues", s.pValues},
              {"dValues", s.dValues},
              {"argmin",
               {{"p", s.argmin.p},
                {"d", s.argmin.d},
                {"E", s.argmin.E},
                {"r", s.argmin.r},
                {"objective", s.argmin.objective}}},
              {"cells", std::move(cells)}};
    return j.dump(1);
}

OptimizationSurface surface_from_csv(const std::string& text, double alpha) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "p,d,E,r,objective")
        throw ValidationError("surface", "surface CSV header must be p,d,E,r,objective");
    std::vector<SurfaceCell> cells;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        SurfaceCell c;
        if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf", &c.p, &c.d, &c.E, &c.r, &c.objective) != 5)
            throw ValidationError("surface", "malformed surface row: " + line);
        cells.push_back(c);
    }
    return assemble(std::move(cells), alpha);
}

OptimizationSurface surface_from_json(const std::string& text) {
    json j = parse_json_text(text);
    std::vector<SurfaceCell> cells;
    for (const auto& c : j.at("cells"))
        cells.push_back({c.at("p").get<int>(), c.at("d").get<int>(), c.at("E").get<double>(),
                         c.at("r").get<double>(), c.at("objective").get<double>()});
    OptimizationSurface s = assemble(std::move(cells), j.at("alpha").get<double>());
    s.pValues = j.at("pValues").get<std::vector<int>>();
    s.dValues = j.at("dValues").get<std::vector<int>>();
    return s;
}

void export_surface(const OptimizationSurface& s, const std::string& path, SurfaceFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << (format == SurfaceFormat::csv ? surface_to_csv(s) : surface_to_json(s));
    if (!out) throw IoError("write failed: " + path);
}

OptimizationSurface load_surface(const std::string& path, SurfaceFormat format, double alpha) {
    const std::string text = read_text_file(path);
    return format == SurfaceFormat::csv ? surface_from_csv(text, alpha) : surface_from_json(text);
}

}  // namespace wiresens
