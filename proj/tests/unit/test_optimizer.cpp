#include <filesystem>
#include <random>

#include "doctest.h"
#include "wiresens/error.hpp"
#include "wiresens/firmware.hpp"
#include "wiresens/optimizer.hpp"

using namespace wiresens;
namespace fs = std::filesystem;

namespace {

std::vector<Frame> frames_from(const std::vector<std::vector<std::uint16_t>>& rows) {
    std::vector<Frame> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Frame f;
        f.packetId = static_cast<std::uint32_t>(i);
        f.rows = 1;
        f.cols = static_cast<std::uint8_t>(rows[i].size());
        f.values = rows[i];
        out.push_back(f);
    }
    return out;
}

std::vector<Frame> noisy_press(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 3.0);
    std::vector<std::vector<std::uint16_t>> rows;
    for (int i = 0; i < n; ++i) {
        std::vector<std::uint16_t> v(16);
        const bool pressed = (i / 10) % 4 == 1;
        for (std::size_t k = 0; k < v.size(); ++k) {
            const double base = pressed && k < 4 ? 1500.0 : 4000.0;
            v[k] = static_cast<std::uint16_t>(std::clamp(base + noise(rng), 0.0, 4095.0));
        }
        rows.push_back(v);
    }
    return frames_from(rows);
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("frozen oracle replays") {
    // tests/oracle/oracle.py, shadow_replay on the same trace.
    const auto tr = frames_from({{100, 100}, {100, 100}, {101, 99}, {140, 99}, {140, 100}, {141, 100}, {141, 101}, {400, 0}});
    auto s = evaluate_params(tr, 1, 0);
    CHECK(s.r == 1.0);
    CHECK(s.E == 0.0);
    s = evaluate_params(tr, 2, 1);
    CHECK(s.r == 0.625);
    CHECK(s.E == doctest::Approx(0.0001365120865384487).epsilon(1e-12));
    s = evaluate_params(tr, 29, 26);
    CHECK(s.r == 0.375);
    CHECK(s.E == doctest::Approx(0.00494693884734625).epsilon(1e-12));
    s = evaluate_params(tr, 5, 20);
    CHECK(s.r == 0.5);
    CHECK(s.E == doctest::Approx(0.0008633782432070177).epsilon(1e-12));
}

TEST_CASE("constant recording sends only the warm-up frames") {
    const auto tr = frames_from(std::vector<std::vector<std::uint16_t>>(50, {7, 8, 9}));
    for (int d : {0, 1, 50}) {
        const auto s = evaluate_params(tr, 13, d);
        CHECK(s.r == doctest::Approx(2.0 / 50));
        CHECK(s.E == 0.0);
    }
}

TEST_CASE("d = 0 on a changing recording sends everything") {
    std::vector<std::vector<std::uint16_t>> rows;
    for (int i = 0; i < 30; ++i) rows.push_back({static_cast<std::uint16_t>((i * i * 37) % 4096)});
    const auto s = evaluate_params(frames_from(rows), 29, 0);
    CHECK(s.r == 1.0);
    CHECK(s.E == 0.0);
}

TEST_CASE("too-short recordings are rejected") {
    CHECK_THROWS_AS(evaluate_params(frames_from({{1}, {2}}), 1, 1), DomainError);
}

TEST_CASE("a single send decision is monotone in d") {
    const auto tr = noisy_press(60, 4);
    for (std::size_t k = 2; k < tr.size(); ++k) {
        for (int p : {1, 5, 29}) {
            const Frame pred = predict_frame(tr[k - 2], tr[k - 1], p);
            bool prev = true;
            for (int d = 0; d <= 100; ++d) {
                const bool send = should_send(tr[k], pred, d);
                CHECK((prev || !send));
                prev = send;
            }
        }
    }
}

TEST_CASE("r is mostly non-increasing in d on sampled workloads") {
    // Shadow history makes r(d) non-monotone in rare cases: skipping a frame
    // at a larger d can seed a worse extrapolation later.
    int pairs = 0, violations = 0;
    for (std::uint64_t seed : {4u, 5u, 6u}) {
        const auto tr = noisy_press(200, seed);
        for (int p : {1, 5, 29}) {
            double prev = 2.0;
            for (int d = 0; d <= 100; d += 2) {
                const double r = evaluate_params(tr, p, d).r;
                ++pairs;
                if (r > prev) ++violations;
                prev = r;
            }
        }
    }
    CHECK(static_cast<double>(violations) / pairs < 0.1);
    CHECK(evaluate_params(noisy_press(200, 4), 29, 100).r < evaluate_params(noisy_press(200, 4), 29, 0).r);
}

TEST_CASE("known non-monotone case") {
    // Oracle counterexample: at d = 150 the third frame is skipped, the
    // receiver's view overshoots to 450 and both remaining frames are sent.
    const auto tr = frames_from({{0}, {300}, {300}, {200}, {300}});
    CHECK(evaluate_params(tr, 2, 140).r == doctest::Approx(0.6));
    CHECK(evaluate_params(tr, 2, 150).r == doctest::Approx(0.8));
}

TEST_CASE("grid search argmin and alpha extremes") {
    const auto tr = noisy_press(120, 8);
    const auto ps = IntRange{1, 10, 3}.values();
    const auto ds = IntRange{0, 40, 5}.values();
    CHECK(ps == std::vector<int>{1, 4, 7, 10});
    for (double alpha : {0.0, 0.5, 1.0}) {
        const auto s = grid_search(tr, ps, ds, alpha, 12, 2);
        REQUIRE(s.cells.size() == ps.size() * ds.size());
        for (const auto& c : s.cells) {
            CHECK(s.argmin.objective <= c.objective);
            CHECK(c.objective == doctest::Approx(alpha * c.E + (1 - alpha) * c.r));
        }
        if (alpha == 1.0)
            for (const auto& c : s.cells) CHECK(s.argmin.E <= c.E);
        if (alpha == 0.0)
            for (const auto& c : s.cells) CHECK(s.argmin.r <= c.r);
    }
    CHECK_THROWS_AS(grid_search(tr, {}, ds, 0.5), ValidationError);
    CHECK_THROWS_AS(grid_search(tr, ps, ds, 1.5), ValidationError);
    const auto empty = IntRange{5, 1, 1}.values();
    CHECK(empty.empty());
    CHECK_THROWS_AS(grid_search(tr, empty, ds, 0.5), ValidationError);
}

TEST_CASE("grid search does not depend on thread count") {
    const auto tr = noisy_press(80, 2);
    const auto ps = IntRange{1, 30, 1}.values();
    const auto ds = IntRange{0, 30, 3}.values();
    CHECK(grid_search(tr, ps, ds, 0.5, 12, 1) == grid_search(tr, ps, ds, 0.5, 12, 4));
}

TEST_CASE("argmin is no worse than the default parameters") {
    const auto tr = noisy_press(150, 6);
    const auto s = grid_search(tr, IntRange{20, 35, 1}.values(), IntRange{20, 30, 1}.values(), 0.5);
    CHECK(s.argmin.objective <= s.at(29, 26).objective);
    CHECK_THROWS_AS(s.at(1, 1), DomainError);
}

TEST_CASE("surface export round trips") {
    const auto tr = noisy_press(60, 1);
    const auto s = grid_search(tr, {1, 2}, {0, 10}, 0.5);
    const std::string csv = surface_to_csv(s);
    CHECK(csv.rfind("p,d,E,r,objective\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(surface_from_csv(csv, 0.5) == s);
    CHECK(surface_from_json(surface_to_json(s)) == s);

    const auto dir = fs::temp_directory_path() / "wiresens_test_surface";
    fs::create_directories(dir);
    export_surface(s, (dir / "s.csv").string(), SurfaceFormat::csv);
    export_surface(s, (dir / "s.json").string(), SurfaceFormat::json);
    CHECK(load_surface((dir / "s.csv").string(), SurfaceFormat::csv) == s);
    CHECK(load_surface((dir / "s.json").string(), SurfaceFormat::json) == s);
    CHECK_THROWS_AS(surface_from_csv("a,b\n1,2\n", 0.5), ValidationError);
}

}
