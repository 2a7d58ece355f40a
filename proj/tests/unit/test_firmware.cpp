#include <random>

#include "doctest.h"
#include "wiresens/config.hpp"
#include "wiresens/error.hpp"
#include "wiresens/firmware.hpp"
#include "wiresens/packet.hpp"

using namespace wiresens;

namespace {

Frame frame_of(std::vector<std::uint16_t> v, int rows = 1) {
    Frame f;
    f.rows = static_cast<std::uint8_t>(rows);
    f.cols = static_cast<std::uint8_t>(v.size() / static_cast<std::size_t>(rows));
    f.values = std::move(v);
    return f;
}

RawField uniform_field(int rows, int cols, double v) {
    return RawField{rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, v)};
}

}  // namespace

TEST_SUITE("firmware") {

TEST_CASE("prediction examples") {
    CHECK(predict_frame(frame_of({100}), frame_of({129}), 29).values == std::vector<std::uint16_t>{130});
    CHECK(predict_frame(frame_of({130}), frame_of({100}), 29).values == std::vector<std::uint16_t>{99});
    CHECK(predict_frame(frame_of({777, 0}), frame_of({777, 0}), 3).values == std::vector<std::uint16_t>{777, 0});
    CHECK(predict_frame(frame_of({4000}), frame_of({4095}), 1).values == std::vector<std::uint16_t>{4095});
    CHECK(predict_frame(frame_of({100}), frame_of({10}), 1).values == std::vector<std::uint16_t>{0});
}

TEST_CASE("prediction matches frozen oracle vectors") {
    struct V {
        int p;
        std::vector<std::uint16_t> prev, last, want;
    };
    // Generated by tests/oracle/oracle.py.
    const V vectors[] = {
        {31, {1488, 2488, 1640, 3359}, {2172, 2008, 4082, 2901}, {2194, 1993, 4095, 2887}},
        {27, {1786, 2535, 2705, 611}, {1690, 3838, 1215, 1741}, {1687, 3886, 1160, 1782}},
        {27, {479, 2862, 3412, 3816}, {1017, 1138, 2679, 3197}, {1036, 1075, 2652, 3175}},
        {22, {2828, 1647, 2666, 3496}, {3394, 2592, 1753, 3333}, {3419, 2634, 1712, 3326}},
        {15, {1675, 331, 1844, 159}, {2120, 2615, 3449, 917}, {2149, 2767, 3556, 967}},
        {22, {1889, 1933, 3803, 2995}, {1114, 1663, 3021, 4041}, {1079, 1651, 2986, 4088}},
        {39, {1158, 2145, 3172, 2762}, {2748, 3808, 1391, 1081}, {2788, 3850, 1346, 1038}},
        {22, {1695, 536, 802, 1423}, {35, 1234, 3589, 1930}, {0, 1265, 3715, 1953}},
    };
    for (const auto& v : vectors) CHECK(predict_frame(frame_of(v.prev), frame_of(v.last), v.p).values == v.want);
}

TEST_CASE("prediction rejects bad input") {
    CHECK_THROWS_AS(predict_frame(frame_of({1, 2}), frame_of({1}), 2), GeometryError);
    CHECK_THROWS_AS(predict_frame(frame_of({1}), frame_of({1}), 0), DomainError);
}

TEST_CASE("send decision") {
    const Frame a = frame_of({10, 20, 30, 40});
    CHECK_FALSE(should_send(a, a, 0));
    CHECK(should_send(frame_of({10, 20, 30, 41}), a, 0));
    std::vector<std::uint16_t> base(1024, 1000), off(1024, 1005);
    CHECK_FALSE(should_send(frame_of(off, 32), frame_of(base, 32), 5));
    off[0] = 1006;
    CHECK(should_send(frame_of(off, 32), frame_of(base, 32), 5));
    CHECK_THROWS_AS(should_send(a, frame_of({1, 2}), 1), GeometryError);
}

TEST_CASE("scan geometry") {
    DeviceConfig cfg;
    DeviceState s(cfg);
    const RawField field = uniform_field(32, 32, 0.9);
    CHECK(scan_array(s, field).values.size() == 1024);
    s.config.readArea = {{4, 4}, {7, 7}};
    const Frame sub = scan_array(s, field, 123);
    CHECK(sub.values.size() == 16);
    CHECK(sub.rows == 4);
    CHECK(sub.timestampUs == 123);
    CHECK(read_node(s, field, {0, 0}) == 4095);
    CHECK_THROWS_AS(read_node(s, field, {32, 0}), GeometryError);
    s.config.readArea = {{0, 0}, {32, 31}};
    CHECK_THROWS_AS(scan_array(s, field), GeometryError);
}

TEST_CASE("reversed corners scan the same frame") {
    DeviceConfig cfg;
    cfg.rows = cfg.cols = 8;
    cfg.readArea = full_area(8, 8);
    std::mt19937_64 rng(3);
    RawField field = uniform_field(8, 8, 0.9);
    for (auto& v : field.volts) v = 0.9 + static_cast<double>(rng() % 1000) / 1000.0;
    DeviceState a(cfg), b(cfg);
    a.config.readArea = {{1, 2}, {6, 5}};
    b.config.readArea = {{6, 5}, {1, 2}};
    CHECK(scan_array(a, field).values == scan_array(b, field).values);
    b.config.readArea = {{1, 5}, {6, 2}};
    CHECK(scan_array(a, field).values == scan_array(b, field).values);
}

TEST_CASE("saturating force reads zero after calibration") {
    DeviceConfig cfg;
    cfg.rows = cfg.cols = 2;
    cfg.readArea = full_area(2, 2);
    cfg.rPot = 14062.5;
    DeviceState s(cfg);
    CHECK(read_node(s, uniform_field(2, 2, 0.9 + 0.9 / 4.5), {1, 1}) == 0);
    CHECK(read_node(s, uniform_field(2, 2, 3.0), {1, 1}) == 0);
}

TEST_CASE("calibration solve") {
    const double vRef = 0.9;
    CalibrationResult lo = solve_calibration(vRef * (1 - 1 / 4.5), vRef);
    CHECK(lo.rPotApplied == 14062.5);
    CHECK(lo.wiperStep == 36);
    CalibrationResult hi = solve_calibration(vRef * (1 - 1 / 2.875), vRef);
    CHECK(hi.rPotApplied == 8984.375);
    CHECK(hi.wiperStep == 23);
    CalibrationResult unity = solve_calibration(0.0, vRef);
    CHECK(unity.rPotSolved == doctest::Approx(3125.0));
    CHECK(unity.rPotApplied == 3125.0);
    CHECK(unity.wiperStep == 8);
    CHECK_THROWS_AS(solve_calibration(vRef, vRef), CalibrationError);
    // Tiny dynamic range clamps at the top of the pot.
    CHECK(solve_calibration(vRef * 0.999, vRef).wiperStep == 128);
}

TEST_CASE("calibrate consumes a unity-gain stream and applies the result") {
    DeviceConfig cfg;
    cfg.rows = cfg.cols = 4;
    cfg.readArea = full_area(4, 4);
    DeviceState s(cfg);
    std::vector<TimedField> stream;
    CHECK_THROWS_AS(calibrate(s, stream, 1000, 1.0), CalibrationError);
    s.enter_calibration();
    CHECK(s.module.rPot == 3125.0);
    CHECK_THROWS_AS(calibrate(s, stream, 1000, 1.0), CalibrationError);

    for (int k = 0; k < 10; ++k) stream.push_back({static_cast<std::uint64_t>(k) * 100'000, uniform_field(4, 4, 0.9)});
    // One pressed node reaches vRaw = vRef(1 + 1/4.5) in one frame only; q = 1%
    // of 160 samples keeps the lowest two outputs, so place two.
    stream[3].field.volts[5] = 0.9 + 0.9 / 4.5;
    stream[4].field.volts[6] = 0.9 + 0.9 / 4.5;
    const CalibrationResult r = calibrate(s, stream, 5000, 1.0);
    CHECK(r.vMin == doctest::Approx(0.9 - 0.9 / 4.5));
    CHECK(r.rPotApplied == 14062.5);
    CHECK(s.module.rPot == 14062.5);
    CHECK(s.config.rPot == 14062.5);
    CHECK(s.mode == Mode::continuous);

    DeviceState idle(cfg);
    idle.enter_calibration();
    std::vector<TimedField> flat(3, TimedField{0, uniform_field(4, 4, 0.9)});
    CHECK_THROWS_AS(calibrate(idle, flat, 1000, 1.0), CalibrationError);
}

TEST_CASE("calibration window excludes late frames") {
    DeviceConfig cfg;
    cfg.rows = cfg.cols = 1;
    cfg.readArea = full_area(1, 1);
    DeviceState s(cfg);
    s.enter_calibration();
    std::vector<TimedField> stream{{0, uniform_field(1, 1, 1.0)}, {2'000'000, uniform_field(1, 1, 1.8)}};
    const CalibrationResult r = calibrate(s, stream, 1000, 100.0);
    CHECK(r.vMin == doctest::Approx(0.8));
}

TEST_CASE("device step: warm-up, static scene and transients") {
    DeviceConfig cfg;
    cfg.rows = cfg.cols = 4;
    cfg.readArea = full_area(4, 4);
    cfg.intermittent = true;
    cfg.p = 29;
    cfg.d = 2;
    DeviceState s(cfg);
    const RawField idle = uniform_field(4, 4, 0.9);
    CHECK(device_step(s, 0, idle).packet.has_value());
    CHECK(device_step(s, 1, idle).packet.has_value());
    for (int k = 2; k < 20; ++k) CHECK_FALSE(device_step(s, static_cast<std::uint64_t>(k), idle).packet.has_value());
    CHECK(s.packetCounter == 20);
    RawField pressed = idle;
    pressed.volts[5] = 1.5;
    DeviceStep st = device_step(s, 20, pressed);
    REQUIRE(st.packet.has_value());
    CHECK(st.frame.packetId == 20);
    CHECK(decode_packet(*st.packet) == st.frame);
    CHECK(*s.shadowLast == st.frame);
}

TEST_CASE("continuous mode sends every frame") {
    DeviceConfig cfg;
    cfg.rows = cfg.cols = 2;
    cfg.readArea = full_area(2, 2);
    DeviceState s(cfg);
    for (int k = 0; k < 10; ++k) CHECK(device_step(s, 0, uniform_field(2, 2, 0.9)).packet.has_value());
    s.enter_calibration();
    CHECK_THROWS_AS(device_step(s, 0, uniform_field(2, 2, 0.9)), DomainError);
}

TEST_CASE("skipped frames stay within d on average") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        DeviceConfig cfg;
        cfg.rows = cfg.cols = 4;
    cfg.readArea = full_area(4, 4);
        cfg.intermittent = true;
        cfg.p = 1 + static_cast<int>(rng() % 50);
        cfg.d = static_cast<int>(rng() % 60);
        DeviceState s(cfg);
        RawField f = uniform_field(4, 4, 1.0);
        for (int k = 0; k < 40; ++k) {
            for (auto& v : f.volts) v = std::clamp(v + (static_cast<double>(rng() % 2001) - 1000.0) * 1e-5, 0.9, 3.3);
            std::optional<Frame> prev = s.shadowPrev, last = s.shadowLast;
            DeviceStep st = device_step(s, static_cast<std::uint64_t>(k), f);
            if (st.packet) continue;
            const Frame pred = predict_frame(*prev, *last, cfg.p);
            CHECK(abs_error_sum(st.frame.values, pred.values) <= static_cast<std::int64_t>(cfg.d) * 16);
            CHECK(s.shadowLast->values == pred.values);
        }
    }
}

}
