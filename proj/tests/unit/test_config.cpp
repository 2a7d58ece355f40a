#include "doctest.h"
#include "wiresens/config.hpp"
#include "wiresens/error.hpp"

using namespace wiresens;

TEST_SUITE("config") {

TEST_CASE("minimal config fills defaults") {
    auto devs = parse_config(R"({"deviceId":1,"rows":32,"cols":32,"protocol":"wifi"})");
    REQUIRE(devs.size() == 1);
    const DeviceConfig& c = devs[0];
    CHECK(c.deviceId == 1);
    CHECK(c.adcBits == 12);
    CHECK(c.p == 29);
    CHECK(c.d == 26);
    CHECK(c.rPot == 3125.0);
    CHECK(c.calibration.durationMs == 5000);
    CHECK(c.readArea == ReadArea{{0, 0}, {31, 31}});
}

TEST_CASE("missing readArea covers the configured geometry") {
    auto c = parse_config(R"({"rows":8,"cols":4})").front();
    CHECK(c.readArea == full_area(8, 4));
    CHECK(c.readArea.rows() == 8);
    CHECK(c.readArea.cols() == 4);
}

TEST_CASE("rows above 32 name the field") {
    try {
        parse_config(R"({"rows":33,"cols":32})");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "rows");
        CHECK(std::string(e.what()) == "rows exceeds 32");
    }
}

TEST_CASE("pot values on the wiper grid are accepted") {
    CHECK(parse_config(R"({"rPot":14062.5})").front().rPot == 14062.5);
    CHECK(parse_config(R"({"rPot":8984.375})").front().rPot == 8984.375);
    CHECK_THROWS_AS(parse_config(R"({"rPot":14000})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"rPot":0})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"rPot":50390.625})"), ValidationError);
}

TEST_CASE("malformed JSON reports a byte offset") {
    try {
        parse_config(R"({"rows": 3,,})");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.byte() > 0);
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
}

TEST_CASE("invariant violations") {
    CHECK_THROWS_AS(parse_config(R"({"protocol":"zigbee"})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"p":0})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"d":-1})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"adcBits":17})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"rows":4,"cols":4,"readArea":[[0,0],[4,3]]})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"rows":"many"})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"calibration":{"minPercentile":0}})"), ValidationError);
}

TEST_CASE("array and devices-wrapper forms") {
    CHECK(parse_config(R"([{"deviceId":1},{"deviceId":2}])").size() == 2);
    auto v = parse_config(R"({"devices":[{"deviceId":3},{"deviceId":4},{"deviceId":5}]})");
    REQUIRE(v.size() == 3);
    CHECK(v[2].deviceId == 5);
}

TEST_CASE("serialize then parse is the identity") {
    DeviceConfig c;
    c.deviceId = 9;
    c.rows = 16;
    c.cols = 12;
    c.protocol = Protocol::espnow;
    c.intermittent = true;
    c.p = 7;
    c.d = 3;
    c.scanDelayUs = 10000;
    c.readArea = {{2, 3}, {9, 11}};
    c.rPot = 14062.5;
    c.calibration = {2500, 2.5};
    const std::string once = serialize_config(c);
    const DeviceConfig back = parse_config(once).front();
    CHECK(back == c);
    CHECK(serialize_config(back) == once);
}

}
