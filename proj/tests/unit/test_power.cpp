#include "doctest.h"
#include "wiresens/error.hpp"
#include "wiresens/power.hpp"

using namespace wiresens;

TEST_SUITE("power") {

TEST_CASE("continuous currents") {
    const auto wifi = default_power_profile(Protocol::wifi);
    const auto ble = default_power_profile(Protocol::ble);
    CHECK(avg_current(wifi, 1.0) == doctest::Approx(152.47).epsilon(1e-12));
    CHECK(avg_current(ble, 1.0) == doctest::Approx(101.31).epsilon(1e-12));
    CHECK(avg_current(ble, 0.0) == ble.iIdle);
}

TEST_CASE("back-solved idle currents match the oracle") {
    CHECK(default_power_profile(Protocol::wifi).iIdle == doctest::Approx(106.91));
    CHECK(default_power_profile(Protocol::ble).iIdle == doctest::Approx(84.25));
    CHECK(back_solve_idle_current(100.0, 0.0, 1.0) == doctest::Approx(50.0));
}

TEST_CASE("lifetime") {
    PowerProfile p{"wifi", 0.0, 152.47, 1200};
    CHECK(lifetime_hours(p, 0.5) == doctest::Approx(7.87).epsilon(0.001));
    p.iIdle = 101.31;
    CHECK(lifetime_hours(p, 0.5) == doctest::Approx(11.84).epsilon(0.001));
    const double full = lifetime_hours(p, 0.0);
    p.iIdle /= 2;
    CHECK(lifetime_hours(p, 0.0) == doctest::Approx(2 * full));
    CHECK_THROWS_AS(lifetime_hours(PowerProfile{"x", 0, 0, 1200}, 0.0), DomainError);
}

TEST_CASE("extension claims and monotonicity") {
    const auto wifi = default_power_profile(Protocol::wifi);
    const auto ble = default_power_profile(Protocol::ble);
    CHECK(extension_pct(wifi, 0.01) >= 42.0);
    CHECK(extension_pct(ble, 0.01) >= 20.0);
    CHECK(extension_pct(ble, 1.0) == 0.0);
    for (const auto& p : {wifi, ble}) {
        double prev = 1e9;
        for (int i = 0; i <= 10; ++i) {
            const double e = extension_pct(p, i / 10.0);
            CHECK(e < prev);
            prev = e;
        }
    }
}

TEST_CASE("lifetime table rows") {
    const auto rows = lifetime_table(default_power_profile(Protocol::ble));
    REQUIRE(rows.size() == 5);
    CHECK(rows.back().tA == 1.0);
    CHECK(rows.back().currentMa == doctest::Approx(101.31));
    CHECK(rows.back().extensionPct == 0.0);
}

TEST_CASE("profile JSON") {
    const auto p = default_power_profile(Protocol::wifi);
    const auto back = power_profile_from_json(to_json(p));
    CHECK(back.iIdle == p.iIdle);
    CHECK(back.iSendDelta == p.iSendDelta);
    CHECK_THROWS_AS(power_profile_from_json(json::parse(R"({"iIdle":-1,"iSendDelta":1})")), ValidationError);
    CHECK_THROWS_AS(power_profile_from_json(json::parse(R"({"iIdle":"lots"})")), ValidationError);
    CHECK_THROWS_AS(power_profile_from_json(json::parse("[1]")), ValidationError);
}

}
