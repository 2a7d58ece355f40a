#include "wiresens/power.hpp"

#include <cmath>

#include "wiresens/error.hpp"

namespace wiresens {

namespace {

constexpr double kWifiContinuousMa = 152.47;
constexpr double kBleContinuousMa = 101.31;

}  // namespace

double back_solve_idle_current(double continuousMa, double tA, double extensionFraction) {
    // iIdle * (1 - tA) + tA * continuous = continuous / (1 + ext)
    if (!(tA >= 0 && tA < 1)) throw DomainError("tA must be in [0, 1)");
    return (continuousMa / (1.0 + extensionFraction) - tA * continuousMa) / (1.0 - tA);
}

PowerProfile default_power_profile(Protocol p) {
    PowerProfile prof;
    prof.protocol = std::string(to_string(p));
    double continuous = kBleContinuousMa;
    double extension = 0.20;
    if (p == Protocol::wifi) {
        continuous = kWifiContinuousMa;
        extension = 0.42;
    }
    // Rounded down to 0.01 mA so the shipped profile meets the target extension.
    prof.iIdle = std::floor(back_solve_idle_current(continuous, 0.01, extension) * 100.0) / 100.0;
    prof.iSendDelta = continuous - prof.iIdle;
    return prof;
}

void validate(const PowerProfile& p) {
    if (!(p.iSendDelta >= 0)) throw ValidationError("iSendDelta", "iSendDelta must be >= 0");
    if (!(p.iIdle >= 0)) throw ValidationError("iIdle", "iIdle must be >= 0");
    if (!(p.batteryMah >= 0)) throw ValidationError("batteryMah", "batteryMah must be >= 0");
}

PowerProfile power_profile_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("profile", "power profile must be a JSON object");
    PowerProfile p;
    try {
        p.protocol = j.value("protocol", p.protocol);
        if (!j.contains("iSendDelta") && !j.contains("iIdle")) {
            p = default_power_profile(protocol_from_string(p.protocol));
        }
        p.iSendDelta = j.value("iSendDelta", p.iSendDelta);
        p.iIdle = j.value("iIdle", p.iIdle);
        p.batteryMah = j.value("batteryMah", p.batteryMah);
    } catch (const json::type_error& e) {
        throw ValidationError("profile", std::string("power profile: ") + e.what());
    }
    validate(p);
    return p;
}

json to_json(const PowerProfile& p) {
    return {{"protocol", p.protocol}, {"iSendDelta", p.iSendDelta}, {"iIdle", p.iIdle}, {"batteryMah", p.batteryMah}};
}

PowerProfile load_power_profile(const std::string& path) {
    return power_profile_from_json(parse_json_text(read_text_file(path)));
}

double avg_current(const PowerProfile& p, double tA) {
    if (!(tA >= 0 && tA <= 1)) throw DomainError("tA must be in [0, 1]");
    return p.iSendDelta * tA + p.iIdle;
}

double lifetime_hours(const PowerProfile& p, double tA) {
    const double i = avg_current(p, tA);
    if (!(i > 0)) throw DomainError("lifetime undefined for zero average current");
    return p.batteryMah / i;
}

double extension_pct(const PowerProfile& p, double tAIntermittent) {
    const double i = avg_current(p, tAIntermittent);
    if (!(i > 0)) throw DomainError("extension undefined for zero average current");
    return 100.0 * (p.continuous_current() / i - 1.0);
}

std::vector<LifetimeRow> lifetime_table(const PowerProfile& p, const std::vector<double>& tAs) {
    std::vector<LifetimeRow> rows;
    for (double tA : tAs) rows.push_back({tA, avg_current(p, tA), lifetime_hours(p, tA), extension_pct(p, tA)});
    return rows;
}

}  // namespace wiresens
