#pragma once

#include <string>
#include <vector>

#include "wiresens/config.hpp"

namespace wiresens {

/// Two-state current model: idle reading (iIdle) plus a send increment
/// (iSendDelta) drawn for the fraction tA of time spent transmitting.
struct PowerProfile {
    std::string protocol = "ble";
    double iSendDelta = 0.0;  // mA
    double iIdle = 0.0;       // mA
    double batteryMah = 1200.0;

    double continuous_current() const { return iIdle + iSendDelta; }
};

/// Measured continuous currents: 152.47 mA (Wi-Fi) and 101.31 mA (BLE).
/// Idle currents are back-solved so that sending 1% of packets extends
/// lifetime by 42% (Wi-Fi) and 20% (BLE); see docs/power.md.
PowerProfile default_power_profile(Protocol p);

/// Solves iIdle + tA * (continuous - iIdle) = continuous / (1 + extension).
double back_solve_idle_current(double continuousMa, double tA, double extensionFraction);

void validate(const PowerProfile& p);
PowerProfile power_profile_from_json(const json& j);
json to_json(const PowerProfile& p);
PowerProfile load_power_profile(const std::string& path);

double avg_current(const PowerProfile& p, double tA);
/// Throws DomainError if the average current is not positive.
double lifetime_hours(const PowerProfile& p, double tA);
double extension_pct(const PowerProfile& p, double tAIntermittent);

struct LifetimeRow {
    double tA = 0.0;
    double currentMa = 0.0;
    double hours = 0.0;
    double extensionPct = 0.0;
};

std::vector<LifetimeRow> lifetime_table(const PowerProfile& p,
                                        const std::vector<double>& tAs = {0.01, 0.05, 0.1, 0.5, 1.0});

}  // namespace wiresens
