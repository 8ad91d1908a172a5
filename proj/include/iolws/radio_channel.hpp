#pragma once

#include <utility>
#include <vector>

#include "iolws/rng.hpp"

namespace iolws::radio {

/// Transmit powers and the attenuator's OFF setting of the shielded setup.
struct LinkBudget {
    double master_tx_power_dbm = 10.0;
    double device_tx_power_dbm = 4.0;
    double off_attenuation_db = 103.0;
};

struct RssiAnchor {
    double attenuation_db;
    double rssi_dbm;

    friend bool operator==(const RssiAnchor&, const RssiAnchor&) = default;
};

/// Piecewise-linear attenuation -> RSSI lookup through measured anchor
/// points; extrapolates linearly past either end.
class RssiMap {
public:
    RssiMap(); // measured defaults
    explicit RssiMap(std::vector<RssiAnchor> anchors);

    const std::vector<RssiAnchor>& anchors() const noexcept { return anchors_; }

    friend bool operator==(const RssiMap&, const RssiMap&) = default;

private:
    std::vector<RssiAnchor> anchors_;
};

/// Logistic frame-loss curve in dB:
///   per(rssi) = floor + (1 - floor) / (1 + exp(slope * (rssi - rssi_mid)))
struct PerCurve {
    double rssi_mid = -87.9141;
    double slope = 0.7139;
    double floor = 0.0;

    // Throws Error(InvalidParameter) unless slope > 0 and 0 <= floor < 0.05.
    void validate() const;

    friend bool operator==(const PerCurve&, const PerCurve&) = default;
};

/// Curve shipped as the calibrated default (see tools `calibrate`).
PerCurve calibrated_per_curve();

// Throws Error(InvalidParameter) for attenuations outside [0, 120] dB.
double rssi_from_attenuation(double attenuation_db, const RssiMap& map = RssiMap{});

double per_from_rssi(double rssi_dbm, const PerCurve& curve);

bool sample_frame_loss(double per, Rng& rng);

inline constexpr double kIsmFrequencyHz = 2.4e9;

/// FSPL(dB) = 20 log10(d) + 20 log10(f) - 147.55
double fspl_db(double distance_m, double frequency_hz = kIsmFrequencyHz);

// Inverse of fspl_db. Throws Error(InvalidParameter) for non-positive input.
double fspl_distance(double path_loss_db, double frequency_hz = kIsmFrequencyHz);

/// Attenuation -> loss probability for one link.
struct ChannelModel {
    RssiMap rssi_map;
    PerCurve per_curve = calibrated_per_curve();

    double rssi(double attenuation_db) const { return rssi_from_attenuation(attenuation_db, rssi_map); }
    double loss_probability(double attenuation_db) const { return per_from_rssi(rssi(attenuation_db), per_curve); }
};

} // namespace iolws::radio
