#include "iolws/radio_channel.hpp"

#include <cmath>

#include "iolws/error.hpp"

namespace iolws::radio {
namespace {

constexpr double kFsplConstant = 147.55;

} // namespace

RssiMap::RssiMap()
    : RssiMap({{30.0, -37.0}, {50.0, -53.0}, {65.0, -67.0}, {80.0, -83.0}, {83.0, -87.0}, {85.0, -89.0}})
{
}

RssiMap::RssiMap(std::vector<RssiAnchor> anchors) : anchors_(std::move(anchors))
{
    if (anchors_.size() < 2) {
        throw Error(ErrorCode::InvalidParameter, "RSSI map needs at least two anchor points");
    }
    for (std::size_t i = 1; i < anchors_.size(); ++i) {
        if (!(anchors_[i].attenuation_db > anchors_[i - 1].attenuation_db)) {
            throw Error(ErrorCode::InvalidParameter, "RSSI map attenuations must be strictly increasing");
        }
        if (!(anchors_[i].rssi_dbm < anchors_[i - 1].rssi_dbm)) {
            throw Error(ErrorCode::InvalidParameter, "RSSI map values must be strictly decreasing");
        }
    }
}

void PerCurve::validate() const
{
    if (!(slope > 0.0) || !std::isfinite(slope)) {
        throw Error(ErrorCode::InvalidParameter, "PER curve slope must be positive");
    }
    if (!(floor >= 0.0 && floor < 0.05)) {
        throw Error(ErrorCode::InvalidParameter, "PER curve floor must lie in [0, 0.05)");
    }
    if (!std::isfinite(rssi_mid)) {
        throw Error(ErrorCode::InvalidParameter, "PER curve midpoint must be finite");
    }
}

PerCurve calibrated_per_curve()
{
    return PerCurve{-87.9141, 0.7139, 0.0};
}

double rssi_from_attenuation(double attenuation_db, const RssiMap& map)
{
    if (!(attenuation_db >= 0.0 && attenuation_db <= 120.0)) {
        throw Error(ErrorCode::InvalidParameter, "attenuation must lie in [0, 120] dB");
    }
    const auto& a = map.anchors();
    std::size_t hi = 1;
    while (hi + 1 < a.size() && attenuation_db > a[hi].attenuation_db) {
        ++hi;
    }
    const RssiAnchor& p0 = a[hi - 1];
    const RssiAnchor& p1 = a[hi];
    const double t = (attenuation_db - p0.attenuation_db) / (p1.attenuation_db - p0.attenuation_db);
    return p0.rssi_dbm + t * (p1.rssi_dbm - p0.rssi_dbm);
}

double per_from_rssi(double rssi_dbm, const PerCurve& curve)
{
    const double x = curve.slope * (rssi_dbm - curve.rssi_mid);
    // 1/(1+e^x) written to stay finite for large |x|
    const double logistic = x >= 0.0 ? std::exp(-x) / (1.0 + std::exp(-x)) : 1.0 / (1.0 + std::exp(x));
    return curve.floor + (1.0 - curve.floor) * logistic;
}

bool sample_frame_loss(double per, Rng& rng)
{
    // Always consumes one draw, so runs at different loss levels stay aligned.
    return rng.uniform01() < per;
}

double fspl_db(double distance_m, double frequency_hz)
{
    if (!(distance_m > 0.0) || !(frequency_hz > 0.0)) {
        throw Error(ErrorCode::InvalidParameter, "distance and frequency must be positive");
    }
    return 20.0 * std::log10(distance_m) + 20.0 * std::log10(frequency_hz) - kFsplConstant;
}

double fspl_distance(double path_loss_db, double frequency_hz)
{
    if (!(path_loss_db > 0.0) || !(frequency_hz > 0.0)) {
        throw Error(ErrorCode::InvalidParameter, "path loss and frequency must be positive");
    }
    return std::pow(10.0, (path_loss_db - 20.0 * std::log10(frequency_hz) + kFsplConstant) / 20.0);
}

} // namespace iolws::radio
