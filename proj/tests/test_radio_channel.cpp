#include <doctest.h>

#include <cmath>

#include "iolws/error.hpp"
#include "iolws/radio_channel.hpp"
#include "oracles.hpp"

using namespace iolws;
using namespace iolws::radio;

TEST_CASE("rssi lookup hits the measured anchors")
{
    RssiMap map;
    for (const auto& a : map.anchors()) CHECK(rssi_from_attenuation(a.attenuation_db, map) == a.rssi_dbm);
    CHECK(rssi_from_attenuation(30.0) == -37.0);
    CHECK(rssi_from_attenuation(85.0) == -89.0);
    CHECK(rssi_from_attenuation(77.0) == doctest::Approx(-79.8).epsilon(1e-12));
}

TEST_CASE("rssi lookup extrapolates and rejects out-of-range input")
{
    CHECK(rssi_from_attenuation(90.0) == doctest::Approx(-94.0));
    CHECK(rssi_from_attenuation(20.0) == doctest::Approx(-29.0));
    CHECK_THROWS_AS(rssi_from_attenuation(-1.0), Error);
    CHECK_THROWS_AS(rssi_from_attenuation(120.5), Error);
    CHECK_THROWS_AS(rssi_from_attenuation(std::nan("")), Error);
    CHECK_THROWS_AS(RssiMap({{30.0, -37.0}}), Error);
    CHECK_THROWS_AS(RssiMap({{30.0, -37.0}, {30.0, -40.0}}), Error);
    CHECK_THROWS_AS(RssiMap({{30.0, -37.0}, {40.0, -30.0}}), Error);
}

TEST_CASE("rssi is monotone in attenuation")
{
    double prev = rssi_from_attenuation(0.0);
    for (double a = 0.5; a <= 120.0; a += 0.5) {
        double r = rssi_from_attenuation(a);
        REQUIRE(r < prev);
        prev = r;
    }
}

TEST_CASE("per curve shape")
{
    for (PerCurve c : {PerCurve{-90.0, 0.8, 0.0}, PerCurve{-85.0, 0.4, 0.01}, calibrated_per_curve()}) {
        CHECK(per_from_rssi(c.rssi_mid, c) == doctest::Approx((1.0 + c.floor) / 2.0));
        double prev = 1.0;
        for (double r = -120.0; r <= -20.0; r += 0.25) {
            double p = per_from_rssi(r, c);
            REQUIRE(p <= prev);
            REQUIRE(p >= c.floor);
            REQUIRE(p <= 1.0);
            CHECK(p == doctest::Approx(oracle::logistic_per(r, c.rssi_mid, c.slope, c.floor)).epsilon(1e-12));
            prev = p;
        }
    }
    auto c = calibrated_per_curve();
    CHECK(per_from_rssi(-103.0, c) >= 0.999);
    CHECK(per_from_rssi(-37.0, c) <= 0.05);
    CHECK(std::isfinite(per_from_rssi(-1e6, c)));
    CHECK(std::isfinite(per_from_rssi(1e6, c)));
}

TEST_CASE("per curve validation")
{
    CHECK_NOTHROW(calibrated_per_curve().validate());
    CHECK_THROWS_AS((PerCurve{-80.0, 0.0, 0.0}).validate(), Error);
    CHECK_THROWS_AS((PerCurve{-80.0, -1.0, 0.0}).validate(), Error);
    CHECK_THROWS_AS((PerCurve{-80.0, 1.0, -0.01}).validate(), Error);
    CHECK_THROWS_AS((PerCurve{-80.0, 1.0, 0.05}).validate(), Error);
}

TEST_CASE("frame loss sampling")
{
    Rng rng(99);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(!sample_frame_loss(0.0, rng));
        REQUIRE(sample_frame_loss(1.0, rng));
    }
    int lost = 0;
    const int n = 100'000;
    for (int i = 0; i < n; ++i) lost += sample_frame_loss(0.5, rng);
    CHECK(std::abs(lost / double(n) - 0.5) <= 0.01);
}

TEST_CASE("free-space path loss against the Friis formula")
{
    CHECK(fspl_distance(40.05) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(fspl_distance(46.07) == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(fspl_distance(77.0) == doctest::Approx(70.4).epsilon(2e-3));
    for (double loss = 20.0; loss <= 110.0; loss += 7.5) {
        // 147.55 is the constant rounded to 0.01 dB, worth 3e-4 in distance.
        CHECK(fspl_distance(loss) == doctest::Approx(oracle::friis_distance_m(loss, kIsmFrequencyHz)).epsilon(5e-4));
        CHECK(fspl_db(fspl_distance(loss)) == doctest::Approx(loss).epsilon(1e-12));
    }
    CHECK_THROWS_AS(fspl_distance(0.0), Error);
    CHECK_THROWS_AS(fspl_distance(-3.0), Error);
    CHECK_THROWS_AS(fspl_db(0.0), Error);
    CHECK_THROWS_AS(fspl_db(1.0, 0.0), Error);
}

TEST_CASE("channel model composes lookup and curve")
{
    ChannelModel m;
    CHECK(m.loss_probability(80.0) == per_from_rssi(-83.0, m.per_curve));
    CHECK(m.loss_probability(30.0) < m.loss_probability(85.0));
}
