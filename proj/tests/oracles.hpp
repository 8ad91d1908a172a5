#pragma once

// Reference computations written independently of the library code.

#include <sodium.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

// Bit-serial CRC-16/0x1021, init 0xFFFF, MSB first.
inline std::uint16_t crc16(const std::vector<std::uint8_t>& data)
{
    std::uint16_t crc = 0xFFFF;
    for (std::uint8_t byte : data) {
        for (int bit = 7; bit >= 0; --bit) {
            bool in = (byte >> bit) & 1U;
            bool top = crc & 0x8000U;
            crc = static_cast<std::uint16_t>(crc << 1);
            if (in != top) crc ^= 0x1021;
        }
    }
    return crc;
}

// HMAC-SHA256 (RFC 2104) from the plain hash, truncated to four octets.
inline std::array<std::uint8_t, 4> hmac_tag(const std::array<std::uint8_t, 16>& key,
                                            const std::vector<std::uint8_t>& msg)
{
    std::array<std::uint8_t, 64> ipad{}, opad{};
    for (std::size_t i = 0; i < 64; ++i) {
        std::uint8_t k = i < key.size() ? key[i] : 0;
        ipad[i] = k ^ 0x36;
        opad[i] = k ^ 0x5c;
    }
    std::vector<std::uint8_t> inner(ipad.begin(), ipad.end());
    inner.insert(inner.end(), msg.begin(), msg.end());
    std::array<std::uint8_t, 32> ih{};
    crypto_hash_sha256(ih.data(), inner.data(), inner.size());
    std::vector<std::uint8_t> outer(opad.begin(), opad.end());
    outer.insert(outer.end(), ih.begin(), ih.end());
    std::array<std::uint8_t, 32> oh{};
    crypto_hash_sha256(oh.data(), outer.data(), outer.size());
    return {oh[0], oh[1], oh[2], oh[3]};
}

// Friis: path loss = (4 pi d f / c)^2, solved for d.
inline double friis_distance_m(double loss_db, double freq_hz)
{
    constexpr double c = 299'792'458.0;
    return c / (4.0 * M_PI * freq_hz) * std::pow(10.0, loss_db / 20.0);
}

inline double logistic_per(double rssi, double mid, double slope, double floor)
{
    return floor + (1.0 - floor) / (1.0 + std::exp(slope * (rssi - mid)));
}

struct Stats {
    long double min, max, mean, std;
};

// Two-pass statistics in long double with the n - 1 denominator.
inline Stats stats(const std::vector<double>& xs)
{
    long double sum = 0, lo = xs.front(), hi = xs.front();
    for (double x : xs) {
        sum += x;
        lo = std::min<long double>(lo, x);
        hi = std::max<long double>(hi, x);
    }
    long double mean = sum / xs.size(), ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {lo, hi, mean, xs.size() > 1 ? std::sqrt(ss / (xs.size() - 1)) : 0.0L};
}

// Smallest sample t with #{x <= t} * den >= num * n, for p = num / den.
inline double quantile(std::vector<double> xs, long long num, long long den)
{
    std::sort(xs.begin(), xs.end());
    long long n = static_cast<long long>(xs.size());
    for (long long k = 1; k <= n; ++k)
        if (k * den >= num * n) return xs[static_cast<std::size_t>(k - 1)];
    return xs.back();
}

} // namespace oracle
