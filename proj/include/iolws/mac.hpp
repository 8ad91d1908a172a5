#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>

namespace iolws::pdu {

inline constexpr std::size_t kKeySize = 16;
inline constexpr std::size_t kMacSize = 4;

using MacTag = std::array<std::uint8_t, kMacSize>;

/// 128-bit key material shared by both endpoints of one pairing. Installed
/// during the safety parameter exchange.
struct SessionKey {
    std::array<std::uint8_t, kKeySize> key_material{};

    friend bool operator==(const SessionKey&, const SessionKey&) = default;
};

/// Keyed tag function used by the codec. Any deterministic MAC over a
/// 128-bit key works; the codec only relies on determinism and key
/// separation.
using MacFunction = std::function<MacTag(const SessionKey&, std::span<const std::uint8_t>)>;

/// HMAC-SHA256 truncated to the first four octets.
MacTag hmac_sha256_tag(const SessionKey& key, std::span<const std::uint8_t> data);

/// Default MAC (HMAC-SHA256/32).
MacTag compute_mac(const SessionKey& key, std::span<const std::uint8_t> data);

const MacFunction& default_mac();

} // namespace iolws::pdu
