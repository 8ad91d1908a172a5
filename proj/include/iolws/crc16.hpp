#pragma once

#include <cstdint>
#include <span>

namespace iolws::pdu {

// CRC-16 with polynomial 0x1021, initial value 0xFFFF, no reflection and no
// final xor (check value for "123456789" is 0x29B1).
inline constexpr std::uint16_t kCrcPolynomial = 0x1021;
inline constexpr std::uint16_t kCrcInit = 0xFFFF;

// Throws Error(InvalidLength) on empty input.
std::uint16_t compute_crc(std::span<const std::uint8_t> data);

// Table-driven update without the non-empty precondition; used internally
// when a checksum is accumulated over several fields.
std::uint16_t crc_update(std::uint16_t crc, std::span<const std::uint8_t> data) noexcept;

} // namespace iolws::pdu
