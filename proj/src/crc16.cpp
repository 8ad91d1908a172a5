#include "iolws/crc16.hpp"

#include <array>

#include "iolws/error.hpp"

namespace iolws::pdu {
namespace {

constexpr std::array<std::uint16_t, 256> make_table()
{
    std::array<std::uint16_t, 256> table{};
    for (unsigned i = 0; i < 256; ++i) {
        auto crc = static_cast<std::uint16_t>(i << 8);
        for (int bit = 0; bit < 8; ++bit) {
            crc = (crc & 0x8000U) ? static_cast<std::uint16_t>((crc << 1) ^ kCrcPolynomial)
                                  : static_cast<std::uint16_t>(crc << 1);
        }
        table[i] = crc;
    }
    return table;
}

constexpr auto kTable = make_table();

} // namespace

std::uint16_t crc_update(std::uint16_t crc, std::span<const std::uint8_t> data) noexcept
{
    for (const std::uint8_t byte : data) {
        crc = static_cast<std::uint16_t>((crc << 8) ^ kTable[((crc >> 8) ^ byte) & 0xFFU]);
    }
    return crc;
}

std::uint16_t compute_crc(std::span<const std::uint8_t> data)
{
    if (data.empty()) {
        throw Error(ErrorCode::InvalidLength, "CRC over empty data");
    }
    return crc_update(kCrcInit, data);
}

} // namespace iolws::pdu
