#include "iolws/digest.hpp"

#include <sodium.h>

#include <array>

namespace iolws {

std::string sha256_hex(std::string_view text)
{
    std::array<unsigned char, crypto_hash_sha256_BYTES> out{};
    crypto_hash_sha256(out.data(), reinterpret_cast<const unsigned char*>(text.data()), text.size());
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string hex;
    hex.reserve(out.size() * 2);
    for (unsigned char b : out) {
        hex.push_back(kDigits[b >> 4]);
        hex.push_back(kDigits[b & 0x0F]);
    }
    return hex;
}

std::string short_digest(std::string_view text)
{
    return sha256_hex(text).substr(0, 16);
}

} // namespace iolws
