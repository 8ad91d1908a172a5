#include "iolws/mac.hpp"

#include <sodium.h>

#include <algorithm>
#include <stdexcept>

namespace iolws::pdu {
namespace {

void ensure_sodium()
{
    static const int status = sodium_init();
    if (status < 0) {
        throw std::runtime_error("libsodium initialisation failed");
    }
}

} // namespace

MacTag hmac_sha256_tag(const SessionKey& key, std::span<const std::uint8_t> data)
{
    ensure_sodium();
    crypto_auth_hmacsha256_state state;
    std::array<std::uint8_t, crypto_auth_hmacsha256_BYTES> full{};
    crypto_auth_hmacsha256_init(&state, key.key_material.data(), key.key_material.size());
    crypto_auth_hmacsha256_update(&state, data.data(), data.size());
    crypto_auth_hmacsha256_final(&state, full.data());
    MacTag tag{};
    std::copy_n(full.begin(), kMacSize, tag.begin());
    return tag;
}

MacTag compute_mac(const SessionKey& key, std::span<const std::uint8_t> data)
{
    return hmac_sha256_tag(key, data);
}

const MacFunction& default_mac()
{
    static const MacFunction fn = &hmac_sha256_tag;
    return fn;
}

} // namespace iolws::pdu
