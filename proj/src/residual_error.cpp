#include "iolws/residual_error.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "iolws/error.hpp"
#include "iolws/rng.hpp"

namespace iolws::pdu {
namespace {

void fill_random(Rng& rng, std::span<std::uint8_t> out)
{
    std::size_t i = 0;
    while (i < out.size()) {
        std::uint64_t word = rng.next_u64();
        for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
            out[i] = static_cast<std::uint8_t>(word & 0xFFU);
            word >>= 8;
        }
    }
}

// Independent per-bit flips. ber == 0.5 is a uniform random mask.
bool corrupt(Rng& rng, double ber, std::vector<std::uint8_t>& frame)
{
    if (ber <= 0.0) {
        return false;
    }
    std::vector<std::uint8_t> mask(frame.size(), 0);
    if (ber == 0.5) {
        fill_random(rng, mask);
    } else {
        for (std::size_t bit = 0; bit < frame.size() * 8; ++bit) {
            if (rng.uniform01() < ber) {
                mask[bit / 8] = static_cast<std::uint8_t>(mask[bit / 8] | (0x80U >> (bit % 8)));
            }
        }
    }
    bool flipped = false;
    for (std::size_t i = 0; i < frame.size(); ++i) {
        frame[i] ^= mask[i];
        flipped = flipped || mask[i] != 0;
    }
    return flipped;
}

} // namespace

ResidualEstimate estimate_undetected_rate(double ber, std::uint64_t trials, std::uint64_t rng_seed,
                                          Verification verification)
{
    if (!(ber >= 0.0 && ber <= 0.5)) {
        throw Error(ErrorCode::InvalidParameter, "bit error rate must lie in [0, 0.5]");
    }
    if (trials < 10'000) {
        throw Error(ErrorCode::InvalidParameter, "at least 10^4 trials required");
    }

    Rng rng(rng_seed);
    SessionKey key;
    fill_random(rng, key.key_material);
    const PairingIdentity id{1, 3};
    const VerifyOptions options{verification, nullptr};

    ResidualEstimate est;
    est.trials = trials;
    std::array<std::uint8_t, kMaxOutputPayload> payload{};
    ControlMCnt ctl{control::kData, 0};
    for (std::uint64_t t = 0; t < trials; ++t) {
        fill_random(rng, payload);
        const CounterWindow window{static_cast<std::uint16_t>((ctl.mcnt + kMcntModulus - 1) % kMcntModulus),
                                   kDefaultCounterSpan};
        auto frame = encode_output_pdu(payload, ctl, id, key);
        if (corrupt(rng, ber, frame)) {
            ++est.corrupted;
            if (decode_output_pdu(frame, key, id, window, options).ok()) {
                ++est.undetected;
            }
        }
        ctl = ctl.next();
    }
    est.rate = static_cast<double>(est.undetected) / static_cast<double>(trials);
    return est;
}

} // namespace iolws::pdu
