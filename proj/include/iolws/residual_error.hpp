#pragma once

#include <cstdint>

#include "iolws/safety_pdu.hpp"

namespace iolws::pdu {

struct ResidualEstimate {
    std::uint64_t trials = 0;
    std::uint64_t corrupted = 0;  ///< frames with at least one flipped bit
    std::uint64_t undetected = 0; ///< corrupted frames accepted by the decoder
    double rate = 0.0;            ///< undetected / trials
};

// Monte Carlo estimate of the probability that a corrupted 32-octet output
// frame passes verification. Each trial encodes a fresh random 22-octet
// payload, flips every bit independently with probability `ber` and decodes
// with the receiver expecting the next counter value. Requires
// 0 <= ber <= 0.5 and trials >= 10^4 (Error(InvalidParameter) otherwise).
ResidualEstimate estimate_undetected_rate(double ber, std::uint64_t trials, std::uint64_t rng_seed,
                                          Verification verification = Verification::Full);

} // namespace iolws::pdu
