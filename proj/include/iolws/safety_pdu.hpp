#pragma once

// Safety process data units exchanged between a failsafe wireless master and
// device. Both directions carry the same safety header:
//
//   output frame: | Control&MCnt (2) | track (1) | slot (1) | payload (1..22) | MAC (4) | CRC (2) |
//   input frame:  | Control&MCnt (2) | track (1) | slot (1) | safety (6) | MAC (4) | CRC (2) | non-safety (0..16) |
//
// Multi-octet fields are big-endian. The MAC covers header and safety data;
// the CRC covers the same bytes followed by the MAC. Non-safety input bytes
// ride behind the CRC and are covered by neither.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iolws/mac.hpp"

namespace iolws::pdu {

inline constexpr std::size_t kMaxOutputPayload = 22;
inline constexpr std::size_t kSafetyInputSize = 6;
inline constexpr std::size_t kMaxNonSafetyInput = 16;
inline constexpr std::size_t kHeaderSize = 4;
inline constexpr std::size_t kCrcSize = 2;
inline constexpr std::size_t kFrameOverhead = kHeaderSize + kMacSize + kCrcSize;
inline constexpr std::size_t kMinOutputFrame = kFrameOverhead + 1;
inline constexpr std::size_t kInputFrameFixed = kFrameOverhead + kSafetyInputSize;
inline constexpr std::uint16_t kMcntModulus = 1U << 12;
inline constexpr std::uint16_t kDefaultCounterSpan = 16;

/// Master-side addressing of a device connection; doubles as the
/// authenticity identifier carried in every safety frame.
struct PairingIdentity {
    std::uint8_t track = 0;
    std::uint8_t slot = 0;

    friend auto operator<=>(const PairingIdentity&, const PairingIdentity&) = default;
};

struct TopologyBounds {
    std::uint8_t tracks = 5;
    std::uint8_t slots = 8;

    bool contains(const PairingIdentity& id) const noexcept { return id.track < tracks && id.slot < slots; }
};

std::string to_string(const PairingIdentity& id);

// Role flags in the upper nibble of Control&MCnt.
namespace control {
inline constexpr std::uint8_t kData = 0x1;
inline constexpr std::uint8_t kParameterExchange = 0x2;
inline constexpr std::uint8_t kRearm = 0x4;
} // namespace control

struct ControlMCnt {
    std::uint8_t control_bits = control::kData; ///< 4 bits
    std::uint16_t mcnt = 0;                     ///< 12 bits

    std::uint16_t packed() const noexcept
    {
        return static_cast<std::uint16_t>(((control_bits & 0x0FU) << 12) | (mcnt & 0x0FFFU));
    }
    static ControlMCnt unpack(std::uint16_t word) noexcept
    {
        return {static_cast<std::uint8_t>(word >> 12), static_cast<std::uint16_t>(word & 0x0FFFU)};
    }
    ControlMCnt next() const noexcept
    {
        return {control_bits, static_cast<std::uint16_t>((mcnt + 1U) % kMcntModulus)};
    }

    friend bool operator==(const ControlMCnt&, const ControlMCnt&) = default;
};

struct SafetyOutputPDU {
    std::vector<std::uint8_t> safety_data;
    ControlMCnt control_mcnt;
    PairingIdentity identity;
    MacTag mac{};
    std::uint16_t crc = 0;
};

struct SafetyInputPDU {
    std::vector<std::uint8_t> safety_data;
    std::vector<std::uint8_t> nonsafety_data;
    ControlMCnt control_mcnt;
    PairingIdentity identity;
    MacTag mac{};
    std::uint16_t crc = 0;
};

/// Timeliness window: a counter is admitted when it is strictly newer than
/// the last accepted one and at most `span` steps ahead (modulo 2^12). With
/// no counter accepted yet every value is admitted.
struct CounterWindow {
    std::optional<std::uint16_t> last_accepted;
    std::uint16_t span = kDefaultCounterSpan;

    bool admits(std::uint16_t mcnt) const noexcept;
};

enum class DecodeStatus { Ok, CrcFail, MacFail, AuthMismatch, StaleCounter, InvalidLength };

std::string_view to_string(DecodeStatus status) noexcept;
std::optional<DecodeStatus> parse_decode_status(std::string_view token) noexcept;

/// Test hook: CrcOnly skips identity, MAC and counter checks.
enum class Verification { Full, CrcOnly };

struct VerifyOptions {
    Verification verification = Verification::Full;
    const MacFunction* mac = nullptr; ///< nullptr selects default_mac()
};

struct DecodedOutput {
    DecodeStatus status = DecodeStatus::InvalidLength;
    SafetyOutputPDU pdu;

    bool ok() const noexcept { return status == DecodeStatus::Ok; }
};

struct DecodedInput {
    DecodeStatus status = DecodeStatus::InvalidLength;
    SafetyInputPDU pdu;

    bool ok() const noexcept { return status == DecodeStatus::Ok; }
};

// Throws Error(InvalidLength) for an empty payload and Error(PayloadTooLong)
// beyond 22 octets.
std::vector<std::uint8_t> encode_output_pdu(std::span<const std::uint8_t> payload, ControlMCnt ctl,
                                            PairingIdentity id, const SessionKey& key,
                                            const MacFunction& mac = default_mac());

// Checks run in the order CRC, identity, MAC, counter; the first failure is
// reported. The window is not advanced here (see SafetyReceiver).
DecodedOutput decode_output_pdu(std::span<const std::uint8_t> frame, const SessionKey& key,
                                PairingIdentity expected_id, const CounterWindow& window,
                                const VerifyOptions& options = {});

// Throws Error(InvalidLength) unless safety is exactly 6 octets and
// nonsafety at most 16.
std::vector<std::uint8_t> encode_input_pdu(std::span<const std::uint8_t> safety,
                                           std::span<const std::uint8_t> nonsafety, ControlMCnt ctl,
                                           PairingIdentity id, const SessionKey& key,
                                           const MacFunction& mac = default_mac());

DecodedInput decode_input_pdu(std::span<const std::uint8_t> frame, const SessionKey& key,
                              PairingIdentity expected_id, const CounterWindow& window,
                              const VerifyOptions& options = {});

/// Receiving end of one safety session: verifies frames and advances the
/// counter window on every accepted frame, so a counter value is never
/// accepted twice.
class SafetyReceiver {
public:
    SafetyReceiver(SessionKey key, PairingIdentity expected, std::uint16_t span = kDefaultCounterSpan)
        : key_(key), expected_(expected), window_{std::nullopt, span} {}

    DecodedOutput accept_output(std::span<const std::uint8_t> frame);
    DecodedInput accept_input(std::span<const std::uint8_t> frame);

    const CounterWindow& window() const noexcept { return window_; }
    const SessionKey& key() const noexcept { return key_; }

private:
    SessionKey key_;
    PairingIdentity expected_;
    CounterWindow window_;
};

// --- hex corpus -----------------------------------------------------------
//
// One frame per line: "<hex> <OUTCOME>", OUTCOME one of OK, CRC_FAIL,
// MAC_FAIL, AUTH_MISMATCH, STALE_COUNTER. Lines starting with '#' are
// comments; "# key=<32 hex>", "# expect=<track>/<slot>" and
// "# last=<mcnt|none>" set the decode context for the following lines.

std::string to_hex(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> from_hex(std::string_view hex);

struct CorpusEntry {
    std::vector<std::uint8_t> frame;
    DecodeStatus expected = DecodeStatus::Ok;
    SessionKey key;
    PairingIdentity expected_id;
    CounterWindow window;
};

std::vector<CorpusEntry> parse_corpus(std::string_view text);

} // namespace iolws::pdu
