#include "iolws/safety_pdu.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "iolws/crc16.hpp"
#include "iolws/error.hpp"

namespace iolws::pdu {
namespace {

void put_header(std::vector<std::uint8_t>& out, ControlMCnt ctl, PairingIdentity id)
{
    const std::uint16_t word = ctl.packed();
    out.push_back(static_cast<std::uint8_t>(word >> 8));
    out.push_back(static_cast<std::uint8_t>(word & 0xFFU));
    out.push_back(id.track);
    out.push_back(id.slot);
}

// Appends MAC over `out` and then CRC over everything written so far.
void seal(std::vector<std::uint8_t>& out, const SessionKey& key, const MacFunction& mac)
{
    const MacTag tag = mac(key, out);
    out.insert(out.end(), tag.begin(), tag.end());
    const std::uint16_t crc = compute_crc(out);
    out.push_back(static_cast<std::uint8_t>(crc >> 8));
    out.push_back(static_cast<std::uint8_t>(crc & 0xFFU));
}

std::uint16_t read_be16(std::span<const std::uint8_t> bytes, std::size_t at)
{
    return static_cast<std::uint16_t>((bytes[at] << 8) | bytes[at + 1]);
}

struct SealedView {
    ControlMCnt control;
    PairingIdentity identity;
    MacTag mac{};
    std::uint16_t crc = 0;
};

// Verifies the sealed region [0, covered + MAC + CRC) of a frame.
DecodeStatus verify_sealed(std::span<const std::uint8_t> sealed, const SessionKey& key,
                           PairingIdentity expected_id, const CounterWindow& window,
                           const VerifyOptions& options, SealedView& view)
{
    const std::size_t covered = sealed.size() - kMacSize - kCrcSize;
    view.control = ControlMCnt::unpack(read_be16(sealed, 0));
    view.identity = {sealed[2], sealed[3]};
    std::copy_n(sealed.begin() + static_cast<std::ptrdiff_t>(covered), kMacSize, view.mac.begin());
    view.crc = read_be16(sealed, covered + kMacSize);

    if (compute_crc(sealed.first(covered + kMacSize)) != view.crc) {
        return DecodeStatus::CrcFail;
    }
    if (options.verification == Verification::CrcOnly) {
        return DecodeStatus::Ok;
    }
    if (view.identity != expected_id) {
        return DecodeStatus::AuthMismatch;
    }
    const MacFunction& mac = options.mac != nullptr ? *options.mac : default_mac();
    if (mac(key, sealed.first(covered)) != view.mac) {
        return DecodeStatus::MacFail;
    }
    if (!window.admits(view.control.mcnt)) {
        return DecodeStatus::StaleCounter;
    }
    return DecodeStatus::Ok;
}

} // namespace

std::string to_string(const PairingIdentity& id)
{
    return std::to_string(id.track) + "/" + std::to_string(id.slot);
}

bool CounterWindow::admits(std::uint16_t mcnt) const noexcept
{
    if (!last_accepted) {
        return true;
    }
    const unsigned delta = (static_cast<unsigned>(mcnt) + kMcntModulus - *last_accepted) % kMcntModulus;
    return delta >= 1 && delta <= span;
}

std::string_view to_string(DecodeStatus status) noexcept
{
    switch (status) {
    case DecodeStatus::Ok: return "OK";
    case DecodeStatus::CrcFail: return "CRC_FAIL";
    case DecodeStatus::MacFail: return "MAC_FAIL";
    case DecodeStatus::AuthMismatch: return "AUTH_MISMATCH";
    case DecodeStatus::StaleCounter: return "STALE_COUNTER";
    case DecodeStatus::InvalidLength: return "INVALID_LENGTH";
    }
    return "?";
}

std::optional<DecodeStatus> parse_decode_status(std::string_view token) noexcept
{
    for (auto s : {DecodeStatus::Ok, DecodeStatus::CrcFail, DecodeStatus::MacFail, DecodeStatus::AuthMismatch,
                   DecodeStatus::StaleCounter, DecodeStatus::InvalidLength}) {
        if (to_string(s) == token) {
            return s;
        }
    }
    return std::nullopt;
}

std::vector<std::uint8_t> encode_output_pdu(std::span<const std::uint8_t> payload, ControlMCnt ctl,
                                            PairingIdentity id, const SessionKey& key, const MacFunction& mac)
{
    if (payload.empty()) {
        throw Error(ErrorCode::InvalidLength, "safety output payload is empty");
    }
    if (payload.size() > kMaxOutputPayload) {
        throw Error(ErrorCode::PayloadTooLong,
                    "safety output payload of " + std::to_string(payload.size()) + " octets exceeds 22");
    }
    std::vector<std::uint8_t> out;
    out.reserve(payload.size() + kFrameOverhead);
    put_header(out, ctl, id);
    out.insert(out.end(), payload.begin(), payload.end());
    seal(out, key, mac);
    return out;
}

DecodedOutput decode_output_pdu(std::span<const std::uint8_t> frame, const SessionKey& key,
                                PairingIdentity expected_id, const CounterWindow& window,
                                const VerifyOptions& options)
{
    DecodedOutput result;
    if (frame.size() < kMinOutputFrame || frame.size() > kMaxOutputPayload + kFrameOverhead) {
        return result;
    }
    SealedView view;
    result.status = verify_sealed(frame, key, expected_id, window, options, view);
    result.pdu.control_mcnt = view.control;
    result.pdu.identity = view.identity;
    result.pdu.mac = view.mac;
    result.pdu.crc = view.crc;
    if (result.ok()) {
        const auto payload = frame.subspan(kHeaderSize, frame.size() - kFrameOverhead);
        result.pdu.safety_data.assign(payload.begin(), payload.end());
    }
    return result;
}

std::vector<std::uint8_t> encode_input_pdu(std::span<const std::uint8_t> safety,
                                           std::span<const std::uint8_t> nonsafety, ControlMCnt ctl,
                                           PairingIdentity id, const SessionKey& key, const MacFunction& mac)
{
    if (safety.size() != kSafetyInputSize) {
        throw Error(ErrorCode::InvalidLength,
                    "safety input must be 6 octets, got " + std::to_string(safety.size()));
    }
    if (nonsafety.size() > kMaxNonSafetyInput) {
        throw Error(ErrorCode::InvalidLength,
                    "non-safety input limited to 16 octets, got " + std::to_string(nonsafety.size()));
    }
    std::vector<std::uint8_t> out;
    out.reserve(kInputFrameFixed + nonsafety.size());
    put_header(out, ctl, id);
    out.insert(out.end(), safety.begin(), safety.end());
    seal(out, key, mac);
    out.insert(out.end(), nonsafety.begin(), nonsafety.end());
    return out;
}

DecodedInput decode_input_pdu(std::span<const std::uint8_t> frame, const SessionKey& key,
                              PairingIdentity expected_id, const CounterWindow& window,
                              const VerifyOptions& options)
{
    DecodedInput result;
    if (frame.size() < kInputFrameFixed || frame.size() > kInputFrameFixed + kMaxNonSafetyInput) {
        return result;
    }
    SealedView view;
    const auto sealed = frame.first(kInputFrameFixed);
    result.status = verify_sealed(sealed, key, expected_id, window, options, view);
    result.pdu.control_mcnt = view.control;
    result.pdu.identity = view.identity;
    result.pdu.mac = view.mac;
    result.pdu.crc = view.crc;
    const auto nonsafety = frame.subspan(kInputFrameFixed);
    result.pdu.nonsafety_data.assign(nonsafety.begin(), nonsafety.end());
    if (result.ok()) {
        const auto safety = frame.subspan(kHeaderSize, kSafetyInputSize);
        result.pdu.safety_data.assign(safety.begin(), safety.end());
    }
    return result;
}

DecodedOutput SafetyReceiver::accept_output(std::span<const std::uint8_t> frame)
{
    auto result = decode_output_pdu(frame, key_, expected_, window_);
    if (result.ok()) {
        window_.last_accepted = result.pdu.control_mcnt.mcnt;
    }
    return result;
}

DecodedInput SafetyReceiver::accept_input(std::span<const std::uint8_t> frame)
{
    auto result = decode_input_pdu(frame, key_, expected_, window_);
    if (result.ok()) {
        window_.last_accepted = result.pdu.control_mcnt.mcnt;
    }
    return result;
}

std::string to_hex(std::span<const std::uint8_t> bytes)
{
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (const std::uint8_t b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0FU]);
    }
    return out;
}

std::vector<std::uint8_t> from_hex(std::string_view hex)
{
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (hex.size() % 2 != 0) {
        throw Error(ErrorCode::InvalidLength, "odd number of hex digits");
    }
    std::vector<std::uint8_t> out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        const int hi = nibble(hex[i]);
        const int lo = nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) {
            throw Error(ErrorCode::InvalidParameter, "invalid hex digit in '" + std::string(hex) + "'");
        }
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

std::vector<CorpusEntry> parse_corpus(std::string_view text)
{
    std::vector<CorpusEntry> entries;
    SessionKey key;
    PairingIdentity expected;
    CounterWindow window;

    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            std::istringstream directive(line.substr(1));
            std::string item;
            while (directive >> item) {
                const auto eq = item.find('=');
                if (eq == std::string::npos) {
                    continue;
                }
                const std::string name = item.substr(0, eq);
                const std::string value = item.substr(eq + 1);
                if (name == "key") {
                    const auto bytes = from_hex(value);
                    if (bytes.size() != kKeySize) {
                        throw Error(ErrorCode::InvalidLength, "corpus key must be 16 octets");
                    }
                    std::copy(bytes.begin(), bytes.end(), key.key_material.begin());
                } else if (name == "expect") {
                    const auto slash = value.find('/');
                    expected = {static_cast<std::uint8_t>(std::stoi(value.substr(0, slash))),
                                static_cast<std::uint8_t>(std::stoi(value.substr(slash + 1)))};
                } else if (name == "last") {
                    window.last_accepted = value == "none"
                                               ? std::nullopt
                                               : std::optional<std::uint16_t>(std::stoi(value));
                }
            }
            continue;
        }
        std::istringstream fields(line);
        std::string hex;
        std::string outcome;
        if (!(fields >> hex >> outcome)) {
            throw Error(ErrorCode::ConfigError, "malformed corpus line: " + line);
        }
        const auto status = parse_decode_status(outcome);
        if (!status) {
            throw Error(ErrorCode::ConfigError, "unknown outcome token: " + outcome);
        }
        entries.push_back({from_hex(hex), *status, key, expected, window});
    }
    return entries;
}

} // namespace iolws::pdu
