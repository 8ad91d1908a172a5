#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iolws {

// Error codes surfaced by the library. Verification outcomes of the safety
// codec are reported through DecodeStatus instead; these are for contract
// violations and infeasible runs.
enum class ErrorCode {
    InvalidLength,
    PayloadTooLong,
    InvalidParameter,
    ProtocolViolation,
    SlotOccupied,
    UnknownDevice,
    NotConnectedWithinWindow,
    TooManyDiscards,
    CalibrationDiverged,
    EmptySeries,
    RowMismatch,
    ConfigError,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace iolws
