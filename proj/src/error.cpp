#include "iolws/error.hpp"

namespace iolws {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidLength: return "INVALID_LENGTH";
    case ErrorCode::PayloadTooLong: return "PAYLOAD_TOO_LONG";
    case ErrorCode::InvalidParameter: return "INVALID_PARAMETER";
    case ErrorCode::ProtocolViolation: return "PROTOCOL_VIOLATION";
    case ErrorCode::SlotOccupied: return "SLOT_OCCUPIED";
    case ErrorCode::UnknownDevice: return "UNKNOWN_DEVICE";
    case ErrorCode::NotConnectedWithinWindow: return "NOT_CONNECTED_WITHIN_WINDOW";
    case ErrorCode::TooManyDiscards: return "TOO_MANY_DISCARDS";
    case ErrorCode::CalibrationDiverged: return "CALIBRATION_DIVERGED";
    case ErrorCode::EmptySeries: return "EMPTY_SERIES";
    case ErrorCode::RowMismatch: return "ROW_MISMATCH";
    case ErrorCode::ConfigError: return "CONFIG_ERROR";
    case ErrorCode::IoError: return "IO_ERROR";
    }
    return "UNKNOWN";
}

} // namespace iolws
