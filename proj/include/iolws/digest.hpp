#pragma once

#include <string>
#include <string_view>

namespace iolws {

// Lowercase hex SHA-256 of `text`.
std::string sha256_hex(std::string_view text);

// First 16 hex digits of sha256_hex; used to key configs and artifacts.
std::string short_digest(std::string_view text);

} // namespace iolws
