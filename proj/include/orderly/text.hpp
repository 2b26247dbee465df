#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace orderly {

/// Lowercase, 0x-prefixed, no leading zeros: 0x0, 0x1f.
std::string to_hex(std::uint64_t v);

/// Two's-complement displacement rendered with a sign: "0x8", "-0x8".
std::string to_signed_hex(std::int64_t v);

/// Accepts 0x-prefixed hex only (1-16 digits, either case).
std::optional<std::uint64_t> parse_hex(std::string_view text);

/// Accepts decimal or 0x-hex, with an optional leading '-' (two's complement).
std::optional<std::uint64_t> parse_number(std::string_view text);

std::string_view trim(std::string_view s);

}  // namespace orderly
