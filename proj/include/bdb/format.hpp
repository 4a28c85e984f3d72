#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace bdb {

// Event data formats. Each is stored as an independent payload section of an
// event record, identified by a fixed tag.
enum class Format : std::uint8_t { Micro = 1, Mini = 2, Kanga = 3 };

constexpr std::uint8_t section_tag(Format f) { return static_cast<std::uint8_t>(f); }

constexpr std::optional<Format> format_from_tag(std::uint8_t tag) {
    if (tag >= 1 && tag <= 3) return static_cast<Format>(tag);
    return std::nullopt;
}

/// Lowercase keyword: "micro", "mini", "kanga".
std::string_view format_name(Format f);

/// Case-insensitive.
std::optional<Format> parse_format(std::string_view text);

}  // namespace bdb
