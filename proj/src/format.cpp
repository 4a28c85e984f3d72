#include "bdb/format.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace bdb {

std::string_view format_name(Format f) {
    switch (f) {
        case Format::Micro: return "micro";
        case Format::Mini: return "mini";
        case Format::Kanga: return "kanga";
    }
    return "?";
}

std::optional<Format> parse_format(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "micro") return Format::Micro;
    if (lower == "mini") return Format::Mini;
    if (lower == "kanga") return Format::Kanga;
    return std::nullopt;
}

}  // namespace bdb
