#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bdb/format.hpp"

namespace bdb {

struct RunRange {
    std::uint32_t lo = 1;
    std::uint32_t hi = 1;

    bool contains(std::uint32_t run) const { return run >= lo && run <= hi; }
    auto operator<=>(const RunRange&) const = default;
};

struct EventId {
    std::uint32_t run = 0;
    std::uint32_t event = 0;

    auto operator<=>(const EventId&) const = default;
};

// Either every event in the selected runs, or an explicit (run, event) list.
struct EventSelector {
    bool all = true;
    std::vector<EventId> explicit_events;  // sorted, unique when !all

    bool operator==(const EventSelector&) const = default;
};

struct Destination {
    std::string site_id;
    std::string path;

    bool operator==(const Destination&) const = default;
};

struct ExtractionRequest {
    int version = 1;
    std::string collection;
    Format format = Format::Micro;
    std::vector<RunRange> runs;  // normalized: sorted, disjoint, non-adjacent
    EventSelector events;
    Destination destination;
    std::string requester_dn;

    bool operator==(const ExtractionRequest&) const = default;
};

/// Sorts, merges overlapping and adjacent ranges (1-2,3-5 -> 1-5).
std::vector<RunRange> normalize_ranges(std::vector<RunRange> ranges);

struct ParseOptions {
    // Values containing `${...}` are accepted unvalidated (template documents).
    bool allow_placeholders = false;
};

/// Parses a `key: value` request document. Throws Error with SyntaxError,
/// UnknownFormat, BadRange or MissingField; line() names the offending line.
ExtractionRequest parse_request(std::string_view text, const ParseOptions& opts = {});

/// Renders a normalized request back to a document that parse_request accepts.
std::string serialize_request(const ExtractionRequest& req);

/// The byte string hashed into the request key. Destination and requester are
/// deliberately absent: identical selections share one cache entry.
std::string canonical_string(const ExtractionRequest& req);

/// 64 lowercase hex characters: SHA-256 of canonical_string().
std::string canonical_key(const ExtractionRequest& req);

std::string format_ranges(const std::vector<RunRange>& ranges);
std::string format_events(const EventSelector& events);

}  // namespace bdb
