#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "bdb/event_store.hpp"
#include "bdb/request.hpp"

namespace bdb {

inline constexpr const char* kExtractFileName = "extract";

struct Selection {
    std::vector<RunRange> runs;  // normalized
    EventSelector events;
};

/// Records whose run lies in a range and, for explicit selectors, whose
/// (run, event) is listed. Ascending (run, event).
std::vector<EventId> select_events(const EventStore& store, const std::vector<RunRange>& runs,
                                   const EventSelector& events);

struct ExtractManifest {
    std::string request_key;
    Format format = Format::Micro;
    std::string runs;
    std::string events;
    std::string source_checksum;
    std::string output_checksum;  // of the output data file
    std::uint64_t byte_size = 0;  // output store: data file + store manifest

    bool operator==(const ExtractManifest&) const = default;
};

std::string render_extract_manifest(const ExtractManifest& m);
ExtractManifest parse_extract_manifest(std::string_view text);

struct ExtractionResult {
    std::filesystem::path dir;
    ExtractManifest manifest;
    std::uint64_t disk_bytes = 0;  // every file in `dir`, the amount charged to quota
};

struct DeepCopyOptions {
    std::string request_key;
    // Charged once with the full output size before anything is written; a
    // throw (QuotaExceeded) aborts the copy and removes dest_dir.
    std::function<void(std::uint64_t)> charge;
};

/// Self-contained copy of the selected records reduced to `format`'s section,
/// written to `dest_dir` (must not exist or be empty). Output bytes depend only
/// on the inputs. Throws EmptySelection, FormatAbsent or QuotaExceeded.
ExtractionResult deep_copy(const EventStore& store, const Selection& selection, Format format,
                           const std::filesystem::path& dest_dir, const DeepCopyOptions& options = {});

/// Reopens an extraction directory, re-verifying the store checksum and the
/// extract manifest against it. Throws like EventStore::open or ChecksumMismatch.
ExtractionResult open_result(const std::filesystem::path& dir);

std::uint64_t directory_bytes(const std::filesystem::path& dir);

}  // namespace bdb
