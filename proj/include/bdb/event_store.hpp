#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bdb/format.hpp"
#include "bdb/request.hpp"

namespace bdb {

// Data file layout, little-endian throughout:
//   "BDBS" 0x01
//   per record: u32 run, u32 event, u8 section count,
//               per section: u8 tag, u32 length, payload
inline constexpr std::string_view kStoreMagic = "BDBS";
inline constexpr std::uint8_t kStoreVersion = 0x01;
inline constexpr const char* kDataFileName = "events.dat";
inline constexpr const char* kManifestFileName = "manifest";

struct EventRecord {
    std::uint32_t run = 0;
    std::uint32_t event = 0;
    std::map<std::uint8_t, std::vector<std::uint8_t>> sections;  // tag -> opaque payload

    EventId id() const { return {run, event}; }
    bool operator==(const EventRecord&) const = default;
};

struct StoreManifest {
    std::string collection;
    std::uint64_t event_count = 0;
    std::optional<RunRange> run_span;
    std::vector<Format> formats;  // ascending tag order
    std::string checksum;         // SHA-256 hex of the data file

    bool operator==(const StoreManifest&) const = default;
};

std::vector<std::uint8_t> encode_records(std::span<const EventRecord> records);

/// Throws BadMagic or CorruptStore.
std::vector<EventRecord> decode_records(std::span<const std::uint8_t> bytes);

/// `key=value` lines: collection, events, runs, formats, checksum.
std::string render_manifest(const StoreManifest& manifest);
StoreManifest parse_manifest(std::string_view text);

StoreManifest describe_records(const std::string& collection, std::span<const EventRecord> records,
                               const std::vector<std::uint8_t>& data);

/// Writes records in the given order and a matching manifest under `root`.
StoreManifest write_store(const std::filesystem::path& root, const std::string& collection,
                          std::span<const EventRecord> records);

// An opened, checksum-verified event store. Immutable after open, so one
// instance may be shared by concurrent extractions.
class EventStore {
public:
    /// Throws MissingManifest, ChecksumMismatch, BadMagic or CorruptStore.
    static EventStore open(const std::filesystem::path& root);

    const std::filesystem::path& root() const { return root_; }
    const StoreManifest& manifest() const { return manifest_; }
    const std::vector<EventRecord>& records() const { return records_; }

private:
    std::filesystem::path root_;
    StoreManifest manifest_;
    std::vector<EventRecord> records_;
};

inline EventStore open_store(const std::filesystem::path& root) { return EventStore::open(root); }

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_text(const std::filesystem::path& path, std::string_view text);

}  // namespace bdb
