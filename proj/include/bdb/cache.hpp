#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <list>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "bdb/audit.hpp"
#include "bdb/clock.hpp"
#include "bdb/extraction.hpp"

namespace bdb {

// Byte-budgeted LRU bookkeeping without any storage behind it. Pinned keys
// are never chosen for eviction.
class LruIndex {
public:
    explicit LruIndex(std::uint64_t budget_bytes) : budget_(budget_bytes) {}

    bool contains(const std::string& key) const { return pos_.contains(key); }
    /// Inserts as most recently used. The key must not be present.
    void insert(const std::string& key, std::uint64_t bytes);
    void touch(const std::string& key);
    void erase(const std::string& key);
    void pin(const std::string& key);
    void unpin(const std::string& key);
    bool pinned(const std::string& key) const;

    /// Least-recently-used unpinned keys to drop so that `needed` more bytes
    /// fit in the budget. Nothing is removed from the index here; throws
    /// CannotFit when needed > budget or pins make it impossible.
    std::vector<std::string> plan_eviction(std::uint64_t needed) const;
    /// plan_eviction() followed by erasing the planned keys.
    std::vector<std::string> evict_to_fit(std::uint64_t needed);

    std::uint64_t resident_bytes() const { return resident_; }
    std::uint64_t budget_bytes() const { return budget_; }
    std::size_t size() const { return pos_.size(); }
    /// Least to most recently used.
    std::vector<std::string> order() const;

private:
    struct Slot {
        std::string key;
        std::uint64_t bytes;
        int pins;
    };
    std::uint64_t budget_;
    std::uint64_t resident_ = 0;
    std::list<Slot> lru_;  // front = least recently used
    std::unordered_map<std::string, std::list<Slot>::iterator> pos_;
};

struct CacheConfig {
    std::uint64_t budget_bytes = 1ull << 30;
    std::filesystem::path root;
};

struct CacheEntry {
    std::string key;
    std::filesystem::path result_path;
    std::uint64_t byte_size = 0;
    TimeMs created_at = 0;
    TimeMs last_hit_at = 0;
    std::uint64_t hit_count = 0;
    std::string source_checksum;
    std::string output_checksum;
};

class ExtractionCache;

// Keeps an entry resident while its bytes are being served.
class CachePin {
public:
    CachePin() = default;
    CachePin(ExtractionCache* cache, std::string key) : cache_(cache), key_(std::move(key)) {}
    CachePin(CachePin&& other) noexcept;
    CachePin& operator=(CachePin&& other) noexcept;
    CachePin(const CachePin&) = delete;
    CachePin& operator=(const CachePin&) = delete;
    ~CachePin() { reset(); }

    void reset();
    explicit operator bool() const { return cache_ != nullptr; }

private:
    ExtractionCache* cache_ = nullptr;
    std::string key_;
};

struct CacheRef {
    CacheEntry entry;
    CachePin pin;
};

struct CacheTicket {
    std::string key;
    std::uint64_t token = 0;
};

using CacheLookup = std::variant<CacheRef, CacheTicket>;

struct CacheStats {
    std::size_t entries = 0;
    std::uint64_t resident_bytes = 0;
    std::uint64_t budget_bytes = 0;
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t evictions = 0;
};

// Content-addressed store of finished extractions, keyed by request key:
//   <root>/<first 2 hex of key>/<key>/{events.dat,manifest,extract,entry}
//
// lookup_or_begin() is single-flight: while one caller holds the ticket for a
// key, others asking for the same key block until it is committed (they get
// a hit) or abandoned (one of them gets the next ticket).
class ExtractionCache {
public:
    ExtractionCache(CacheConfig config, const Clock& clock, AuditLog* audit = nullptr);

    CacheLookup lookup_or_begin(const std::string& key);

    /// Moves the result directory into the cache. Throws StaleTicket,
    /// ChecksumMismatch, OverBudgetEntry or CannotFit; on any throw the ticket
    /// is consumed, the cache is unchanged and the result stays where it was.
    CacheRef commit(const CacheTicket& ticket, const ExtractionResult& result);

    /// Gives up a ticket without a result.
    void abandon(const CacheTicket& ticket);

    /// Throws CannotFit when needed > budget.
    std::vector<std::string> evict_to_fit(std::uint64_t needed_bytes);

    /// Entry snapshot without counting a hit.
    std::optional<CacheEntry> peek(const std::string& key) const;
    CacheStats stats() const;
    const CacheConfig& config() const { return config_; }

    std::filesystem::path entry_dir(const std::string& key) const;

private:
    friend class CachePin;
    void unpin(const std::string& key);
    void finish_flight(const std::string& key);
    void write_entry_file(const CacheEntry& entry) const;
    std::vector<std::string> evict_locked(std::uint64_t needed_bytes);
    void load_existing();

    CacheConfig config_;
    const Clock& clock_;
    AuditLog* audit_;
    mutable std::mutex mutex_;
    std::condition_variable flight_done_;
    LruIndex index_;
    std::map<std::string, CacheEntry> entries_;
    std::map<std::string, std::uint64_t> in_flight_;
    std::uint64_t next_token_ = 1;
    CacheStats counters_;
};

}  // namespace bdb
