#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "bdb/clock.hpp"

namespace bdb {

struct AuditRecord {
    std::uint64_t seq = 0;
    TimeMs timestamp = 0;
    std::string receipt_id;  // "-" when not tied to a receipt
    std::string actor;       // requester DN or "system"
    std::string kind;        // "state", "binding", "lease-release", "notify", ...
    std::string detail;

    bool operator==(const AuditRecord&) const = default;
};

std::string audit_to_json(const AuditRecord& rec);
AuditRecord audit_from_json(const std::string& line);

// Append-only audit trail, one JSON record per line, fsync'd per append.
// Sequence numbers start at 1 and never skip. Reopening an existing file
// continues its numbering. An empty path keeps the trail in memory only.
class AuditLog {
public:
    AuditLog(std::filesystem::path path, const Clock& clock);
    ~AuditLog();

    AuditLog(const AuditLog&) = delete;
    AuditLog& operator=(const AuditLog&) = delete;

    /// Throws LogUnwritable; the sequence number is not consumed on failure.
    AuditRecord append(const std::string& receipt_id, const std::string& actor, const std::string& kind,
                       const std::string& detail);

    /// Records appended through this handle (plus those found on open).
    std::vector<AuditRecord> records() const;
    std::uint64_t last_seq() const;
    const std::filesystem::path& path() const { return path_; }

    static std::vector<AuditRecord> read_file(const std::filesystem::path& path);

private:
    std::filesystem::path path_;
    const Clock& clock_;
    mutable std::mutex mutex_;
    int fd_ = -1;
    std::uint64_t seq_ = 0;
    std::vector<AuditRecord> records_;
};

/// True iff seqs are exactly 1..N in order.
bool audit_gap_free(const std::vector<AuditRecord>& records);

}  // namespace bdb
