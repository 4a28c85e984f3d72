#pragma once

#include <cstddef>
#include <deque>
#include <mutex>
#include <string>
#include <vector>

#include "bdb/audit.hpp"
#include "bdb/clock.hpp"
#include "bdb/receipt.hpp"
#include "bdb/request.hpp"

namespace bdb {

struct IntakeConfig {
    TimeMs collation_interval_ms = 900'000;
    std::size_t backlog_bound = 200;
};

struct QueuedRequest {
    std::string receipt_id;
    ExtractionRequest request;
    std::string key;
    TimeMs submitted_at = 0;
};

using Batch = std::vector<QueuedRequest>;

// Accepts authenticated submissions and gathers them into FIFO batches on a
// fixed collation grid (start, start + interval, start + 2*interval, ...).
class RequestIntake {
public:
    RequestIntake(IntakeConfig config, ReceiptStore& receipts, AuditLog& audit, const Clock& clock);

    /// Throws IdentityMismatch, or QueueFull once `backlog_bound` requests are
    /// waiting. A QueueFull submission still gets a receipt, recorded as
    /// Rejected; its id is in the error message.
    Receipt submit(const ExtractionRequest& request, const std::string& authenticated_dn);

    bool collation_due(TimeMs now) const;

    /// Moves every Queued request to Collated in submission order.
    Batch collate(TimeMs now);

    Receipt status(const std::string& receipt_id) const { return receipts_.get(receipt_id); }

    std::size_t queued() const;
    TimeMs next_collation() const;
    const IntakeConfig& config() const { return config_; }

private:
    IntakeConfig config_;
    ReceiptStore& receipts_;
    AuditLog& audit_;
    const Clock& clock_;
    mutable std::mutex mutex_;
    std::deque<QueuedRequest> queue_;
    TimeMs next_due_;
};

}  // namespace bdb
