#include "bdb/intake.hpp"

#include "bdb/error.hpp"

namespace bdb {

RequestIntake::RequestIntake(IntakeConfig config, ReceiptStore& receipts, AuditLog& audit, const Clock& clock)
    : config_(config), receipts_(receipts), audit_(audit), clock_(clock) {
    if (config_.collation_interval_ms <= 0) throw Error(Errc::ConfigError, "collation interval must be positive");
    if (config_.backlog_bound == 0) throw Error(Errc::ConfigError, "backlog bound must be >= 1");
    next_due_ = clock_.now() + config_.collation_interval_ms;
}

Receipt RequestIntake::submit(const ExtractionRequest& request, const std::string& authenticated_dn) {
    if (authenticated_dn != request.requester_dn) {
        audit_.append("-", authenticated_dn, "identity-mismatch", "request names " + request.requester_dn);
        throw Error(Errc::IdentityMismatch, "authenticated DN does not match requester");
    }
    std::unique_lock lock(mutex_);
    auto receipt = receipts_.create(authenticated_dn);
    if (queue_.size() >= config_.backlog_bound) {
        lock.unlock();
        receipts_.advance(receipt.receipt_id, ReceiptState::Rejected, "QueueFull");
        throw Error(Errc::QueueFull, "request backlog full; receipt " + receipt.receipt_id + " rejected");
    }
    queue_.push_back({receipt.receipt_id, request, canonical_key(request), clock_.now()});
    return receipt;
}

bool RequestIntake::collation_due(TimeMs now) const {
    std::lock_guard lock(mutex_);
    return now >= next_due_;
}

Batch RequestIntake::collate(TimeMs now) {
    Batch batch;
    {
        std::lock_guard lock(mutex_);
        batch.assign(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
        queue_.clear();
        if (now >= next_due_) {
            auto missed = (now - next_due_) / config_.collation_interval_ms;
            next_due_ += (missed + 1) * config_.collation_interval_ms;
        }
    }
    for (const auto& q : batch) receipts_.advance(q.receipt_id, ReceiptState::Collated);
    return batch;
}

std::size_t RequestIntake::queued() const {
    std::lock_guard lock(mutex_);
    return queue_.size();
}

TimeMs RequestIntake::next_collation() const {
    std::lock_guard lock(mutex_);
    return next_due_;
}

}  // namespace bdb
