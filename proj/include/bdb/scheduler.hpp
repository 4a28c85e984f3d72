#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "bdb/identity.hpp"
#include "bdb/intake.hpp"
#include "bdb/receipt.hpp"

namespace bdb {

struct SchedulerConfig {
    std::size_t max_concurrent = 20;
    std::size_t backlog_bound = 200;
};

enum class JobState { Pending, Running, Succeeded, Failed };

// Succeeded moves the receipt on to Transferring; SucceededLocal finishes it
// (destination is the source site, nothing to ship).
enum class JobOutcome { Succeeded, SucceededLocal, Failed };

struct Job {
    std::string receipt_id;
    ExtractionRequest request;
    std::string key;
    std::optional<AccountBinding> binding;
    JobState state = JobState::Pending;
};

struct SchedulerCounters {
    std::size_t enqueued = 0;
    std::size_t rejected = 0;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
};

// FIFO dispatch of collated requests under a hard running cap. Overflow beyond
// the backlog bound is rejected explicitly and audited, never dropped.
class Scheduler {
public:
    /// Returns the binding a job should run under, or nullopt to leave it (and
    /// everything behind it) pending until a later dispatch.
    using Admission = std::function<std::optional<AccountBinding>(const Job&)>;

    Scheduler(SchedulerConfig config, ReceiptStore& receipts);

    /// Appends jobs up to the backlog bound; the rest become Rejected (QueueFull).
    std::size_t enqueue_batch(const Batch& batch);

    /// Pending -> Running in FIFO order while below max_concurrent.
    std::vector<Job> next_dispatch(const Admission& admit = {});

    /// Throws UnknownJob or NotRunning.
    void complete_job(const std::string& receipt_id, JobOutcome outcome, const std::string& detail = {});

    std::size_t running() const;
    std::size_t pending() const;
    std::optional<Job> job(const std::string& receipt_id) const;
    SchedulerCounters counters() const;
    const SchedulerConfig& config() const { return config_; }

private:
    SchedulerConfig config_;
    ReceiptStore& receipts_;
    mutable std::mutex mutex_;
    std::deque<std::string> pending_;
    std::map<std::string, Job> jobs_;
    std::size_t running_ = 0;
    SchedulerCounters counters_;
};

}  // namespace bdb
