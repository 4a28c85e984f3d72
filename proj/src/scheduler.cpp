#include "bdb/scheduler.hpp"

#include "bdb/error.hpp"

namespace bdb {

Scheduler::Scheduler(SchedulerConfig config, ReceiptStore& receipts) : config_(config), receipts_(receipts) {
    if (config_.max_concurrent == 0 || config_.backlog_bound == 0)
        throw Error(Errc::ConfigError, "scheduler.max_concurrent and scheduler.backlog_bound must be >= 1");
}

std::size_t Scheduler::enqueue_batch(const Batch& batch) {
    std::vector<std::string> rejected;
    std::size_t accepted = 0;
    {
        std::lock_guard lock(mutex_);
        for (const auto& q : batch) {
            if (pending_.size() >= config_.backlog_bound) {
                rejected.push_back(q.receipt_id);
                continue;
            }
            jobs_[q.receipt_id] = Job{q.receipt_id, q.request, q.key, std::nullopt, JobState::Pending};
            pending_.push_back(q.receipt_id);
            ++accepted;
        }
        counters_.enqueued += accepted;
        counters_.rejected += rejected.size();
    }
    for (const auto& id : rejected) receipts_.advance(id, ReceiptState::Rejected, "QueueFull");
    return accepted;
}

std::vector<Job> Scheduler::next_dispatch(const Admission& admit) {
    std::vector<Job> started;
    {
        std::lock_guard lock(mutex_);
        while (!pending_.empty() && running_ < config_.max_concurrent) {
            auto& job = jobs_.at(pending_.front());
            if (admit) {
                auto binding = admit(job);
                if (!binding) break;
                job.binding = std::move(binding);
            }
            pending_.pop_front();
            job.state = JobState::Running;
            ++running_;
            started.push_back(job);
        }
    }
    for (const auto& job : started) receipts_.advance(job.receipt_id, ReceiptState::Extracting);
    return started;
}

void Scheduler::complete_job(const std::string& receipt_id, JobOutcome outcome, const std::string& detail) {
    {
        std::lock_guard lock(mutex_);
        auto it = jobs_.find(receipt_id);
        if (it == jobs_.end()) throw Error(Errc::UnknownJob, "unknown job " + receipt_id);
        if (it->second.state != JobState::Running) throw Error(Errc::NotRunning, "job " + receipt_id + " is not running");
        it->second.state = outcome == JobOutcome::Failed ? JobState::Failed : JobState::Succeeded;
        --running_;
        if (outcome == JobOutcome::Failed) ++counters_.failed;
        else ++counters_.succeeded;
    }
    switch (outcome) {
        case JobOutcome::Succeeded: receipts_.advance(receipt_id, ReceiptState::Transferring, detail); break;
        case JobOutcome::SucceededLocal: receipts_.advance(receipt_id, ReceiptState::Done, detail); break;
        case JobOutcome::Failed: receipts_.advance(receipt_id, ReceiptState::Failed, detail); break;
    }
}

std::size_t Scheduler::running() const {
    std::lock_guard lock(mutex_);
    return running_;
}

std::size_t Scheduler::pending() const {
    std::lock_guard lock(mutex_);
    return pending_.size();
}

std::optional<Job> Scheduler::job(const std::string& receipt_id) const {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(receipt_id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second;
}

SchedulerCounters Scheduler::counters() const {
    std::lock_guard lock(mutex_);
    return counters_;
}

}  // namespace bdb
