#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace bdb {

// Fixed set of threads draining a task queue. With zero threads every task
// runs inline inside post(), which keeps lifecycle tests deterministic.
class WorkerPool {
public:
    explicit WorkerPool(std::size_t threads);
    ~WorkerPool();

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    void post(std::function<void()> task);
    /// Blocks until the queue is empty and no task is running.
    void wait_idle();
    std::size_t threads() const { return threads_.size(); }

private:
    void run();

    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable work_;
    std::condition_variable idle_;
    std::deque<std::function<void()>> tasks_;
    std::size_t busy_ = 0;
    bool stopping_ = false;
};

}  // namespace bdb
