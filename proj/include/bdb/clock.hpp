#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace bdb {

/// Milliseconds on whichever clock is in use (wall or logical).
using TimeMs = std::int64_t;

class Clock {
public:
    virtual ~Clock() = default;
    virtual TimeMs now() const = 0;
};

class SystemClock final : public Clock {
public:
    TimeMs now() const override {
        using namespace std::chrono;
        return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
    }
};

// Logical clock driven by tests and the lifecycle driver. Never moves backward.
class ManualClock final : public Clock {
public:
    explicit ManualClock(TimeMs start = 0) : now_(start) {}

    TimeMs now() const override { return now_.load(); }

    void advance(TimeMs delta) {
        if (delta > 0) now_.fetch_add(delta);
    }

    void set(TimeMs t) {
        TimeMs cur = now_.load();
        while (t > cur && !now_.compare_exchange_weak(cur, t)) {
        }
    }

private:
    std::atomic<TimeMs> now_;
};

}  // namespace bdb
