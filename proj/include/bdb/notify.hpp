#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <string>

#include "bdb/audit.hpp"
#include "bdb/receipt.hpp"

namespace bdb {

enum class SinkKind { File, Stdout, Null };

// Where "your request is finished" messages go. deliver() throws
// SinkUnavailable when the message cannot be handed over.
class NotificationSink {
public:
    virtual ~NotificationSink() = default;
    virtual void deliver(const std::string& message) = 0;
};

class FileSink final : public NotificationSink {
public:
    explicit FileSink(std::filesystem::path path) : path_(std::move(path)) {}
    void deliver(const std::string& message) override;

private:
    std::filesystem::path path_;
    std::mutex mutex_;
};

class StreamSink final : public NotificationSink {
public:
    explicit StreamSink(std::ostream& out) : out_(out) {}
    void deliver(const std::string& message) override;

private:
    std::ostream& out_;
    std::mutex mutex_;
};

class NullSink final : public NotificationSink {
public:
    void deliver(const std::string&) override {}
};

/// File sinks write to `target`; Stdout uses std::cout.
std::unique_ptr<NotificationSink> make_sink(SinkKind kind, const std::string& target = {});

/// One line: receipt=<id> state=<State> [location=<site:path>|reason=<text>]
std::string notification_text(const Receipt& receipt);

// Fires at most one message per receipt, only for terminal states. Delivery
// failures are audited and swallowed so they never hold up the pipeline.
class Notifier {
public:
    Notifier(std::unique_ptr<NotificationSink> sink, AuditLog& audit);

    /// False when suppressed (already notified) or the sink failed. Throws
    /// InvalidTransition for a non-terminal receipt.
    bool notify(const Receipt& receipt);

    std::size_t notified() const;

private:
    std::unique_ptr<NotificationSink> sink_;
    AuditLog& audit_;
    mutable std::mutex mutex_;
    std::set<std::string> fired_;
};

}  // namespace bdb
