#include "bdb/notify.hpp"

#include <fstream>
#include <iostream>

#include "bdb/error.hpp"

namespace bdb {

void FileSink::deliver(const std::string& message) {
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error(Errc::SinkUnavailable, "cannot open notification file " + path_.string());
    out << message << '\n';
    if (!out.flush()) throw Error(Errc::SinkUnavailable, "cannot write notification file " + path_.string());
}

void StreamSink::deliver(const std::string& message) {
    std::lock_guard lock(mutex_);
    out_ << message << '\n';
    out_.flush();
    if (!out_) throw Error(Errc::SinkUnavailable, "notification stream failed");
}

std::unique_ptr<NotificationSink> make_sink(SinkKind kind, const std::string& target) {
    switch (kind) {
        case SinkKind::File: return std::make_unique<FileSink>(target);
        case SinkKind::Stdout: return std::make_unique<StreamSink>(std::cout);
        case SinkKind::Null: return std::make_unique<NullSink>();
    }
    return std::make_unique<NullSink>();
}

std::string notification_text(const Receipt& r) {
    std::string text = "receipt=" + r.receipt_id + " state=" + std::string(state_name(r.state));
    if (r.state == ReceiptState::Done) text += " location=" + r.detail;
    else if (!r.detail.empty()) text += " reason=" + r.detail;
    return text;
}

Notifier::Notifier(std::unique_ptr<NotificationSink> sink, AuditLog& audit) : sink_(std::move(sink)), audit_(audit) {}

bool Notifier::notify(const Receipt& receipt) {
    if (!is_terminal(receipt.state))
        throw Error(Errc::InvalidTransition, "notify on non-terminal receipt " + receipt.receipt_id);
    {
        std::lock_guard lock(mutex_);
        if (!fired_.insert(receipt.receipt_id).second) return false;
    }
    auto text = notification_text(receipt);
    try {
        sink_->deliver(text);
    } catch (const Error& e) {
        audit_.append(receipt.receipt_id, "system", "notify-failed", e.what());
        return false;
    }
    audit_.append(receipt.receipt_id, "system", "notify", text);
    return true;
}

std::size_t Notifier::notified() const {
    std::lock_guard lock(mutex_);
    return fired_.size();
}

}  // namespace bdb
