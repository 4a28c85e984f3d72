#include "bdb/receipt.hpp"

#include "bdb/error.hpp"

namespace bdb {

std::string_view state_name(ReceiptState s) {
    switch (s) {
        case ReceiptState::Queued: return "Queued";
        case ReceiptState::Collated: return "Collated";
        case ReceiptState::Extracting: return "Extracting";
        case ReceiptState::Transferring: return "Transferring";
        case ReceiptState::Done: return "Done";
        case ReceiptState::Failed: return "Failed";
        case ReceiptState::Rejected: return "Rejected";
    }
    return "?";
}

std::optional<ReceiptState> parse_state(std::string_view name) {
    for (auto s : {ReceiptState::Queued, ReceiptState::Collated, ReceiptState::Extracting, ReceiptState::Transferring,
                   ReceiptState::Done, ReceiptState::Failed, ReceiptState::Rejected}) {
        if (state_name(s) == name) return s;
    }
    return std::nullopt;
}

bool is_terminal(ReceiptState s) {
    return s == ReceiptState::Done || s == ReceiptState::Failed || s == ReceiptState::Rejected;
}

bool is_valid_transition(ReceiptState from, ReceiptState to) {
    using S = ReceiptState;
    if (is_terminal(from)) return false;
    if (to == S::Failed || to == S::Rejected) return true;
    switch (from) {
        case S::Queued: return to == S::Collated;
        case S::Collated: return to == S::Extracting;
        case S::Extracting: return to == S::Transferring || to == S::Done;
        case S::Transferring: return to == S::Done;
        default: return false;
    }
}

ReceiptStore::ReceiptStore(AuditLog& audit, const Clock& clock, TokenSource& tokens)
    : audit_(audit), clock_(clock), tokens_(tokens) {}

Receipt ReceiptStore::create(const std::string& owner_dn) {
    std::lock_guard lock(mutex_);
    std::string id;
    do {
        id = tokens_.hex(8);
    } while (receipts_.contains(id));
    Receipt r;
    r.receipt_id = id;
    r.owner_dn = owner_dn;
    r.state = ReceiptState::Queued;
    audit_.append(id, owner_dn, "state", std::string(state_name(r.state)));
    r.history.push_back({r.state, clock_.now()});
    receipts_.emplace(id, r);
    return r;
}

Receipt ReceiptStore::advance(const std::string& receipt_id, ReceiptState to, const std::string& detail) {
    Receipt snapshot;
    TerminalObserver observer;
    {
        std::lock_guard lock(mutex_);
        auto it = receipts_.find(receipt_id);
        if (it == receipts_.end()) throw Error(Errc::UnknownReceipt, "unknown receipt " + receipt_id);
        auto& r = it->second;
        if (!is_valid_transition(r.state, to))
            throw Error(Errc::InvalidTransition, "receipt " + receipt_id + ": " + std::string(state_name(r.state)) +
                                                     " -> " + std::string(state_name(to)));
        std::string text(state_name(to));
        if (!detail.empty()) text += " " + detail;
        audit_.append(receipt_id, "system", "state", text);
        r.state = to;
        r.history.push_back({to, clock_.now()});
        if (!detail.empty()) r.detail = detail;
        snapshot = r;
        if (is_terminal(to)) observer = observer_;
    }
    if (observer) observer(snapshot);
    return snapshot;
}

Receipt ReceiptStore::get(const std::string& receipt_id) const {
    std::lock_guard lock(mutex_);
    auto it = receipts_.find(receipt_id);
    if (it == receipts_.end()) throw Error(Errc::UnknownReceipt, "unknown receipt " + receipt_id);
    return it->second;
}

bool ReceiptStore::contains(const std::string& receipt_id) const {
    std::lock_guard lock(mutex_);
    return receipts_.contains(receipt_id);
}

std::vector<Receipt> ReceiptStore::all() const {
    std::lock_guard lock(mutex_);
    std::vector<Receipt> out;
    out.reserve(receipts_.size());
    for (const auto& [_, r] : receipts_) out.push_back(r);
    return out;
}

void ReceiptStore::on_terminal(TerminalObserver observer) {
    std::lock_guard lock(mutex_);
    observer_ = std::move(observer);
}

ReplayOutcome replay_receipts(const std::vector<AuditRecord>& records) {
    ReplayOutcome out;
    for (const auto& rec : records) {
        if (rec.kind != "state") continue;
        auto name = rec.detail.substr(0, rec.detail.find(' '));
        auto to = parse_state(name);
        if (!to) {
            out.violations.push_back("seq " + std::to_string(rec.seq) + ": unknown state " + name);
            continue;
        }
        auto it = out.final_states.find(rec.receipt_id);
        if (it == out.final_states.end()) {
            if (*to != ReceiptState::Queued)
                out.violations.push_back("seq " + std::to_string(rec.seq) + ": receipt " + rec.receipt_id +
                                         " starts in " + name);
            out.final_states.emplace(rec.receipt_id, *to);
            continue;
        }
        if (!is_valid_transition(it->second, *to))
            out.violations.push_back("seq " + std::to_string(rec.seq) + ": receipt " + rec.receipt_id + " " +
                                     std::string(state_name(it->second)) + " -> " + name);
        it->second = *to;
    }
    return out;
}

}  // namespace bdb
