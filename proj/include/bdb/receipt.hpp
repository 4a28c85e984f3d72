#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bdb/audit.hpp"
#include "bdb/clock.hpp"
#include "bdb/ids.hpp"

namespace bdb {

enum class ReceiptState { Queued, Collated, Extracting, Transferring, Done, Failed, Rejected };

std::string_view state_name(ReceiptState s);
std::optional<ReceiptState> parse_state(std::string_view name);

bool is_terminal(ReceiptState s);

/// Forward edges Queued->Collated->Extracting->Transferring->Done, the local
/// shortcut Extracting->Done, and Failed/Rejected from any non-terminal state.
bool is_valid_transition(ReceiptState from, ReceiptState to);

struct StateEntry {
    ReceiptState state;
    TimeMs at;
};

struct Receipt {
    std::string receipt_id;
    std::string owner_dn;
    ReceiptState state = ReceiptState::Queued;
    std::vector<StateEntry> history;
    std::string detail;  // reason for Failed/Rejected, result location for Done
};

// Owns every receipt's lifecycle. Each transition is validated and written to
// the audit log before it becomes visible through get().
class ReceiptStore {
public:
    using TerminalObserver = std::function<void(const Receipt&)>;

    ReceiptStore(AuditLog& audit, const Clock& clock, TokenSource& tokens);

    Receipt create(const std::string& owner_dn);

    /// Throws UnknownReceipt or InvalidTransition.
    Receipt advance(const std::string& receipt_id, ReceiptState to, const std::string& detail = {});

    /// Throws UnknownReceipt.
    Receipt get(const std::string& receipt_id) const;
    bool contains(const std::string& receipt_id) const;
    std::vector<Receipt> all() const;

    /// Invoked (outside the store lock) after a receipt enters a terminal state.
    void on_terminal(TerminalObserver observer);

private:
    AuditLog& audit_;
    const Clock& clock_;
    TokenSource& tokens_;
    mutable std::mutex mutex_;
    std::map<std::string, Receipt> receipts_;
    TerminalObserver observer_;
};

struct ReplayOutcome {
    std::map<std::string, ReceiptState> final_states;
    std::vector<std::string> violations;  // empty when every transition was legal
};

/// Re-runs the receipt state machine over the "state" records of an audit trail.
ReplayOutcome replay_receipts(const std::vector<AuditRecord>& records);

}  // namespace bdb
