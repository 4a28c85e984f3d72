#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bdb {

// Every failure the broker can surface. Names are stable: they appear in the
// audit log and, converted to UPPER_SNAKE, as client protocol error codes.
enum class Errc {
    DuplicateSite,
    UnknownSite,
    DuplicatePlacement,
    UnknownCollection,
    SyntaxError,
    UnknownFormat,
    BadRange,
    MissingField,
    IdentityMismatch,
    QueueFull,
    UnknownReceipt,
    InvalidTransition,
    NoIdentity,
    PoolExhausted,
    QuotaTooSmall,
    QuotaExceeded,
    UnknownLease,
    SandboxViolation,
    UnknownJob,
    NotRunning,
    MissingManifest,
    ChecksumMismatch,
    BadMagic,
    CorruptStore,
    EmptySelection,
    FormatAbsent,
    StaleTicket,
    OverBudgetEntry,
    CannotFit,
    UnknownDestination,
    DestinationUnreachable,
    DuplicateEndpoint,
    UnknownEndpoint,
    BadFrame,
    LogUnwritable,
    SinkUnavailable,
    ConfigError,
    UnresolvedPlaceholder,
    UnknownTemplate,
    DataUnavailable,
    BadMessage,
    NotReady,
    NotAuthenticated,
    ConnectFailed,
    IoError,
};

std::string_view errc_name(Errc code);

// "QueueFull" -> "QUEUE_FULL"
std::string wire_code(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what, std::size_t line = 0);

    Errc code() const noexcept { return code_; }

    /// 1-based input line for parse diagnostics, 0 when not line-specific.
    std::size_t line() const noexcept { return line_; }

private:
    Errc code_;
    std::size_t line_;
};

}  // namespace bdb
