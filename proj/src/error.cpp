#include "bdb/error.hpp"

#include <cctype>

namespace bdb {

std::string_view errc_name(Errc code) {
    switch (code) {
        case Errc::DuplicateSite: return "DuplicateSite";
        case Errc::UnknownSite: return "UnknownSite";
        case Errc::DuplicatePlacement: return "DuplicatePlacement";
        case Errc::UnknownCollection: return "UnknownCollection";
        case Errc::SyntaxError: return "SyntaxError";
        case Errc::UnknownFormat: return "UnknownFormat";
        case Errc::BadRange: return "BadRange";
        case Errc::MissingField: return "MissingField";
        case Errc::IdentityMismatch: return "IdentityMismatch";
        case Errc::QueueFull: return "QueueFull";
        case Errc::UnknownReceipt: return "UnknownReceipt";
        case Errc::InvalidTransition: return "InvalidTransition";
        case Errc::NoIdentity: return "NoIdentity";
        case Errc::PoolExhausted: return "PoolExhausted";
        case Errc::QuotaTooSmall: return "QuotaTooSmall";
        case Errc::QuotaExceeded: return "QuotaExceeded";
        case Errc::UnknownLease: return "UnknownLease";
        case Errc::SandboxViolation: return "SandboxViolation";
        case Errc::UnknownJob: return "UnknownJob";
        case Errc::NotRunning: return "NotRunning";
        case Errc::MissingManifest: return "MissingManifest";
        case Errc::ChecksumMismatch: return "ChecksumMismatch";
        case Errc::BadMagic: return "BadMagic";
        case Errc::CorruptStore: return "CorruptStore";
        case Errc::EmptySelection: return "EmptySelection";
        case Errc::FormatAbsent: return "FormatAbsent";
        case Errc::StaleTicket: return "StaleTicket";
        case Errc::OverBudgetEntry: return "OverBudgetEntry";
        case Errc::CannotFit: return "CannotFit";
        case Errc::UnknownDestination: return "UnknownDestination";
        case Errc::DestinationUnreachable: return "DestinationUnreachable";
        case Errc::DuplicateEndpoint: return "DuplicateEndpoint";
        case Errc::UnknownEndpoint: return "UnknownEndpoint";
        case Errc::BadFrame: return "BadFrame";
        case Errc::LogUnwritable: return "LogUnwritable";
        case Errc::SinkUnavailable: return "SinkUnavailable";
        case Errc::ConfigError: return "ConfigError";
        case Errc::UnresolvedPlaceholder: return "UnresolvedPlaceholder";
        case Errc::UnknownTemplate: return "UnknownTemplate";
        case Errc::DataUnavailable: return "DataUnavailable";
        case Errc::BadMessage: return "BadMessage";
        case Errc::NotReady: return "NotReady";
        case Errc::NotAuthenticated: return "NotAuthenticated";
        case Errc::ConnectFailed: return "ConnectFailed";
        case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

std::string wire_code(Errc code) {
    std::string out;
    for (char c : errc_name(code)) {
        if (std::isupper(static_cast<unsigned char>(c)) && !out.empty()) out.push_back('_');
        out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    return out;
}

Error::Error(Errc code, const std::string& what, std::size_t line)
    : std::runtime_error(what), code_(code), line_(line) {}

}  // namespace bdb
