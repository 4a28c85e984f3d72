#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "bdb/broker.hpp"
#include "bdb/receipt.hpp"

namespace bdb {

// Per-connection state. HELLO sets the DN; SUBMIT requires it.
struct Session {
    std::string dn;
    bool authenticated() const { return !dn.empty(); }
};

/// One request line in, one response line out (no trailing newline).
///   request:  {"verb": "SUBMIT", "body": {...}}
///   response: {"status": "OK", "body": {...}}
///             {"status": "ERROR", "code": "QUEUE_FULL", "message": "..."}
std::string handle_message(Broker& broker, Session& session, std::string_view line);

nlohmann::json receipt_to_json(const Receipt& receipt);
nlohmann::json extract_manifest_to_json(const ExtractManifest& manifest);

nlohmann::json ok_response(nlohmann::json body);
nlohmann::json error_response(const std::string& code, const std::string& message);

}  // namespace bdb
