#include "bdb/protocol.hpp"

#include "bdb/error.hpp"
#include "bdb/request.hpp"

namespace bdb {

using nlohmann::json;

nlohmann::json receipt_to_json(const Receipt& r) {
    json history = json::array();
    for (const auto& h : r.history) history.push_back({{"state", state_name(h.state)}, {"at", h.at}});
    return {{"receipt_id", r.receipt_id},
            {"owner_dn", r.owner_dn},
            {"state", state_name(r.state)},
            {"detail", r.detail},
            {"history", std::move(history)}};
}

nlohmann::json extract_manifest_to_json(const ExtractManifest& m) {
    return {{"request_key", m.request_key},       {"format", format_name(m.format)},
            {"runs", m.runs},                     {"events", m.events},
            {"source_checksum", m.source_checksum}, {"output_checksum", m.output_checksum},
            {"byte_size", m.byte_size}};
}

nlohmann::json ok_response(nlohmann::json body) { return {{"status", "OK"}, {"body", std::move(body)}}; }

nlohmann::json error_response(const std::string& code, const std::string& message) {
    return {{"status", "ERROR"}, {"code", code}, {"message", message}};
}

namespace {

struct BadMessage {
    std::string message;
};

std::string string_field(const json& body, const char* name) {
    auto it = body.find(name);
    if (it == body.end() || !it->is_string()) throw BadMessage{std::string("body.") + name + " must be a string"};
    return it->get<std::string>();
}

json do_hello(Session& session, const json& body) {
    auto dn = string_field(body, "dn");
    if (dn.empty()) throw BadMessage{"empty dn"};
    session.dn = dn;
    return {{"dn", dn}};
}

json do_submit(Broker& broker, const Session& session, const json& body) {
    if (!session.authenticated()) throw Error(Errc::NotAuthenticated, "HELLO required before SUBMIT");
    auto request = parse_request(string_field(body, "document"));
    auto receipt = broker.submit(request, session.dn);
    return {{"receipt_id", receipt.receipt_id}, {"state", state_name(receipt.state)}};
}

json do_fetch(Broker& broker, const json& body) {
    auto info = broker.fetch(string_field(body, "receipt_id"));
    return {{"receipt", receipt_to_json(info.receipt)},
            {"manifest", info.manifest ? extract_manifest_to_json(*info.manifest) : json(nullptr)},
            {"shipped", info.shipped},
            {"location", info.location},
            {"transfer_restarted", info.transfer_restarted}};
}

json do_admin(Broker& broker, const json& body) {
    auto sub = string_field(body, "subcommand");
    if (sub == "cache-stats") {
        auto s = broker.cache().stats();
        return {{"entries", s.entries},     {"resident_bytes", s.resident_bytes}, {"budget_bytes", s.budget_bytes},
                {"hits", s.hits},           {"misses", s.misses},                 {"evictions", s.evictions},
                {"extractions", broker.extraction_count()}};
    }
    if (sub == "pool-stats") {
        const auto& id = broker.identity();
        return {{"pool_size", id.pool_size()}, {"active_leases", id.active_leases()}, {"quota_bytes", id.quota_bytes()}};
    }
    throw BadMessage{"unknown ADMIN subcommand: " + sub};
}

}  // namespace

std::string handle_message(Broker& broker, Session& session, std::string_view line) {
    json response;
    try {
        json msg = json::parse(line.begin(), line.end());
        if (!msg.is_object()) throw BadMessage{"message must be a JSON object"};
        auto verb_it = msg.find("verb");
        if (verb_it == msg.end() || !verb_it->is_string()) throw BadMessage{"missing verb"};
        json body = msg.value("body", json::object());
        if (!body.is_object()) throw BadMessage{"body must be an object"};

        const auto verb = verb_it->get<std::string>();
        if (verb == "HELLO") response = ok_response(do_hello(session, body));
        else if (verb == "SUBMIT") response = ok_response(do_submit(broker, session, body));
        else if (verb == "STATUS") response = ok_response(receipt_to_json(broker.status(string_field(body, "receipt_id"))));
        else if (verb == "FETCH") response = ok_response(do_fetch(broker, body));
        else if (verb == "ADMIN") response = ok_response(do_admin(broker, body));
        else throw BadMessage{"unknown verb: " + verb};
    } catch (const json::exception& e) {
        response = error_response(wire_code(Errc::BadMessage), e.what());
    } catch (const BadMessage& e) {
        response = error_response(wire_code(Errc::BadMessage), e.message);
    } catch (const Error& e) {
        auto r = error_response(wire_code(e.code()), e.what());
        if (e.line() != 0) r["line"] = e.line();
        response = std::move(r);
    } catch (const std::exception& e) {
        response = error_response(wire_code(Errc::IoError), e.what());
    }
    return response.dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace bdb
