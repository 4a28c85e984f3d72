#include "bdb/fabric.hpp"

#include <fstream>

#include "bdb/catalog.hpp"
#include "bdb/digest.hpp"
#include "bdb/error.hpp"

namespace bdb {

namespace fs = std::filesystem;

namespace {

// Rounded up, so the per-message charges of a transfer never add up to less
// than the time for its total bytes.
SimTime byte_time(std::uint64_t bytes, std::uint64_t bandwidth) {
    auto num = static_cast<unsigned __int128>(bytes) * 1'000'000u;
    return SimTime(static_cast<std::int64_t>((num + bandwidth - 1) / bandwidth));
}

}  // namespace

struct Fabric::Session {
    fs::path final_path;
    fs::path part_path;
    std::uint64_t total_bytes = 0;
    std::uint32_t chunk_size = 0;
};

struct Fabric::Endpoint {
    EndpointConfig config;
    bool down = false;
    std::vector<FaultSpec> faults;
    std::map<JobId, Session> sessions;
};

Fabric::Fabric(std::uint64_t seed, const Catalog* catalog) : catalog_(catalog), rng_(seed) {}

Fabric::~Fabric() = default;

void Fabric::spawn_endpoint(const EndpointConfig& config) {
    if (config.drop_rate < 0.0 || config.drop_rate > 1.0) throw Error(Errc::ConfigError, "drop_rate must be in [0,1]");
    if (config.bandwidth == 0) throw Error(Errc::ConfigError, "bandwidth must be positive");
    if (config.storage_root.empty()) throw Error(Errc::ConfigError, "endpoint storage_root not set");
    if (catalog_ != nullptr && !catalog_->site(config.site_id))
        throw Error(Errc::UnknownSite, "endpoint for unregistered site " + config.site_id);
    std::lock_guard lock(mutex_);
    if (endpoints_.contains(config.site_id))
        throw Error(Errc::DuplicateEndpoint, "endpoint already spawned for " + config.site_id);
    fs::create_directories(config.storage_root);
    auto ep = std::make_unique<Endpoint>();
    ep->config = config;
    endpoints_.emplace(config.site_id, std::move(ep));
    log("spawn " + config.site_id);
}

bool Fabric::has_endpoint(const std::string& site_id) const {
    std::lock_guard lock(mutex_);
    return endpoints_.contains(site_id);
}

Fabric::Endpoint& Fabric::endpoint_locked(const std::string& site_id) {
    auto it = endpoints_.find(site_id);
    if (it == endpoints_.end()) throw Error(Errc::UnknownEndpoint, "no endpoint for " + site_id);
    return *it->second;
}

const Fabric::Endpoint& Fabric::endpoint_locked(const std::string& site_id) const {
    auto it = endpoints_.find(site_id);
    if (it == endpoints_.end()) throw Error(Errc::UnknownEndpoint, "no endpoint for " + site_id);
    return *it->second;
}

EndpointConfig Fabric::endpoint_config(const std::string& site_id) const {
    std::lock_guard lock(mutex_);
    return endpoint_locked(site_id).config;
}

void Fabric::inject_fault(const std::string& site_id, const FaultSpec& spec) {
    std::lock_guard lock(mutex_);
    endpoint_locked(site_id).faults.push_back(spec);
}

void Fabric::clear_faults(const std::string& site_id) {
    std::lock_guard lock(mutex_);
    endpoint_locked(site_id).faults.clear();
}

void Fabric::set_drop_rate(const std::string& site_id, double drop_rate) {
    if (drop_rate < 0.0 || drop_rate > 1.0) throw Error(Errc::ConfigError, "drop_rate must be in [0,1]");
    std::lock_guard lock(mutex_);
    endpoint_locked(site_id).config.drop_rate = drop_rate;
}

void Fabric::set_down(const std::string& site_id, bool down) {
    std::lock_guard lock(mutex_);
    endpoint_locked(site_id).down = down;
}

SimTime Fabric::simulated_duration(const std::string& site_id, std::uint64_t bytes, std::uint64_t messages) const {
    std::lock_guard lock(mutex_);
    const auto& cfg = endpoint_locked(site_id).config;
    return cfg.latency * static_cast<std::int64_t>(messages) + byte_time(bytes, cfg.bandwidth);
}

void Fabric::charge_message(const Endpoint& ep, std::size_t bytes) {
    clock_.advance(ep.config.latency + byte_time(bytes, ep.config.bandwidth));
}

bool Fabric::handshake(const std::string& site_id, const JobId& job, const std::string& relative_path,
                       std::uint64_t total_bytes, std::uint32_t chunk_size) {
    std::lock_guard lock(mutex_);
    auto it = endpoints_.find(site_id);
    if (it == endpoints_.end() || it->second->down) {
        log("handshake " + site_id + " " + to_hex(job) + " refused");
        return false;
    }
    auto& ep = *it->second;
    charge_message(ep, relative_path.size());
    fs::path rel(relative_path);
    auto root = ep.config.storage_root;
    auto target = (root / rel.relative_path()).lexically_normal();
    auto check = target.lexically_relative(root);
    if (check.empty() || check == "." || *check.begin() == ".." || chunk_size == 0) {
        log("handshake " + site_id + " " + to_hex(job) + " bad-path");
        return false;
    }
    auto& s = ep.sessions[job];
    s.final_path = target;
    s.part_path = target;
    s.part_path += ".part";
    s.total_bytes = total_bytes;
    s.chunk_size = chunk_size;
    fs::create_directories(target.parent_path());
    if (!fs::exists(s.part_path)) std::ofstream(s.part_path, std::ios::binary).flush();
    log("handshake " + site_id + " " + to_hex(job) + " ok");
    return true;
}

bool Fabric::take_fault(Endpoint& ep, FrameType type, std::uint32_t chunk, FaultAction& action) {
    for (auto it = ep.faults.begin(); it != ep.faults.end(); ++it) {
        if (it->type && *it->type != type) continue;
        if (it->chunk_index && *it->chunk_index != chunk) continue;
        action = it->action;
        if (!it->sticky) ep.faults.erase(it);
        return true;
    }
    return false;
}

std::optional<std::vector<std::uint8_t>> Fabric::exchange(const std::string& site_id,
                                                          std::span<const std::uint8_t> bytes) {
    std::lock_guard lock(mutex_);
    auto& ep = endpoint_locked(site_id);
    charge_message(ep, bytes.size());
    auto frame = decode_frame(bytes);
    std::string tag = site_id + " " + std::string(frame_type_name(frame.type)) + " " + std::to_string(frame.chunk_index);

    // The random draw happens for every DATA frame so the drop sequence only
    // depends on the seed and the frame order.
    bool random_drop = false;
    if (frame.type == FrameType::Data) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        random_drop = u(rng_) < ep.config.drop_rate;
    }
    if (ep.down) {
        log(tag + " lost(down)");
        return std::nullopt;
    }
    FaultAction action{};
    if (take_fault(ep, frame.type, frame.chunk_index, action)) {
        if (action == FaultAction::Drop) {
            log(tag + " dropped(fault)");
            return std::nullopt;
        }
        if (!frame.payload.empty()) frame.payload[frame.payload.size() / 2] ^= 0x5a;
        log(tag + " corrupted(fault)");
    }
    if (random_drop) {
        log(tag + " dropped");
        return std::nullopt;
    }
    auto reply = process(ep, std::move(frame));
    auto decoded = decode_frame(reply);
    std::string rtag =
        site_id + " " + std::string(frame_type_name(decoded.type)) + " " + std::to_string(decoded.chunk_index);
    if (take_fault(ep, decoded.type, decoded.chunk_index, action)) {
        if (action == FaultAction::Drop) {
            log(rtag + " dropped(fault)");
            charge_message(ep, reply.size());
            return std::nullopt;
        }
        if (!decoded.payload.empty()) decoded.payload[decoded.payload.size() / 2] ^= 0x5a;
        reply = encode_frame(decoded);
        log(rtag + " corrupted(fault)");
    }
    charge_message(ep, reply.size());
    log(tag + " -> " + std::string(frame_type_name(decoded.type)));
    return reply;
}

std::vector<std::uint8_t> Fabric::process(Endpoint& ep, Frame frame) {
    auto reply = [&](FrameType type, std::string_view msg = {}) {
        Frame r{type, frame.job_id, frame.chunk_index, {msg.begin(), msg.end()}};
        return encode_frame(r);
    };
    auto it = ep.sessions.find(frame.job_id);
    if (it == ep.sessions.end()) return reply(FrameType::Err, "no session for job");
    auto& s = it->second;

    switch (frame.type) {
        case FrameType::Data: {
            auto offset = static_cast<std::uint64_t>(frame.chunk_index) * s.chunk_size;
            if (offset + frame.payload.size() > s.total_bytes || frame.payload.size() > s.chunk_size)
                return reply(FrameType::Err, "chunk outside file");
            std::fstream out(s.part_path, std::ios::binary | std::ios::in | std::ios::out);
            if (!out) return reply(FrameType::Err, "cannot open partial file");
            out.seekp(static_cast<std::streamoff>(offset));
            out.write(reinterpret_cast<const char*>(frame.payload.data()),
                      static_cast<std::streamsize>(frame.payload.size()));
            if (!out.flush()) return reply(FrameType::Err, "write failed");
            return reply(FrameType::Ack);
        }
        case FrameType::Verify: {
            auto expected = to_hex(frame.payload);
            // A previous VERIFY may have completed with its reply lost.
            if (fs::exists(s.final_path) && sha256_file_hex(s.final_path) == expected) {
                fs::remove(s.part_path);
                return reply(FrameType::VerifyOk);
            }
            if (!fs::exists(s.part_path)) return reply(FrameType::Err, "no partial file");
            if (fs::file_size(s.part_path) != s.total_bytes) fs::resize_file(s.part_path, s.total_bytes);
            if (sha256_file_hex(s.part_path) != expected) return reply(FrameType::Err, "checksum mismatch");
            fs::rename(s.part_path, s.final_path);
            return reply(FrameType::VerifyOk);
        }
        default: return reply(FrameType::Err, "unexpected frame type");
    }
}

SimTime Fabric::now() const {
    std::lock_guard lock(mutex_);
    return clock_.now();
}

void Fabric::advance(SimTime d) {
    std::lock_guard lock(mutex_);
    clock_.advance(d);
}

std::vector<std::string> Fabric::event_log() const {
    std::lock_guard lock(mutex_);
    return log_;
}

void Fabric::log(const std::string& line) { log_.push_back(std::to_string(clock_.now().count()) + " " + line); }

fs::path Fabric::storage_root(const std::string& site_id) const {
    std::lock_guard lock(mutex_);
    return endpoint_locked(site_id).config.storage_root;
}

}  // namespace bdb

#include <json.hpp>

namespace bdb {

void load_fabric_scenario(Fabric& fabric, const fs::path& path, const fs::path& base_dir) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ConfigError, "cannot read fabric scenario " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object())
            throw Error(Errc::SyntaxError, "fabric scenario: malformed record", line_no);
        auto kind = rec.value("kind", "");
        if (kind == "endpoint") {
            EndpointConfig cfg;
            cfg.site_id = rec.at("site_id").get<std::string>();
            cfg.latency = std::chrono::duration_cast<SimTime>(
                std::chrono::duration<double, std::milli>(rec.value("latency_ms", 1.0)));
            cfg.bandwidth = rec.value("bandwidth", cfg.bandwidth);
            cfg.drop_rate = rec.value("drop_rate", 0.0);
            fs::path root = rec.value("storage_root", "sites/" + cfg.site_id);
            cfg.storage_root = root.is_absolute() ? root : base_dir / root;
            fabric.spawn_endpoint(cfg);
        } else if (kind == "fault") {
            FaultSpec spec;
            if (rec.contains("type")) {
                auto t = rec.at("type").get<std::string>();
                bool matched = false;
                for (auto ft : {FrameType::Data, FrameType::Ack, FrameType::Verify, FrameType::VerifyOk, FrameType::Err}) {
                    if (frame_type_name(ft) == t) {
                        spec.type = ft;
                        matched = true;
                    }
                }
                if (!matched) throw Error(Errc::SyntaxError, "fabric scenario: unknown frame type " + t, line_no);
            }
            if (rec.contains("chunk")) spec.chunk_index = rec.at("chunk").get<std::uint32_t>();
            spec.action = rec.value("action", "drop") == "corrupt" ? FaultAction::Corrupt : FaultAction::Drop;
            spec.sticky = rec.value("sticky", false);
            fabric.inject_fault(rec.at("site_id").get<std::string>(), spec);
        } else {
            throw Error(Errc::SyntaxError, "fabric scenario: unknown kind '" + kind + "'", line_no);
        }
    }
}

}  // namespace bdb
