#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bdb/wire.hpp"

namespace bdb {

class Catalog;

using SimTime = std::chrono::microseconds;

struct EndpointConfig {
    std::string site_id;
    SimTime latency{1000};                       // per message
    std::uint64_t bandwidth = 100ull << 20;      // bytes per simulated second
    double drop_rate = 0.0;                      // per DATA message
    std::filesystem::path storage_root;
};

enum class FaultAction { Drop, Corrupt };

// Matches frames travelling to or from an endpoint. One-shot faults fire once;
// sticky faults keep firing until cleared.
struct FaultSpec {
    std::optional<FrameType> type;
    std::optional<std::uint32_t> chunk_index;
    FaultAction action = FaultAction::Drop;
    bool sticky = false;
};

// Logical time for the fabric. Monotonic.
class FabricClock {
public:
    SimTime now() const { return now_; }
    void advance(SimTime d) {
        if (d.count() > 0) now_ += d;
    }

private:
    SimTime now_{0};
};

// In-process stand-ins for remote sites. Each endpoint speaks the transfer
// frame protocol over a byte loopback and writes into its storage root.
// Latency, bandwidth, seeded random drops and injected faults are applied per
// message on a simulated clock. One lock serializes the whole fabric.
class Fabric {
public:
    explicit Fabric(std::uint64_t seed = 0, const Catalog* catalog = nullptr);
    ~Fabric();

    /// Throws DuplicateEndpoint, UnknownSite (when a catalog is attached and
    /// the site is absent) or ConfigError for an invalid config.
    void spawn_endpoint(const EndpointConfig& config);
    bool has_endpoint(const std::string& site_id) const;
    EndpointConfig endpoint_config(const std::string& site_id) const;

    /// Throws UnknownEndpoint.
    void inject_fault(const std::string& site_id, const FaultSpec& spec);
    void clear_faults(const std::string& site_id);
    void set_drop_rate(const std::string& site_id, double drop_rate);
    /// An endpoint that is down refuses handshakes and loses every message.
    void set_down(const std::string& site_id, bool down);

    /// latency * messages + bytes / bandwidth.
    SimTime simulated_duration(const std::string& site_id, std::uint64_t bytes, std::uint64_t messages = 1) const;

    /// Control-plane session setup for a job: where to write and how the
    /// chunks are laid out. False when the endpoint is unknown, down, or the
    /// path leaves its storage root.
    bool handshake(const std::string& site_id, const JobId& job, const std::string& relative_path,
                   std::uint64_t total_bytes, std::uint32_t chunk_size);

    /// Delivers one encoded frame and returns the encoded reply, or nullopt
    /// when the frame or its reply was lost.
    std::optional<std::vector<std::uint8_t>> exchange(const std::string& site_id, std::span<const std::uint8_t> frame);

    SimTime now() const;
    void advance(SimTime d);
    std::vector<std::string> event_log() const;
    std::filesystem::path storage_root(const std::string& site_id) const;

private:
    struct Session;
    struct Endpoint;

    Endpoint& endpoint_locked(const std::string& site_id);
    const Endpoint& endpoint_locked(const std::string& site_id) const;
    bool take_fault(Endpoint& ep, FrameType type, std::uint32_t chunk, FaultAction& action);
    void charge_message(const Endpoint& ep, std::size_t bytes);
    std::vector<std::uint8_t> process(Endpoint& ep, Frame frame);
    void log(const std::string& line);

    const Catalog* catalog_;
    mutable std::mutex mutex_;
    FabricClock clock_;
    std::mt19937_64 rng_;
    std::map<std::string, std::unique_ptr<Endpoint>> endpoints_;
    std::vector<std::string> log_;
};

}  // namespace bdb

namespace bdb {

/// Applies a scenario file: JSON records, one per line, either
///   {"kind":"endpoint","site_id":..,"latency_ms":..,"bandwidth":..,"drop_rate":..,"storage_root":..}
/// or
///   {"kind":"fault","site_id":..,"type":"DATA","chunk":2,"action":"drop|corrupt","sticky":false}
/// Relative storage roots resolve against `base_dir`.
void load_fabric_scenario(Fabric& fabric, const std::filesystem::path& path, const std::filesystem::path& base_dir = {});

}  // namespace bdb
