#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bdb/error.hpp"
#include "bdb/fabric.hpp"
#include "bdb/ids.hpp"
#include "bdb/request.hpp"
#include "bdb/wire.hpp"

namespace bdb {

class Catalog;

struct TransferConfig {
    std::uint32_t chunk_size = 4u << 20;
    int max_retries = 5;  // per chunk, on top of the first attempt
    SimTime backoff_base = std::chrono::milliseconds(100);
    SimTime ack_timeout = std::chrono::milliseconds(1000);
};

enum class TransferState { Planned, InFlight, Complete, Aborted };

std::string_view transfer_state_name(TransferState s);

struct TransferJob {
    JobId job_id{};
    std::filesystem::path source;
    std::string dest_site;      // catalog site id
    std::string dest_endpoint;  // fabric endpoint handle
    std::string dest_path;      // relative to the endpoint's storage root
    std::uint32_t chunk_size = 0;
    std::uint64_t total_bytes = 0;
    std::string file_checksum;
    std::vector<bool> chunks_acked;
    std::vector<std::uint32_t> chunk_sends;  // DATA transmissions per chunk, across runs
    TransferState state = TransferState::Planned;
    std::filesystem::path state_file;        // when set, persisted after every ack

    std::size_t chunk_count() const { return chunks_acked.size(); }
    std::size_t acked_count() const;
    std::string id_hex() const;

    void save(const std::filesystem::path& path) const;
    static TransferJob load(const std::filesystem::path& path);
};

struct TransferReport {
    std::string job_id;
    std::uint64_t bytes_sent = 0;           // DATA payload bytes in this run, retransmits included
    std::uint64_t retransmitted_bytes = 0;  // payload bytes of chunks that had been sent before
    std::uint32_t retries = 0;
    SimTime duration{0};
    TransferState outcome = TransferState::Planned;
    std::optional<Errc> error;  // RetriesExhausted is reported as DestinationUnreachable
    std::string message;

    bool complete() const { return outcome == TransferState::Complete; }
};

// Broker-initiated push of one file to a destination endpoint: sequential
// DATA/ACK per chunk with bounded retries and exponential backoff, then a
// VERIFY of the whole-file SHA-256. Aborted jobs keep their ack bitmap so a
// resume only sends what is missing.
class TransferEngine {
public:
    TransferEngine(Fabric& fabric, const Catalog& catalog, TransferConfig config = {});

    /// Throws UnknownDestination when the site is not in the catalog or has
    /// no endpoint on the fabric.
    TransferJob plan_transfer(const std::filesystem::path& source_file, const Destination& destination);

    TransferReport run_transfer(TransferJob& job);
    TransferReport resume_transfer(TransferJob& job);

    const TransferConfig& config() const { return config_; }

private:
    TransferReport drive(TransferJob& job);

    Fabric& fabric_;
    const Catalog& catalog_;
    TransferConfig config_;
    TokenSource tokens_;
};

}  // namespace bdb
