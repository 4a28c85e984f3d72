#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "bdb/audit.hpp"
#include "bdb/cache.hpp"
#include "bdb/catalog.hpp"
#include "bdb/config.hpp"
#include "bdb/event_store.hpp"
#include "bdb/fabric.hpp"
#include "bdb/identity.hpp"
#include "bdb/intake.hpp"
#include "bdb/notify.hpp"
#include "bdb/receipt.hpp"
#include "bdb/scheduler.hpp"
#include "bdb/transfer.hpp"
#include "bdb/worker_pool.hpp"

namespace bdb {

struct FetchInfo {
    Receipt receipt;
    std::optional<ExtractManifest> manifest;
    bool shipped = false;
    std::string location;  // <site_id>:<path>
    bool transfer_restarted = false;
};

struct TickSample {
    TimeMs at = 0;
    std::size_t running = 0;
    std::size_t pending = 0;
};

// The server core. Owns every module and drives a request through
//   submit -> collate -> dispatch -> (cache | extract) -> transfer -> notify
// one tick at a time. Extractions and transfers run on the worker pool and
// report back through a completion queue drained at the start of each tick,
// so all scheduler and receipt mutations happen on the ticking thread.
class Broker {
public:
    Broker(ServerConfig config, Catalog catalog, GridMap grid_map, const Clock& clock,
           std::unique_ptr<NotificationSink> sink = nullptr);
    ~Broker();

    Broker(const Broker&) = delete;
    Broker& operator=(const Broker&) = delete;

    Receipt submit(const ExtractionRequest& request, const std::string& authenticated_dn);
    Receipt status(const std::string& receipt_id) const { return receipts_.get(receipt_id); }

    /// Result manifest and delivery state. Restarts an aborted transfer that
    /// is waiting for its next attempt. Throws UnknownReceipt, or NotReady
    /// before the extraction has produced anything.
    FetchInfo fetch(const std::string& receipt_id);

    /// One lifecycle step at clock.now(): drain completions, collate when due,
    /// enqueue, dispatch, restart transfers waiting for another attempt.
    void tick();

    /// Blocks until the worker pool has nothing queued or running.
    void drain();

    /// True when every receipt is terminal and nothing is in flight.
    bool quiescent() const;

    std::uint64_t extraction_count() const { return extractions_.load(); }
    std::vector<TickSample> samples() const;

    const ServerConfig& config() const { return config_; }
    Catalog& catalog() { return catalog_; }
    Fabric& fabric() { return fabric_; }
    ExtractionCache& cache() { return cache_; }
    const ExtractionCache& cache() const { return cache_; }
    IdentityService& identity() { return identity_; }
    const IdentityService& identity() const { return identity_; }
    Scheduler& scheduler() { return scheduler_; }
    RequestIntake& intake() { return intake_; }
    ReceiptStore& receipts() { return receipts_; }
    AuditLog& audit() { return audit_; }
    Notifier& notifier() { return notifier_; }

private:
    struct Delivery;
    struct Completion {
        enum class Kind { Extracted, ExtractFailed, DeliveredLocal, Transferred, TransferAborted, TransferFatal };
        Kind kind;
        std::string receipt_id;
        std::string detail;
    };

    std::optional<AccountBinding> admit(const Job& job);
    void run_extraction(const Job& job);
    void run_transfers(const std::string& receipt_id);
    void start_transfer(const std::string& receipt_id);
    void finish_delivery(const std::string& receipt_id);
    void process_completions();
    void complete(Completion c);
    std::shared_ptr<const EventStore> open_source(const std::string& path);
    std::string deliver_local(const Destination& dest, const std::filesystem::path& result_dir);

    ServerConfig config_;
    const Clock& clock_;
    AuditLog audit_;
    TokenSource tokens_;
    ReceiptStore receipts_;
    Catalog catalog_;
    RequestIntake intake_;
    IdentityService identity_;
    Scheduler scheduler_;
    ExtractionCache cache_;
    Fabric fabric_;
    TransferEngine transfers_;
    Notifier notifier_;

    std::atomic<std::uint64_t> extractions_{0};

    mutable std::mutex stores_mutex_;
    std::map<std::string, std::shared_ptr<const EventStore>> stores_;

    mutable std::mutex deliveries_mutex_;
    std::map<std::string, Delivery> deliveries_;

    mutable std::mutex completions_mutex_;
    std::vector<Completion> completions_;

    mutable std::mutex samples_mutex_;
    std::vector<TickSample> samples_;

    // Declared last: destroyed first, so no task outlives the state above.
    WorkerPool pool_;
};

/// Builds a broker from a loaded config: catalog snapshot, grid map and
/// fabric scenario are read from the paths it names. Any failure is ConfigError.
std::unique_ptr<Broker> open_broker(const ServerConfig& config, const Clock& clock);

}  // namespace bdb
