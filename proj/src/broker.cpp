#include "bdb/broker.hpp"

#include <algorithm>

#include "bdb/error.hpp"
#include "bdb/extraction.hpp"

namespace bdb {

namespace fs = std::filesystem;

namespace {

constexpr const char* kResultFiles[] = {kDataFileName, kManifestFileName, kExtractFileName};

std::string join_dest(const std::string& dir, const std::string& file) {
    if (!dir.empty() && dir.back() == '/') return dir + file;
    return dir + "/" + file;
}

}  // namespace

struct Broker::Delivery {
    ExtractionRequest request;
    std::string key;
    std::optional<CacheRef> ref;
    fs::path result_dir;
    bool spooled = false;
    std::optional<ExtractManifest> manifest;
    std::vector<TransferJob> jobs;
    int attempts = 0;
    bool transfer_running = false;
    bool awaiting_retry = false;
    TimeMs retry_at = 0;
    bool shipped = false;
    std::string location;
};

Broker::Broker(ServerConfig config, Catalog catalog, GridMap grid_map, const Clock& clock,
               std::unique_ptr<NotificationSink> sink)
    : config_((prepare_directories(config), std::move(config))),
      clock_(clock),
      audit_(config_.audit_log, clock_),
      receipts_(audit_, clock_, tokens_),
      catalog_(std::move(catalog)),
      intake_(IntakeConfig{config_.collation_interval_ms, config_.scheduler.backlog_bound}, receipts_, audit_, clock_),
      identity_(std::move(grid_map), config_.pool, &audit_),
      scheduler_(config_.scheduler, receipts_),
      cache_(config_.cache, clock_, &audit_),
      fabric_(config_.fabric_seed, &catalog_),
      transfers_(fabric_, catalog_, config_.transfer),
      notifier_(sink ? std::move(sink) : make_sink(config_.sink, config_.sink_target), audit_),
      pool_(config_.workers) {
    receipts_.on_terminal([this](const Receipt& r) { notifier_.notify(r); });
    fs::create_directories(config_.work_root / "spool");
    fs::create_directories(config_.work_root / "transfers");
    fs::create_directories(config_.work_root / "accounts");
}

Broker::~Broker() { pool_.wait_idle(); }

Receipt Broker::submit(const ExtractionRequest& request, const std::string& authenticated_dn) {
    return intake_.submit(request, authenticated_dn);
}

void Broker::drain() { pool_.wait_idle(); }

std::vector<TickSample> Broker::samples() const {
    std::lock_guard lock(samples_mutex_);
    return samples_;
}

bool Broker::quiescent() const {
    {
        std::lock_guard lock(completions_mutex_);
        if (!completions_.empty()) return false;
    }
    for (const auto& r : receipts_.all()) {
        if (!is_terminal(r.state)) return false;
    }
    return true;
}

std::optional<AccountBinding> Broker::admit(const Job& job) {
    const auto& dn = job.request.requester_dn;
    try {
        auto binding = identity_.map_identity(dn);
        audit_.append(job.receipt_id, dn, "binding",
                      binding.kind == BindingKind::Mapped ? "mapped account " + binding.account
                                                          : "pool account " + binding.account + " lease " + binding.lease_id);
        return binding;
    } catch (const Error& e) {
        if (e.code() == Errc::NoIdentity) return std::nullopt;
        throw;
    }
}

void Broker::tick() {
    const auto now = clock_.now();
    process_completions();

    if (intake_.collation_due(now)) {
        auto batch = intake_.collate(now);
        if (!batch.empty()) scheduler_.enqueue_batch(batch);
    }

    auto started = scheduler_.next_dispatch([this](const Job& job) { return admit(job); });
    {
        std::lock_guard lock(samples_mutex_);
        samples_.push_back({now, scheduler_.running(), scheduler_.pending()});
    }
    {
        std::lock_guard lock(deliveries_mutex_);
        for (const auto& job : started) {
            auto& d = deliveries_[job.receipt_id];
            d.request = job.request;
            d.key = job.key;
        }
    }
    for (const auto& job : started) pool_.post([this, job] { run_extraction(job); });

    std::vector<std::string> retry;
    {
        std::lock_guard lock(deliveries_mutex_);
        for (auto& [id, d] : deliveries_) {
            if (d.awaiting_retry && !d.transfer_running && now >= d.retry_at) retry.push_back(id);
        }
    }
    for (const auto& id : retry) start_transfer(id);
}

void Broker::complete(Completion c) {
    std::lock_guard lock(completions_mutex_);
    completions_.push_back(std::move(c));
}

std::shared_ptr<const EventStore> Broker::open_source(const std::string& path) {
    {
        std::lock_guard lock(stores_mutex_);
        if (auto it = stores_.find(path); it != stores_.end()) return it->second;
    }
    auto store = std::make_shared<const EventStore>(EventStore::open(path));
    std::lock_guard lock(stores_mutex_);
    return stores_.try_emplace(path, std::move(store)).first->second;
}

std::string Broker::deliver_local(const Destination& dest, const fs::path& result_dir) {
    auto site = catalog_.site(dest.site_id);
    auto endpoint = site && !site->endpoint.empty() ? site->endpoint : dest.site_id;
    if (!fabric_.has_endpoint(endpoint))
        throw Error(Errc::UnknownDestination, "destination site " + dest.site_id + " has no storage endpoint");
    auto root = fabric_.storage_root(endpoint);
    auto target = (root / fs::path(dest.path).relative_path()).lexically_normal();
    auto check = target.lexically_relative(root);
    if (check.empty() || *check.begin() == "..") throw Error(Errc::SandboxViolation, "destination path escapes site storage");
    fs::create_directories(target);
    for (const char* name : kResultFiles)
        fs::copy_file(result_dir / name, target / name, fs::copy_options::overwrite_existing);
    return dest.site_id + ":" + dest.path;
}

void Broker::run_extraction(const Job& job) {
    const auto& req = job.request;
    Completion done{Completion::Kind::ExtractFailed, job.receipt_id, {}};
    std::optional<CacheTicket> ticket;
    std::string lease_id;
    if (job.binding && job.binding->kind == BindingKind::Pooled) lease_id = job.binding->lease_id;

    try {
        auto placements = catalog_.locate(req.collection, req.format, true);
        if (placements.empty())
            throw Error(Errc::DataUnavailable, "no online " + std::string(format_name(req.format)) + " placement of " +
                                                   req.collection);
        const auto& source = placements.front();

        std::optional<CacheRef> ref;
        std::optional<ExtractManifest> manifest;
        fs::path result_dir;
        bool spooled = false;

        auto lookup = cache_.lookup_or_begin(job.key);
        if (auto* hit = std::get_if<CacheRef>(&lookup)) {
            ref = std::move(*hit);
            result_dir = ref->entry.result_path;
            manifest = parse_extract_manifest([&] {
                auto bytes = read_file_bytes(result_dir / kExtractFileName);
                return std::string(bytes.begin(), bytes.end());
            }());
            audit_.append(job.receipt_id, "system", "cache-hit", job.key);
        } else {
            ticket = std::get<CacheTicket>(lookup);
            auto store = open_source(source.store_path);
            fs::path work = lease_id.empty()
                                ? config_.work_root / "accounts" / job.binding.value_or(AccountBinding{}).account / job.receipt_id
                                : identity_.sandbox_path(lease_id, job.receipt_id);
            fs::remove_all(work);
            DeepCopyOptions opts;
            opts.request_key = job.key;
            if (!lease_id.empty())
                opts.charge = [this, &lease_id](std::uint64_t n) { identity_.charge_quota(lease_id, n); };
            auto result = deep_copy(*store, Selection{req.runs, req.events}, req.format, work, opts);
            ++extractions_;
            manifest = result.manifest;
            audit_.append(job.receipt_id, "system", "extract",
                          "source " + source.site_id + " bytes " + std::to_string(result.disk_bytes));
            try {
                ref = cache_.commit(*ticket, result);
                ticket.reset();
                result_dir = ref->entry.result_path;
            } catch (const Error& e) {
                ticket.reset();
                if (e.code() != Errc::OverBudgetEntry && e.code() != Errc::CannotFit) throw;
                // Too big to keep: serve it once from the spool.
                auto spool = config_.work_root / "spool" / job.receipt_id;
                fs::remove_all(spool);
                fs::rename(result.dir, spool);
                result_dir = spool;
                spooled = true;
                audit_.append(job.receipt_id, "system", "spool", e.what());
            }
            if (!lease_id.empty()) identity_.credit_quota(lease_id, result.disk_bytes);
        }

        {
            std::lock_guard lock(deliveries_mutex_);
            auto& d = deliveries_[job.receipt_id];
            d.ref = std::move(ref);
            d.result_dir = result_dir;
            d.spooled = spooled;
            d.manifest = manifest;
        }

        if (req.destination.site_id == source.site_id) {
            auto location = deliver_local(req.destination, result_dir);
            {
                std::lock_guard lock(deliveries_mutex_);
                auto& d = deliveries_[job.receipt_id];
                d.shipped = true;
                d.location = location;
            }
            done = {Completion::Kind::DeliveredLocal, job.receipt_id, location};
        } else {
            done = {Completion::Kind::Extracted, job.receipt_id, {}};
        }
    } catch (const Error& e) {
        done.detail = std::string(errc_name(e.code())) + ": " + e.what();
    } catch (const std::exception& e) {
        done.detail = std::string("IoError: ") + e.what();
    }
    if (ticket) cache_.abandon(*ticket);
    if (!lease_id.empty()) {
        try {
            identity_.release(lease_id);
        } catch (const Error&) {
        }
    }
    complete(std::move(done));
}

void Broker::start_transfer(const std::string& receipt_id) {
    {
        std::lock_guard lock(deliveries_mutex_);
        auto& d = deliveries_.at(receipt_id);
        if (d.transfer_running) return;
        d.transfer_running = true;
        d.awaiting_retry = false;
        ++d.attempts;
    }
    pool_.post([this, receipt_id] { run_transfers(receipt_id); });
}

void Broker::run_transfers(const std::string& receipt_id) {
    ExtractionRequest request;
    fs::path result_dir;
    std::vector<TransferJob> jobs;
    {
        std::lock_guard lock(deliveries_mutex_);
        auto& d = deliveries_.at(receipt_id);
        request = d.request;
        result_dir = d.result_dir;
        jobs = d.jobs;
    }

    Completion done{Completion::Kind::Transferred, receipt_id, {}};
    try {
        if (jobs.empty()) {
            for (const char* name : kResultFiles) {
                auto job = transfers_.plan_transfer(
                    result_dir / name, Destination{request.destination.site_id, join_dest(request.destination.path, name)});
                job.state_file = config_.work_root / "transfers" / (receipt_id + "-" + name + ".json");
                jobs.push_back(std::move(job));
            }
        }
        for (auto& job : jobs) {
            if (job.state == TransferState::Complete) continue;
            auto report = transfers_.resume_transfer(job);
            audit_.append(receipt_id, "system", "transfer",
                          job.dest_path + " " + std::string(transfer_state_name(report.outcome)) + " sent " +
                              std::to_string(report.bytes_sent) + " retries " + std::to_string(report.retries) +
                              (report.message.empty() ? "" : " (" + report.message + ")"));
            if (!report.complete()) {
                done = {Completion::Kind::TransferAborted, receipt_id,
                        std::string(errc_name(report.error.value_or(Errc::DestinationUnreachable))) + ": " + report.message};
                break;
            }
        }
        if (done.kind == Completion::Kind::Transferred) done.detail = request.destination.site_id + ":" + request.destination.path;
    } catch (const Error& e) {
        done = {Completion::Kind::TransferFatal, receipt_id, std::string(errc_name(e.code())) + ": " + e.what()};
    } catch (const std::exception& e) {
        done = {Completion::Kind::TransferFatal, receipt_id, std::string("IoError: ") + e.what()};
    }
    {
        std::lock_guard lock(deliveries_mutex_);
        auto& d = deliveries_.at(receipt_id);
        d.jobs = std::move(jobs);
        d.transfer_running = false;
        if (done.kind == Completion::Kind::Transferred) {
            d.shipped = true;
            d.location = done.detail;
        }
    }
    complete(std::move(done));
}

void Broker::finish_delivery(const std::string& receipt_id) {
    std::lock_guard lock(deliveries_mutex_);
    auto it = deliveries_.find(receipt_id);
    if (it == deliveries_.end()) return;
    auto& d = it->second;
    d.ref.reset();
    std::error_code ec;
    if (d.spooled) fs::remove_all(d.result_dir, ec);
    for (const auto& job : d.jobs) fs::remove(job.state_file, ec);
}

void Broker::process_completions() {
    std::vector<Completion> batch;
    {
        std::lock_guard lock(completions_mutex_);
        batch.swap(completions_);
    }
    for (auto& c : batch) {
        switch (c.kind) {
            case Completion::Kind::Extracted:
                scheduler_.complete_job(c.receipt_id, JobOutcome::Succeeded);
                start_transfer(c.receipt_id);
                break;
            case Completion::Kind::DeliveredLocal:
                scheduler_.complete_job(c.receipt_id, JobOutcome::SucceededLocal, c.detail);
                finish_delivery(c.receipt_id);
                break;
            case Completion::Kind::ExtractFailed:
                scheduler_.complete_job(c.receipt_id, JobOutcome::Failed, c.detail);
                finish_delivery(c.receipt_id);
                break;
            case Completion::Kind::Transferred:
                receipts_.advance(c.receipt_id, ReceiptState::Done, c.detail);
                finish_delivery(c.receipt_id);
                break;
            case Completion::Kind::TransferAborted: {
                bool retry = false;
                {
                    std::lock_guard lock(deliveries_mutex_);
                    auto& d = deliveries_.at(c.receipt_id);
                    retry = d.attempts < config_.transfer_attempts;
                    d.awaiting_retry = retry;
                    d.retry_at = clock_.now() + config_.transfer_retry_ms;
                }
                if (!retry) {
                    receipts_.advance(c.receipt_id, ReceiptState::Failed, c.detail);
                    finish_delivery(c.receipt_id);
                }
                break;
            }
            case Completion::Kind::TransferFatal:
                receipts_.advance(c.receipt_id, ReceiptState::Failed, c.detail);
                finish_delivery(c.receipt_id);
                break;
        }
    }
}

FetchInfo Broker::fetch(const std::string& receipt_id) {
    FetchInfo info;
    info.receipt = receipts_.get(receipt_id);
    bool restart = false;
    {
        std::lock_guard lock(deliveries_mutex_);
        if (auto it = deliveries_.find(receipt_id); it != deliveries_.end()) {
            const auto& d = it->second;
            info.manifest = d.manifest;
            info.shipped = d.shipped;
            info.location = d.location;
            restart = d.awaiting_retry && !d.transfer_running && info.receipt.state == ReceiptState::Transferring;
        }
    }
    if (restart) {
        start_transfer(receipt_id);
        info.transfer_restarted = true;
    }
    if (!info.manifest && !is_terminal(info.receipt.state))
        throw Error(Errc::NotReady, "receipt " + receipt_id + " is " + std::string(state_name(info.receipt.state)));
    return info;
}

std::unique_ptr<Broker> open_broker(const ServerConfig& config, const Clock& clock) {
    auto stage = [](const char* what, auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            if (e.code() == Errc::ConfigError) throw;
            throw Error(Errc::ConfigError, std::string(what) + ": " + e.what());
        } catch (const std::exception& e) {
            throw Error(Errc::ConfigError, std::string(what) + ": " + e.what());
        }
    };
    auto catalog = stage("catalog snapshot", [&] {
        // A snapshot that does not exist yet starts an empty catalog.
        if (config.catalog_snapshot.empty() || !fs::exists(config.catalog_snapshot)) return Catalog{};
        return Catalog::load_snapshot(config.catalog_snapshot);
    });
    auto grid_map = stage("grid map", [&] { return config.grid_map.empty() ? GridMap{} : GridMap::load(config.grid_map); });
    auto broker = stage("server state", [&] {
        return std::make_unique<Broker>(config, std::move(catalog), std::move(grid_map), clock);
    });
    if (!config.fabric_scenario.empty()) {
        stage("fabric scenario", [&] {
            load_fabric_scenario(broker->fabric(), config.fabric_scenario, config.fabric_scenario.parent_path());
            return 0;
        });
    }
    return broker;
}

}  // namespace bdb
