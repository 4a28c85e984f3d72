#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "bdb/cache.hpp"
#include "bdb/clock.hpp"
#include "bdb/identity.hpp"
#include "bdb/notify.hpp"
#include "bdb/scheduler.hpp"
#include "bdb/transfer.hpp"

namespace bdb {

struct ServerConfig {
    std::string listen = "127.0.0.1:7700";
    TimeMs collation_interval_ms = 900'000;
    TimeMs tick_ms = 1000;
    std::size_t workers = 4;

    SchedulerConfig scheduler;
    PoolConfig pool;
    std::filesystem::path grid_map;
    CacheConfig cache;

    std::filesystem::path audit_log;
    SinkKind sink = SinkKind::Null;
    std::string sink_target;

    std::filesystem::path catalog_snapshot;
    std::filesystem::path fabric_scenario;
    std::uint64_t fabric_seed = 0;

    TransferConfig transfer;
    int transfer_attempts = 3;
    TimeMs transfer_retry_ms = 60'000;  // wait before retrying an aborted transfer; FETCH skips it

    // Scratch space for mapped accounts, spooled over-budget results and
    // persisted transfer state.
    std::filesystem::path work_root;
};

/// Reads the JSON config file. Relative paths resolve against the file's
/// directory; unset paths default under `state/` there. Throws ConfigError.
ServerConfig load_config(const std::filesystem::path& path);

/// A config with every path under `root`, for embedding and tests.
ServerConfig default_config(const std::filesystem::path& root);

/// Creates every directory the config refers to. Throws ConfigError.
void prepare_directories(const ServerConfig& config);

}  // namespace bdb
