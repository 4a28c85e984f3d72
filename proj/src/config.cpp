#include "bdb/config.hpp"

#include <fstream>

#include <json.hpp>

#include "bdb/error.hpp"

namespace bdb {

namespace fs = std::filesystem;
using nlohmann::json;

ServerConfig default_config(const fs::path& root) {
    ServerConfig c;
    c.pool.sandbox_base = root / "sandboxes";
    c.cache.root = root / "cache";
    c.audit_log = root / "audit.log";
    c.work_root = root / "work";
    c.catalog_snapshot = root / "catalog.jsonl";
    return c;
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    return obj.at(key).get<T>();
}

}  // namespace

ServerConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ConfigError, "cannot read config " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(Errc::ConfigError, "config is not a JSON object: " + path.string());

    auto base = fs::absolute(path).parent_path();
    auto c = default_config(base / "state");
    try {
        c.listen = get_or<std::string>(j, "listen", c.listen);
        c.collation_interval_ms = get_or<TimeMs>(j, "collation_interval_ms", c.collation_interval_ms);
        c.tick_ms = get_or<TimeMs>(j, "tick_ms", c.tick_ms);
        c.workers = get_or<std::size_t>(j, "workers", c.workers);
        if (j.contains("work_root")) c.work_root = resolve(base, j["work_root"].get<std::string>());

        const json empty = json::object();
        const auto& sched = j.contains("scheduler") ? j["scheduler"] : empty;
        c.scheduler.max_concurrent = get_or<std::size_t>(sched, "max_concurrent", c.scheduler.max_concurrent);
        c.scheduler.backlog_bound = get_or<std::size_t>(sched, "backlog_bound", c.scheduler.backlog_bound);

        const auto& pool = j.contains("pool") ? j["pool"] : empty;
        c.pool.accounts = get_or<std::vector<std::string>>(pool, "accounts", {});
        c.pool.quota_bytes = get_or<std::uint64_t>(pool, "quota_bytes", c.pool.quota_bytes);
        if (pool.contains("sandbox_root")) c.pool.sandbox_base = resolve(base, pool["sandbox_root"].get<std::string>());

        const auto& ident = j.contains("identity") ? j["identity"] : empty;
        if (ident.contains("grid_map")) c.grid_map = resolve(base, ident["grid_map"].get<std::string>());

        const auto& cache = j.contains("cache") ? j["cache"] : empty;
        c.cache.budget_bytes = get_or<std::uint64_t>(cache, "budget_bytes", c.cache.budget_bytes);
        if (cache.contains("root")) c.cache.root = resolve(base, cache["root"].get<std::string>());

        const auto& audit = j.contains("audit") ? j["audit"] : empty;
        if (audit.contains("path")) c.audit_log = resolve(base, audit["path"].get<std::string>());
        auto sink = get_or<std::string>(audit, "sink", "null");
        if (sink == "file") c.sink = SinkKind::File;
        else if (sink == "stdout") c.sink = SinkKind::Stdout;
        else if (sink == "null") c.sink = SinkKind::Null;
        else throw Error(Errc::ConfigError, "audit.sink must be file, stdout or null");
        if (audit.contains("sink_target")) c.sink_target = resolve(base, audit["sink_target"].get<std::string>()).string();
        if (c.sink == SinkKind::File && c.sink_target.empty())
            throw Error(Errc::ConfigError, "audit.sink_target required for the file sink");

        const auto& catalog = j.contains("catalog") ? j["catalog"] : empty;
        if (catalog.contains("snapshot")) c.catalog_snapshot = resolve(base, catalog["snapshot"].get<std::string>());

        const auto& fabric = j.contains("fabric") ? j["fabric"] : empty;
        if (fabric.contains("scenario")) c.fabric_scenario = resolve(base, fabric["scenario"].get<std::string>());
        c.fabric_seed = get_or<std::uint64_t>(fabric, "seed", c.fabric_seed);

        const auto& transfer = j.contains("transfer") ? j["transfer"] : empty;
        c.transfer.chunk_size = get_or<std::uint32_t>(transfer, "chunk_size", c.transfer.chunk_size);
        c.transfer.max_retries = get_or<int>(transfer, "max_retries", c.transfer.max_retries);
        c.transfer.backoff_base =
            std::chrono::milliseconds(get_or<std::int64_t>(transfer, "backoff_base_ms", 100));
        c.transfer_attempts = get_or<int>(transfer, "attempts", c.transfer_attempts);
        c.transfer_retry_ms = get_or<TimeMs>(transfer, "retry_ms", c.transfer_retry_ms);
    } catch (const json::exception& e) {
        throw Error(Errc::ConfigError, std::string("config: ") + e.what());
    }

    if (c.collation_interval_ms <= 0 || c.tick_ms <= 0) throw Error(Errc::ConfigError, "intervals must be positive");
    if (c.scheduler.max_concurrent == 0 || c.scheduler.backlog_bound == 0)
        throw Error(Errc::ConfigError, "scheduler.max_concurrent and scheduler.backlog_bound must be >= 1");
    if (c.transfer.chunk_size == 0 || c.transfer_attempts < 1 || c.transfer_retry_ms < 0) throw Error(Errc::ConfigError, "bad transfer settings");
    return c;
}

void prepare_directories(const ServerConfig& c) {
    try {
        for (const auto& dir : {c.pool.sandbox_base, c.cache.root, c.work_root}) fs::create_directories(dir);
        for (const auto& file : {c.audit_log, c.catalog_snapshot}) {
            if (!file.empty() && file.has_parent_path()) fs::create_directories(file.parent_path());
        }
    } catch (const fs::filesystem_error& e) {
        throw Error(Errc::ConfigError, std::string("cannot create state directories: ") + e.what());
    }
}

}  // namespace bdb
