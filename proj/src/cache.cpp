#include "bdb/cache.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "bdb/digest.hpp"
#include "bdb/error.hpp"

namespace bdb {

namespace fs = std::filesystem;

void LruIndex::insert(const std::string& key, std::uint64_t bytes) {
    lru_.push_back({key, bytes, 0});
    pos_[key] = std::prev(lru_.end());
    resident_ += bytes;
}

void LruIndex::touch(const std::string& key) {
    auto it = pos_.find(key);
    if (it == pos_.end()) return;
    lru_.splice(lru_.end(), lru_, it->second);
}

void LruIndex::erase(const std::string& key) {
    auto it = pos_.find(key);
    if (it == pos_.end()) return;
    resident_ -= it->second->bytes;
    lru_.erase(it->second);
    pos_.erase(it);
}

void LruIndex::pin(const std::string& key) {
    if (auto it = pos_.find(key); it != pos_.end()) ++it->second->pins;
}

void LruIndex::unpin(const std::string& key) {
    if (auto it = pos_.find(key); it != pos_.end() && it->second->pins > 0) --it->second->pins;
}

bool LruIndex::pinned(const std::string& key) const {
    auto it = pos_.find(key);
    return it != pos_.end() && it->second->pins > 0;
}

std::vector<std::string> LruIndex::plan_eviction(std::uint64_t needed) const {
    if (needed > budget_) throw Error(Errc::CannotFit, "entry of " + std::to_string(needed) + " bytes exceeds budget");
    std::vector<std::string> victims;
    auto resident = resident_;
    for (auto it = lru_.begin(); it != lru_.end() && resident + needed > budget_; ++it) {
        if (it->pins > 0) continue;
        victims.push_back(it->key);
        resident -= it->bytes;
    }
    if (resident + needed > budget_) throw Error(Errc::CannotFit, "pinned entries leave no room");
    return victims;
}

std::vector<std::string> LruIndex::evict_to_fit(std::uint64_t needed) {
    auto victims = plan_eviction(needed);
    for (const auto& key : victims) erase(key);
    return victims;
}

std::vector<std::string> LruIndex::order() const {
    std::vector<std::string> out;
    for (const auto& slot : lru_) out.push_back(slot.key);
    return out;
}

CachePin::CachePin(CachePin&& other) noexcept : cache_(other.cache_), key_(std::move(other.key_)) {
    other.cache_ = nullptr;
}

CachePin& CachePin::operator=(CachePin&& other) noexcept {
    if (this != &other) {
        reset();
        cache_ = other.cache_;
        key_ = std::move(other.key_);
        other.cache_ = nullptr;
    }
    return *this;
}

void CachePin::reset() {
    if (cache_ != nullptr) cache_->unpin(key_);
    cache_ = nullptr;
}

ExtractionCache::ExtractionCache(CacheConfig config, const Clock& clock, AuditLog* audit)
    : config_(std::move(config)), clock_(clock), audit_(audit), index_(config_.budget_bytes) {
    if (config_.root.empty()) throw Error(Errc::ConfigError, "cache root not set");
    fs::create_directories(config_.root);
    load_existing();
}

fs::path ExtractionCache::entry_dir(const std::string& key) const { return config_.root / key.substr(0, 2) / key; }

void ExtractionCache::write_entry_file(const CacheEntry& e) const {
    std::ostringstream out;
    out << "key=" << e.key << '\n'
        << "byte_size=" << e.byte_size << '\n'
        << "created_at=" << e.created_at << '\n'
        << "last_hit_at=" << e.last_hit_at << '\n'
        << "hit_count=" << e.hit_count << '\n'
        << "source_checksum=" << e.source_checksum << '\n'
        << "output_checksum=" << e.output_checksum << '\n';
    auto tmp = e.result_path / "entry.tmp";
    write_file_text(tmp, out.str());
    fs::rename(tmp, e.result_path / "entry");
}

void ExtractionCache::load_existing() {
    std::vector<CacheEntry> found;
    for (const auto& shard : fs::directory_iterator(config_.root)) {
        if (!shard.is_directory()) continue;
        for (const auto& dir : fs::directory_iterator(shard.path())) {
            auto entry_file = dir.path() / "entry";
            std::ifstream in(entry_file);
            if (!in) continue;
            std::map<std::string, std::string> kv;
            std::string line;
            while (std::getline(in, line)) {
                auto eq = line.find('=');
                if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
            }
            try {
                CacheEntry e;
                e.key = kv.at("key");
                e.result_path = dir.path();
                e.byte_size = std::stoull(kv.at("byte_size"));
                e.created_at = std::stoll(kv.at("created_at"));
                e.last_hit_at = std::stoll(kv.at("last_hit_at"));
                e.hit_count = std::stoull(kv.at("hit_count"));
                e.source_checksum = kv.at("source_checksum");
                e.output_checksum = kv.at("output_checksum");
                if (e.key != dir.path().filename().string()) continue;
                found.push_back(std::move(e));
            } catch (const std::exception&) {
                continue;
            }
        }
    }
    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
        return std::tie(a.last_hit_at, a.key) < std::tie(b.last_hit_at, b.key);
    });
    for (auto& e : found) {
        if (e.byte_size > index_.budget_bytes()) continue;
        for (const auto& victim : index_.evict_to_fit(e.byte_size)) {
            fs::remove_all(entries_.at(victim).result_path);
            entries_.erase(victim);
        }
        index_.insert(e.key, e.byte_size);
        entries_.emplace(e.key, std::move(e));
    }
}

CacheLookup ExtractionCache::lookup_or_begin(const std::string& key) {
    std::unique_lock lock(mutex_);
    while (true) {
        if (auto it = entries_.find(key); it != entries_.end()) {
            auto& e = it->second;
            e.last_hit_at = clock_.now();
            ++e.hit_count;
            ++counters_.hits;
            index_.touch(key);
            index_.pin(key);
            write_entry_file(e);
            return CacheRef{e, CachePin(this, key)};
        }
        if (!in_flight_.contains(key)) break;
        flight_done_.wait(lock);
    }
    ++counters_.misses;
    auto token = next_token_++;
    in_flight_[key] = token;
    return CacheTicket{key, token};
}

void ExtractionCache::finish_flight(const std::string& key) {
    in_flight_.erase(key);
    flight_done_.notify_all();
}

std::vector<std::string> ExtractionCache::evict_locked(std::uint64_t needed_bytes) {
    auto victims = index_.evict_to_fit(needed_bytes);
    for (const auto& key : victims) {
        std::error_code ec;
        fs::remove_all(entries_.at(key).result_path, ec);
        entries_.erase(key);
        ++counters_.evictions;
        if (audit_ != nullptr) audit_->append("-", "system", "cache-evict", key);
    }
    return victims;
}

CacheRef ExtractionCache::commit(const CacheTicket& ticket, const ExtractionResult& result) {
    std::unique_lock lock(mutex_);
    auto it = in_flight_.find(ticket.key);
    if (it == in_flight_.end() || it->second != ticket.token)
        throw Error(Errc::StaleTicket, "ticket for " + ticket.key + " is not outstanding");

    struct FlightGuard {
        ExtractionCache* self;
        std::string key;
        ~FlightGuard() { self->finish_flight(key); }
    } guard{this, ticket.key};

    if (sha256_file_hex(result.dir / kDataFileName) != result.manifest.output_checksum)
        throw Error(Errc::ChecksumMismatch, "result data does not match its extract manifest");
    auto bytes = directory_bytes(result.dir);
    if (bytes > config_.budget_bytes) {
        if (audit_ != nullptr)
            audit_->append("-", "system", "cache-over-budget", ticket.key + " " + std::to_string(bytes) + " bytes");
        throw Error(Errc::OverBudgetEntry, "entry of " + std::to_string(bytes) + " bytes exceeds cache budget");
    }
    evict_locked(bytes);

    auto target = entry_dir(ticket.key);
    fs::create_directories(target.parent_path());
    fs::remove_all(target);
    std::error_code ec;
    fs::rename(result.dir, target, ec);
    if (ec) {
        fs::copy(result.dir, target, fs::copy_options::recursive);
        fs::remove_all(result.dir);
    }

    auto now = clock_.now();
    CacheEntry e{ticket.key, target, bytes, now, now, 0, result.manifest.source_checksum,
                 result.manifest.output_checksum};
    write_entry_file(e);
    index_.insert(e.key, bytes);
    index_.pin(e.key);
    entries_[e.key] = e;
    if (audit_ != nullptr) audit_->append("-", "system", "cache-commit", e.key + " " + std::to_string(bytes) + " bytes");
    return CacheRef{e, CachePin(this, e.key)};
}

void ExtractionCache::abandon(const CacheTicket& ticket) {
    std::lock_guard lock(mutex_);
    auto it = in_flight_.find(ticket.key);
    if (it == in_flight_.end() || it->second != ticket.token) return;
    finish_flight(ticket.key);
}

std::vector<std::string> ExtractionCache::evict_to_fit(std::uint64_t needed_bytes) {
    std::lock_guard lock(mutex_);
    return evict_locked(needed_bytes);
}

void ExtractionCache::unpin(const std::string& key) {
    std::lock_guard lock(mutex_);
    index_.unpin(key);
}

std::optional<CacheEntry> ExtractionCache::peek(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

CacheStats ExtractionCache::stats() const {
    std::lock_guard lock(mutex_);
    auto s = counters_;
    s.entries = entries_.size();
    s.resident_bytes = index_.resident_bytes();
    s.budget_bytes = index_.budget_bytes();
    return s;
}

}  // namespace bdb
