#include "bdb/identity.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "bdb/error.hpp"

namespace bdb {

namespace fs = std::filesystem;

GridMap GridMap::parse(std::string_view text) {
    GridMap map;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        if (line[start] != '"') throw Error(Errc::SyntaxError, "grid map: DN must be quoted", line_no);
        auto close = line.find('"', start + 1);
        if (close == std::string::npos) throw Error(Errc::SyntaxError, "grid map: unterminated DN", line_no);
        auto dn = line.substr(start + 1, close - start - 1);
        std::istringstream rest(line.substr(close + 1));
        std::string account;
        rest >> account;
        // grid-mapfiles may list several accounts; the first is the default.
        if (auto comma = account.find(','); comma != std::string::npos) account.resize(comma);
        if (dn.empty() || account.empty()) throw Error(Errc::SyntaxError, "grid map: expected \"<DN>\" <account>", line_no);
        map.entries_[dn] = account;
    }
    return map;
}

GridMap GridMap::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot read grid map " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::optional<std::string> GridMap::lookup(const std::string& dn) const {
    auto it = entries_.find(dn);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

IdentityService::IdentityService(GridMap map, PoolConfig pool, AuditLog* audit)
    : map_(std::move(map)), pool_(std::move(pool)), audit_(audit) {
    if (pool_.accounts.empty()) {
        for (int i = 1; i <= 8; ++i) pool_.accounts.push_back((i < 10 ? "pool0" : "pool") + std::to_string(i));
    }
    if (pool_.sandbox_base.empty()) pool_.sandbox_base = fs::temp_directory_path() / "bdb-sandboxes";
    free_ = pool_.accounts;
    for (const auto& acct : pool_.accounts) {
        fs::remove_all(pool_.sandbox_base / acct);
        fs::create_directories(pool_.sandbox_base / acct);
    }
}

void IdentityService::audit(const std::string& actor, const std::string& kind, const std::string& detail) {
    if (audit_ != nullptr) audit_->append("-", actor, kind, detail);
}

AccountBinding IdentityService::map_identity(const std::string& dn) {
    if (auto account = map_.lookup(dn)) return {dn, *account, BindingKind::Mapped, {}};
    try {
        auto lease = acquire_pool_account(dn, 0);
        return {dn, lease.account, BindingKind::Pooled, lease.lease_id};
    } catch (const Error& e) {
        if (e.code() != Errc::PoolExhausted) throw;
        throw Error(Errc::NoIdentity, "no mapping for DN and pool exhausted; retry later");
    }
}

AccountLease IdentityService::acquire_pool_account(const std::string& dn, std::uint64_t needed_bytes) {
    if (needed_bytes > pool_.quota_bytes)
        throw Error(Errc::QuotaTooSmall, "requested " + std::to_string(needed_bytes) + " bytes exceeds pool quota " +
                                             std::to_string(pool_.quota_bytes));
    AccountLease granted;
    bool shared = false;
    {
        std::lock_guard lock(mutex_);
        if (auto it = lease_by_dn_.find(dn); it != lease_by_dn_.end()) {
            auto& active = leases_.at(it->second);
            if (needed_bytes > active.lease.quota_bytes - active.lease.used_bytes)
                throw Error(Errc::QuotaExceeded, "active lease for DN lacks headroom");
            ++active.holders;
            granted = active.lease;
            shared = true;
        } else {
            if (free_.empty()) throw Error(Errc::PoolExhausted, "all pool accounts are leased");
            auto account = free_.front();
            free_.erase(free_.begin());
            std::string id;
            do {
                id = tokens_.hex(8);
            } while (leases_.contains(id));
            granted = AccountLease{id, account, dn, pool_.quota_bytes, 0, pool_.sandbox_base / account};
            leases_.emplace(id, ActiveLease{granted, 1});
            lease_by_dn_.emplace(dn, id);
        }
    }
    audit(dn, "binding", (shared ? "shared lease " : "lease ") + granted.lease_id + " account " + granted.account);
    return granted;
}

AccountLease IdentityService::charge_quota(const std::string& lease_id, std::uint64_t delta_bytes) {
    std::lock_guard lock(mutex_);
    auto it = leases_.find(lease_id);
    if (it == leases_.end()) throw Error(Errc::UnknownLease, "unknown lease " + lease_id);
    auto& lease = it->second.lease;
    if (delta_bytes > lease.quota_bytes - lease.used_bytes)
        throw Error(Errc::QuotaExceeded, "lease " + lease_id + ": charging " + std::to_string(delta_bytes) +
                                             " bytes exceeds quota");
    lease.used_bytes += delta_bytes;
    return lease;
}

AccountLease IdentityService::credit_quota(const std::string& lease_id, std::uint64_t delta_bytes) {
    std::lock_guard lock(mutex_);
    auto it = leases_.find(lease_id);
    if (it == leases_.end()) throw Error(Errc::UnknownLease, "unknown lease " + lease_id);
    auto& lease = it->second.lease;
    lease.used_bytes -= std::min(lease.used_bytes, delta_bytes);
    return lease;
}

void IdentityService::release(const std::string& lease_id) {
    AccountLease released;
    {
        std::lock_guard lock(mutex_);
        auto it = leases_.find(lease_id);
        if (it == leases_.end()) throw Error(Errc::UnknownLease, "unknown lease " + lease_id);
        if (--it->second.holders > 0) return;
        released = it->second.lease;
        fs::remove_all(released.sandbox_root);
        fs::create_directories(released.sandbox_root);
        lease_by_dn_.erase(released.dn);
        leases_.erase(it);
        // Keep the free list in configured order so allocation is deterministic.
        free_.push_back(released.account);
        std::sort(free_.begin(), free_.end(), [this](const auto& a, const auto& b) {
            auto pa = std::find(pool_.accounts.begin(), pool_.accounts.end(), a);
            auto pb = std::find(pool_.accounts.begin(), pool_.accounts.end(), b);
            return pa < pb;
        });
    }
    audit(released.dn, "lease-release", "lease " + released.lease_id + " account " + released.account);
}

AccountLease IdentityService::lease(const std::string& lease_id) const {
    std::lock_guard lock(mutex_);
    auto it = leases_.find(lease_id);
    if (it == leases_.end()) throw Error(Errc::UnknownLease, "unknown lease " + lease_id);
    return it->second.lease;
}

fs::path IdentityService::sandbox_path(const std::string& lease_id, const fs::path& relative) const {
    auto root = lease(lease_id).sandbox_root;
    if (relative.is_absolute()) throw Error(Errc::SandboxViolation, "absolute path outside sandbox");
    auto joined = (root / relative).lexically_normal();
    auto rel = joined.lexically_relative(root);
    if (rel.empty() || *rel.begin() == "..") throw Error(Errc::SandboxViolation, "path escapes sandbox");
    return joined;
}

std::size_t IdentityService::active_leases() const {
    std::lock_guard lock(mutex_);
    return leases_.size();
}

}  // namespace bdb
