#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bdb/audit.hpp"
#include "bdb/ids.hpp"

namespace bdb {

// DN -> local account, grid-mapfile syntax: `"<DN>" <account>` per line.
class GridMap {
public:
    /// Throws SyntaxError(line) on a malformed entry.
    static GridMap parse(std::string_view text);
    static GridMap load(const std::filesystem::path& path);

    void add(const std::string& dn, const std::string& account) { entries_[dn] = account; }
    std::optional<std::string> lookup(const std::string& dn) const;
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, std::string> entries_;
};

enum class BindingKind { Mapped, Pooled };

struct AccountBinding {
    std::string dn;
    std::string account;
    BindingKind kind = BindingKind::Mapped;
    std::string lease_id;  // set for Pooled bindings
};

struct AccountLease {
    std::string lease_id;
    std::string account;
    std::string dn;
    std::uint64_t quota_bytes = 0;
    std::uint64_t used_bytes = 0;
    std::filesystem::path sandbox_root;
};

struct PoolConfig {
    std::vector<std::string> accounts;  // defaults to pool01..pool08 when empty
    std::uint64_t quota_bytes = 256ull << 20;
    std::filesystem::path sandbox_base;
};

// Maps authenticated DNs onto local accounts. Unmapped DNs lease a sandboxed
// pool account with a byte quota; mapped accounts are never charged.
//
// A DN holds at most one lease; acquiring again while it is held shares the
// lease and the account is returned when the last holder releases.
// All operations are safe under concurrent callers.
class IdentityService {
public:
    IdentityService(GridMap map, PoolConfig pool, AuditLog* audit = nullptr);

    /// Mapped binding when the DN is in the map, otherwise a pooled lease.
    /// Throws NoIdentity when the DN is unmapped and the pool is exhausted.
    AccountBinding map_identity(const std::string& dn);

    /// Throws QuotaTooSmall (needed > quota, checked first) or PoolExhausted.
    AccountLease acquire_pool_account(const std::string& dn, std::uint64_t needed_bytes);

    /// Throws UnknownLease, or QuotaExceeded leaving the lease unchanged.
    AccountLease charge_quota(const std::string& lease_id, std::uint64_t delta_bytes);

    /// Returns bytes previously charged (e.g. after handing files to the cache).
    AccountLease credit_quota(const std::string& lease_id, std::uint64_t delta_bytes);

    /// Drops one holder; the last release purges the sandbox and frees the account.
    void release(const std::string& lease_id);

    AccountLease lease(const std::string& lease_id) const;

    /// Resolves `relative` under the lease sandbox. Throws SandboxViolation for
    /// absolute paths or paths escaping the sandbox.
    std::filesystem::path sandbox_path(const std::string& lease_id, const std::filesystem::path& relative) const;

    std::size_t pool_size() const { return pool_.accounts.size(); }
    std::size_t active_leases() const;
    std::uint64_t quota_bytes() const { return pool_.quota_bytes; }
    bool is_mapped(const std::string& dn) const { return map_.lookup(dn).has_value(); }

private:
    struct ActiveLease {
        AccountLease lease;
        std::size_t holders = 1;
    };

    void audit(const std::string& actor, const std::string& kind, const std::string& detail);

    GridMap map_;
    PoolConfig pool_;
    AuditLog* audit_;
    TokenSource tokens_;
    mutable std::mutex mutex_;
    std::vector<std::string> free_;  // accounts not leased, in configured order
    std::map<std::string, ActiveLease> leases_;
    std::map<std::string, std::string> lease_by_dn_;
};

}  // namespace bdb
