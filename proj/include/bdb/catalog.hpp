#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "bdb/format.hpp"

namespace bdb {

enum class Tier { TierA, TierC };
enum class StorageClass { Disk, Tape };

std::string_view tier_name(Tier t);
std::string_view storage_class_name(StorageClass s);

struct Site {
    std::string site_id;
    Tier tier = Tier::TierC;
    std::string name;
    std::string endpoint;  // host:port, or the site id for in-process fabric endpoints

    bool operator==(const Site&) const = default;
};

struct CollectionPlacement {
    std::string collection_id;
    std::string site_id;
    Format format = Format::Micro;
    StorageClass storage_class = StorageClass::Disk;
    std::string store_path;

    bool operator==(const CollectionPlacement&) const = default;
};

struct CollectionDescriptor {
    std::string collection_id;
};

// Registry of sites, collections and their placements.
//
// Reads are concurrent; register_* calls are serialized internally, so one
// Catalog may be shared across request handlers.
class Catalog {
public:
    /// Throws DuplicateSite.
    std::string register_site(const Site& site);

    /// Adds placements for a collection, registering the collection on first
    /// use. Validation is all-or-nothing. Throws UnknownSite or
    /// DuplicatePlacement (also for a Disk placement without a store path).
    std::string register_collection(const CollectionDescriptor& meta,
                                     const std::vector<CollectionPlacement>& placements);

    /// Placements of `collection_id` in `format`, TierA sites first, then by
    /// site id. Tape placements are skipped when `online_only`. Throws
    /// UnknownCollection for a collection that was never registered.
    std::vector<CollectionPlacement> locate(const std::string& collection_id, Format format,
                                            bool online_only) const;

    std::optional<Site> site(const std::string& site_id) const;
    std::vector<Site> sites() const;
    std::vector<std::string> collections() const;
    std::vector<CollectionPlacement> placements() const;

    /// Line-delimited JSON snapshot: all sites, then collections, then placements.
    void save_snapshot(const std::filesystem::path& path) const;
    static Catalog load_snapshot(const std::filesystem::path& path);

    Catalog() = default;
    Catalog(Catalog&& other) noexcept;
    Catalog& operator=(Catalog&& other) noexcept;

private:
    using PlacementKey = std::tuple<std::string, std::string, Format>;

    mutable std::shared_mutex mutex_;
    std::map<std::string, Site> sites_;
    std::map<std::string, CollectionDescriptor> collections_;
    std::map<PlacementKey, CollectionPlacement> placements_;
};

}  // namespace bdb
