#include "bdb/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <set>

#include <json.hpp>

#include "bdb/error.hpp"

namespace bdb {

using nlohmann::json;

std::string_view tier_name(Tier t) { return t == Tier::TierA ? "TierA" : "TierC"; }

std::string_view storage_class_name(StorageClass s) { return s == StorageClass::Disk ? "disk" : "tape"; }

Catalog::Catalog(Catalog&& other) noexcept {
    std::unique_lock lock(other.mutex_);
    sites_ = std::move(other.sites_);
    collections_ = std::move(other.collections_);
    placements_ = std::move(other.placements_);
}

Catalog& Catalog::operator=(Catalog&& other) noexcept {
    if (this != &other) {
        std::scoped_lock lock(mutex_, other.mutex_);
        sites_ = std::move(other.sites_);
        collections_ = std::move(other.collections_);
        placements_ = std::move(other.placements_);
    }
    return *this;
}

std::string Catalog::register_site(const Site& site) {
    if (site.site_id.empty()) throw Error(Errc::UnknownSite, "site id is empty");
    std::unique_lock lock(mutex_);
    if (sites_.contains(site.site_id))
        throw Error(Errc::DuplicateSite, "site already registered: " + site.site_id);
    sites_.emplace(site.site_id, site);
    return site.site_id;
}

std::string Catalog::register_collection(const CollectionDescriptor& meta,
                                         const std::vector<CollectionPlacement>& placements) {
    std::unique_lock lock(mutex_);
    std::set<PlacementKey> batch;
    for (const auto& p : placements) {
        if (!sites_.contains(p.site_id)) throw Error(Errc::UnknownSite, "unknown site: " + p.site_id);
        if (p.collection_id != meta.collection_id)
            throw Error(Errc::UnknownCollection,
                        "placement names collection " + p.collection_id + ", expected " + meta.collection_id);
        if (p.storage_class == StorageClass::Disk && p.store_path.empty())
            throw Error(Errc::DuplicatePlacement, "disk placement at " + p.site_id + " has no store path");
        PlacementKey key{p.collection_id, p.site_id, p.format};
        if (placements_.contains(key) || !batch.insert(key).second)
            throw Error(Errc::DuplicatePlacement, "duplicate placement of " + p.collection_id + " at " +
                                                      p.site_id + " in " + std::string(format_name(p.format)));
    }
    collections_.try_emplace(meta.collection_id, meta);
    for (const auto& p : placements) placements_.emplace(PlacementKey{p.collection_id, p.site_id, p.format}, p);
    return meta.collection_id;
}

std::vector<CollectionPlacement> Catalog::locate(const std::string& collection_id, Format format,
                                                 bool online_only) const {
    std::shared_lock lock(mutex_);
    if (!collections_.contains(collection_id))
        throw Error(Errc::UnknownCollection, "unknown collection: " + collection_id);

    std::vector<std::pair<Tier, const CollectionPlacement*>> hits;
    auto first = placements_.lower_bound(PlacementKey{collection_id, std::string{}, Format::Micro});
    for (auto it = first; it != placements_.end() && std::get<0>(it->first) == collection_id; ++it) {
        const auto& p = it->second;
        if (p.format != format) continue;
        if (online_only && p.storage_class == StorageClass::Tape) continue;
        hits.emplace_back(sites_.at(p.site_id).tier, &p);
    }
    // Map order already sorts by site id; a stable partition puts TierA first.
    std::stable_partition(hits.begin(), hits.end(), [](const auto& h) { return h.first == Tier::TierA; });

    std::vector<CollectionPlacement> out;
    out.reserve(hits.size());
    for (const auto& h : hits) out.push_back(*h.second);
    return out;
}

std::optional<Site> Catalog::site(const std::string& site_id) const {
    std::shared_lock lock(mutex_);
    auto it = sites_.find(site_id);
    if (it == sites_.end()) return std::nullopt;
    return it->second;
}

std::vector<Site> Catalog::sites() const {
    std::shared_lock lock(mutex_);
    std::vector<Site> out;
    for (const auto& [_, s] : sites_) out.push_back(s);
    return out;
}

std::vector<std::string> Catalog::collections() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : collections_) out.push_back(id);
    return out;
}

std::vector<CollectionPlacement> Catalog::placements() const {
    std::shared_lock lock(mutex_);
    std::vector<CollectionPlacement> out;
    for (const auto& [_, p] : placements_) out.push_back(p);
    return out;
}

void Catalog::save_snapshot(const std::filesystem::path& path) const {
    std::shared_lock lock(mutex_);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error(Errc::IoError, "cannot write catalog snapshot " + tmp.string());
        for (const auto& [_, s] : sites_) {
            out << json{{"kind", "site"},
                        {"site_id", s.site_id},
                        {"tier", tier_name(s.tier)},
                        {"name", s.name},
                        {"endpoint", s.endpoint}}
                       .dump()
                << '\n';
        }
        for (const auto& [id, _] : collections_) out << json{{"kind", "collection"}, {"collection_id", id}}.dump() << '\n';
        for (const auto& [_, p] : placements_) {
            out << json{{"kind", "placement"},
                        {"collection_id", p.collection_id},
                        {"site_id", p.site_id},
                        {"format", format_name(p.format)},
                        {"storage_class", storage_class_name(p.storage_class)},
                        {"store_path", p.store_path}}
                       .dump()
                << '\n';
        }
        if (!out.flush()) throw Error(Errc::IoError, "cannot write catalog snapshot " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

namespace {

std::string field(const json& rec, const char* name, std::size_t line) {
    auto it = rec.find(name);
    if (it == rec.end() || !it->is_string())
        throw Error(Errc::MissingField, std::string("catalog snapshot: missing field ") + name, line);
    return it->get<std::string>();
}

}  // namespace

Catalog Catalog::load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot read catalog snapshot " + path.string());

    Catalog cat;
    std::map<std::string, std::vector<CollectionPlacement>> pending;
    std::vector<std::string> order;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec = json::parse(text, nullptr, false);
        if (rec.is_discarded() || !rec.is_object())
            throw Error(Errc::SyntaxError, "catalog snapshot: malformed record", line);
        auto kind = field(rec, "kind", line);
        if (kind == "site") {
            Site s;
            s.site_id = field(rec, "site_id", line);
            auto tier = field(rec, "tier", line);
            if (tier == "TierA") s.tier = Tier::TierA;
            else if (tier == "TierC") s.tier = Tier::TierC;
            else throw Error(Errc::SyntaxError, "catalog snapshot: bad tier " + tier, line);
            s.name = rec.value("name", "");
            s.endpoint = rec.value("endpoint", "");
            cat.register_site(s);
        } else if (kind == "collection") {
            auto id = field(rec, "collection_id", line);
            if (!pending.contains(id)) order.push_back(id);
            pending[id];
        } else if (kind == "placement") {
            CollectionPlacement p;
            p.collection_id = field(rec, "collection_id", line);
            p.site_id = field(rec, "site_id", line);
            auto fmt = parse_format(field(rec, "format", line));
            if (!fmt) throw Error(Errc::UnknownFormat, "catalog snapshot: bad format", line);
            p.format = *fmt;
            auto sc = field(rec, "storage_class", line);
            if (sc == "disk") p.storage_class = StorageClass::Disk;
            else if (sc == "tape") p.storage_class = StorageClass::Tape;
            else throw Error(Errc::SyntaxError, "catalog snapshot: bad storage_class " + sc, line);
            p.store_path = rec.value("store_path", "");
            if (!pending.contains(p.collection_id)) order.push_back(p.collection_id);
            pending[p.collection_id].push_back(std::move(p));
        } else {
            throw Error(Errc::SyntaxError, "catalog snapshot: unknown kind " + kind, line);
        }
    }
    for (const auto& id : order) cat.register_collection({id}, pending[id]);
    return cat;
}

}  // namespace bdb
