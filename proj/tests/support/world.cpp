#include "world.hpp"

#include <algorithm>
#include <set>

namespace bdbtest {

namespace fs = std::filesystem;
using namespace bdb;

std::vector<std::uint8_t> random_bytes(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::uint8_t> out(n);
    for (auto& b : out) b = static_cast<std::uint8_t>(rng());
    return out;
}

std::vector<EventRecord> random_records(std::mt19937_64& rng, std::size_t count, std::uint32_t max_run,
                                        const std::vector<Format>& formats, std::size_t max_payload) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> ids;
    std::uniform_int_distribution<std::uint32_t> run(1, max_run), event(1, 100'000);
    while (ids.size() < count) ids.emplace(run(rng), event(rng));
    std::vector<EventRecord> out;
    std::uniform_int_distribution<std::size_t> len(0, max_payload);
    for (const auto& [r, e] : ids) {
        EventRecord rec{r, e, {}};
        while (rec.sections.empty()) {
            for (auto f : formats) {
                if (rng() % 2) rec.sections[section_tag(f)] = random_bytes(rng, len(rng));
            }
        }
        out.push_back(std::move(rec));
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

World::World(WorldOptions opts) : options(std::move(opts)) {
    std::mt19937_64 rng(options.fabric_seed * 7919 + 17);
    records = random_records(rng, options.events, options.max_run, {Format::Micro, Format::Mini, Format::Kanga});
    store_path = dir / "stores/allevents";
    write_store(store_path, kCollection, records);

    config = default_config(dir.path());
    config.collation_interval_ms = options.collation_interval_ms;
    config.tick_ms = options.tick_ms;
    config.workers = options.workers;
    config.scheduler = {options.max_concurrent, options.backlog_bound};
    config.cache.budget_bytes = options.cache_budget;
    config.pool.quota_bytes = options.quota_bytes;
    config.pool.accounts.clear();
    for (std::size_t i = 1; i <= options.pool_accounts; ++i) {
        char name[16];
        std::snprintf(name, sizeof name, "pool%02zu", i);
        config.pool.accounts.push_back(name);
    }
    config.fabric_seed = options.fabric_seed;
    config.transfer_retry_ms = options.transfer_retry_ms;

    Catalog catalog;
    catalog.register_site({kSourceSite, Tier::TierA, "Stanford Linear Accelerator Center", kSourceSite});
    catalog.register_site({kMirrorSite, Tier::TierA, "Rutherford Appleton Laboratory", kMirrorSite});
    catalog.register_site({kDestSite, Tier::TierC, "Manchester HEP", kDestSite});
    catalog.register_site({kDestSite2, Tier::TierC, "Bristol HEP", kDestSite2});
    catalog.register_collection({kCollection},
                                {{kCollection, kSourceSite, Format::Micro, StorageClass::Disk, store_path.string()},
                                 {kCollection, kSourceSite, Format::Mini, StorageClass::Disk, store_path.string()},
                                 {kCollection, kMirrorSite, Format::Kanga, StorageClass::Tape, ""}});

    GridMap grid;
    for (std::size_t i = 0; i < options.mapped_dns.size(); ++i) grid.add(options.mapped_dns[i], "babar" + std::to_string(i));

    broker = std::make_unique<Broker>(config, std::move(catalog), std::move(grid), options.clock ? *options.clock : clock,
                                      std::move(options.sink));
    for (const char* site : {kSourceSite, kDestSite, kDestSite2}) {
        EndpointConfig ep;
        ep.site_id = site;
        ep.storage_root = site_root(site);
        broker->fabric().spawn_endpoint(ep);
    }
}

World::~World() {
    if (broker) broker->drain();
}

ExtractionRequest World::request(const std::string& runs, const std::string& dest_site, const std::string& dest_path,
                                 const std::string& dn, Format format) const {
    std::string doc = "collection: " + std::string(kCollection) + "\nformat: " + std::string(format_name(format)) +
                      "\nruns: " + runs + "\ndestination: " + dest_site + ":" + dest_path + "\nrequester: " + dn + "\n";
    return parse_request(doc);
}

std::string World::submit(const ExtractionRequest& request) {
    return broker->submit(request, request.requester_dn).receipt_id;
}

void World::step() {
    clock.advance(options.tick_ms);
    broker->tick();
    broker->drain();
}

std::optional<std::size_t> World::run_until_quiescent(std::size_t max_ticks) {
    for (std::size_t i = 0; i < max_ticks; ++i) {
        if (broker->quiescent()) return i;
        step();
    }
    return broker->quiescent() ? std::optional<std::size_t>(max_ticks) : std::nullopt;
}

fs::path World::site_root(const std::string& site) const { return dir / ("sites/" + site); }

fs::path World::delivered(const std::string& site, const std::string& path) const {
    return site_root(site) / fs::path(path).relative_path();
}

}  // namespace bdbtest
