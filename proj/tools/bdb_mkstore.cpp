// Writes a synthetic event store (random payloads) for demos and local runs.

#include <iostream>
#include <random>
#include <set>

#include <CLI11.hpp>

#include "bdb/error.hpp"
#include "bdb/event_store.hpp"
#include "bdb/format.hpp"

int main(int argc, char** argv) {
    CLI::App app{"bdb_mkstore: write a synthetic event store"};
    std::string root, collection;
    std::size_t events = 1000;
    std::uint32_t runs = 20;
    std::uint64_t seed = 1;
    app.add_option("root", root, "store directory")->required();
    app.add_option("collection", collection, "collection name")->required();
    app.add_option("--events", events, "number of events");
    app.add_option("--runs", runs, "runs numbered 1..N");
    app.add_option("--seed", seed, "random seed");
    CLI11_PARSE(app, argc, argv);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint32_t> run(1, std::max<std::uint32_t>(runs, 1)), event(1, 1'000'000);
    std::uniform_int_distribution<std::size_t> len(8, 256);
    std::set<bdb::EventId> seen;
    std::vector<bdb::EventRecord> records;
    while (records.size() < events) {
        bdb::EventRecord rec{run(rng), event(rng), {}};
        if (!seen.insert(rec.id()).second) continue;
        for (auto f : {bdb::Format::Micro, bdb::Format::Mini, bdb::Format::Kanga}) {
            std::vector<std::uint8_t> payload(len(rng));
            for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
            rec.sections[bdb::section_tag(f)] = std::move(payload);
        }
        records.push_back(std::move(rec));
    }
    try {
        auto manifest = bdb::write_store(root, collection, records);
        std::cout << root << ": " << manifest.event_count << " events, checksum " << manifest.checksum << "\n";
    } catch (const bdb::Error& e) {
        std::cerr << "bdb_mkstore: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
