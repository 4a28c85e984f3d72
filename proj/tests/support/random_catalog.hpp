#pragma once

#include <random>
#include <vector>

#include "bdb/catalog.hpp"

namespace bdbtest {

struct RandomCatalog {
    std::vector<bdb::Site> sites;
    std::vector<bdb::CollectionPlacement> placements;
    std::vector<std::string> collections;
};

/// Up to `max_placements` placements over a handful of sites and collections,
/// registered in random order and random batches.
RandomCatalog random_catalog(std::mt19937_64& rng, bdb::Catalog& catalog, std::size_t max_placements = 50);

}  // namespace bdbtest
