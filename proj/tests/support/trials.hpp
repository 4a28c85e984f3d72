#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>

namespace bdbtest {

/// One randomized store (1..max_events events, 1..3 formats) and selection:
/// deep_copy against the filter-and-rewrite oracle. Returns a description of
/// the first disagreement, or nullopt when outputs are byte-identical (or both
/// sides refuse with the same error).
std::optional<std::string> extraction_trial(std::mt19937_64& rng, const std::filesystem::path& workdir,
                                            std::size_t max_events = 1000);

}  // namespace bdbtest
