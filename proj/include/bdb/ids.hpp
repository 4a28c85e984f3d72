#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <random>
#include <string>

namespace bdb {

// Random hex tokens for receipts, leases and transfer jobs. Seedable so
// tests can reproduce id sequences.
class TokenSource {
public:
    TokenSource() : rng_(std::random_device{}()) {}
    explicit TokenSource(std::uint64_t seed) : rng_(seed) {}

    /// `bytes` random bytes rendered as 2*bytes lowercase hex digits.
    std::string hex(std::size_t bytes);

    std::array<std::uint8_t, 16> raw16();

private:
    std::mutex mutex_;
    std::mt19937_64 rng_;
};

}  // namespace bdb
