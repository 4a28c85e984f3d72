#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace bdb {

using Sha256Digest = std::array<std::uint8_t, 32>;

// Incremental SHA-256. The single checksum algorithm used for request keys,
// store manifests, cache entries and transfers.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(Sha256&&) noexcept;
    Sha256& operator=(Sha256&&) noexcept;

    void update(std::span<const std::uint8_t> bytes);
    void update(std::string_view text);
    Sha256Digest finish();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

Sha256Digest sha256(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file_hex(const std::filesystem::path& path);

std::string to_hex(std::span<const std::uint8_t> bytes);
/// Returns false on odd length or a non-hex digit.
bool from_hex(std::string_view hex, std::span<std::uint8_t> out);

}  // namespace bdb
