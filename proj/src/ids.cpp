#include "bdb/ids.hpp"

#include <vector>

#include "bdb/digest.hpp"

namespace bdb {

std::string TokenSource::hex(std::size_t bytes) {
    std::vector<std::uint8_t> buf(bytes);
    {
        std::lock_guard lock(mutex_);
        for (auto& b : buf) b = static_cast<std::uint8_t>(rng_() & 0xff);
    }
    return to_hex(buf);
}

std::array<std::uint8_t, 16> TokenSource::raw16() {
    std::array<std::uint8_t, 16> out{};
    std::lock_guard lock(mutex_);
    for (auto& b : out) b = static_cast<std::uint8_t>(rng_() & 0xff);
    return out;
}

}  // namespace bdb
