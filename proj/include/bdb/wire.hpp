#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bdb {

// Transfer-plane frame, little-endian:
//   "BDBT" | u8 version=1 | u8 type | 16-byte job id | u32 chunk index |
//   u32 payload length | payload
inline constexpr std::string_view kFrameMagic = "BDBT";
inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 4 + 1 + 1 + 16 + 4 + 4;

enum class FrameType : std::uint8_t { Data = 1, Ack = 2, Verify = 3, VerifyOk = 4, Err = 5 };

std::string_view frame_type_name(FrameType t);

using JobId = std::array<std::uint8_t, 16>;

struct Frame {
    FrameType type = FrameType::Data;
    JobId job_id{};
    std::uint32_t chunk_index = 0;
    std::vector<std::uint8_t> payload;

    bool operator==(const Frame&) const = default;
};

std::vector<std::uint8_t> encode_frame(const Frame& frame);

/// Throws BadFrame on wrong magic/version/type or a length mismatch.
Frame decode_frame(std::span<const std::uint8_t> bytes);

}  // namespace bdb
