#include "bdb/wire.hpp"

#include <algorithm>

#include "bdb/error.hpp"

namespace bdb {

std::string_view frame_type_name(FrameType t) {
    switch (t) {
        case FrameType::Data: return "DATA";
        case FrameType::Ack: return "ACK";
        case FrameType::Verify: return "VERIFY";
        case FrameType::VerifyOk: return "VERIFY_OK";
        case FrameType::Err: return "ERR";
    }
    return "?";
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
    return v;
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
    std::vector<std::uint8_t> out;
    out.reserve(kFrameHeaderSize + frame.payload.size());
    out.insert(out.end(), kFrameMagic.begin(), kFrameMagic.end());
    out.push_back(kFrameVersion);
    out.push_back(static_cast<std::uint8_t>(frame.type));
    out.insert(out.end(), frame.job_id.begin(), frame.job_id.end());
    put_u32(out, frame.chunk_index);
    put_u32(out, static_cast<std::uint32_t>(frame.payload.size()));
    out.insert(out.end(), frame.payload.begin(), frame.payload.end());
    return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kFrameHeaderSize) throw Error(Errc::BadFrame, "frame shorter than header");
    if (!std::equal(kFrameMagic.begin(), kFrameMagic.end(), bytes.begin())) throw Error(Errc::BadFrame, "bad frame magic");
    if (bytes[4] != kFrameVersion) throw Error(Errc::BadFrame, "unsupported frame version");
    auto type = bytes[5];
    if (type < 1 || type > 5) throw Error(Errc::BadFrame, "unknown frame type " + std::to_string(type));
    Frame f;
    f.type = static_cast<FrameType>(type);
    std::copy_n(bytes.begin() + 6, 16, f.job_id.begin());
    f.chunk_index = get_u32(bytes, 22);
    auto len = get_u32(bytes, 26);
    if (bytes.size() - kFrameHeaderSize != len) throw Error(Errc::BadFrame, "frame payload length mismatch");
    f.payload.assign(bytes.begin() + kFrameHeaderSize, bytes.end());
    if (f.type == FrameType::Verify && f.payload.size() != 32)
        throw Error(Errc::BadFrame, "VERIFY must carry a 32-byte checksum");
    return f;
}

}  // namespace bdb
