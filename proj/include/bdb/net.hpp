#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace bdb {

struct HostPort {
    std::string host;
    std::uint16_t port = 0;
};

/// "host:port" or ":port" (host defaults to 127.0.0.1). Throws ConfigError.
HostPort parse_host_port(const std::string& text);

// Owns a connected stream socket and speaks newline-delimited lines over it.
class LineSocket {
public:
    static constexpr std::size_t kMaxLine = 1 << 20;

    LineSocket() = default;
    explicit LineSocket(int fd) : fd_(fd) {}
    ~LineSocket();
    LineSocket(LineSocket&& other) noexcept;
    LineSocket& operator=(LineSocket&& other) noexcept;
    LineSocket(const LineSocket&) = delete;
    LineSocket& operator=(const LineSocket&) = delete;

    /// Throws ConnectFailed.
    static LineSocket connect(const HostPort& address);

    /// nullopt on EOF. Throws BadMessage when a line exceeds kMaxLine, IoError on socket errors.
    std::optional<std::string> read_line();
    /// Appends '\n'. Throws IoError.
    void write_line(const std::string& line);

    int fd() const { return fd_; }
    void shutdown();
    void close();

private:
    int fd_ = -1;
    std::string buffer_;
};

}  // namespace bdb
