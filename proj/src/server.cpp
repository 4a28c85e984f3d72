#include "bdb/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <iostream>

#include "bdb/error.hpp"
#include "bdb/net.hpp"
#include "bdb/protocol.hpp"

namespace bdb {

struct Server::Connection {
    LineSocket socket;
    std::thread thread;
    std::atomic<bool> done{false};
};

Server::Server(Broker& broker, std::string listen, TimeMs tick_ms)
    : broker_(broker), listen_(std::move(listen)), tick_ms_(tick_ms > 0 ? tick_ms : 1) {}

Server::~Server() { stop(); }

std::uint16_t Server::start() {
    auto address = parse_host_port(listen_);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(address.port);
    if (address.host == "localhost") address.host = "127.0.0.1";
    if (::inet_pton(AF_INET, address.host.c_str(), &addr.sin_addr) != 1)
        throw Error(Errc::ConfigError, "listen host must be an IPv4 address: " + address.host);

    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw Error(Errc::ConfigError, std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 64) != 0) {
        std::string why = std::strerror(errno);
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw Error(Errc::ConfigError, "cannot listen on " + listen_ + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);

    started_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
    tick_thread_ = std::thread([this] { tick_loop(); });
    return port_;
}

void Server::stop() {
    {
        std::lock_guard lock(mutex_);
        if (!started_ || stopping_) return;
        stopping_ = true;
        for (auto& c : connections_) c->socket.shutdown();
    }
    stop_cv_.notify_all();
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (accept_thread_.joinable()) accept_thread_.join();
    if (tick_thread_.joinable()) tick_thread_.join();
    std::list<std::unique_ptr<Connection>> conns;
    {
        std::lock_guard lock(mutex_);
        conns.swap(connections_);
    }
    for (auto& c : conns) {
        if (c->thread.joinable()) c->thread.join();
    }
    broker_.drain();
}

void Server::reap_finished() {
    std::list<std::unique_ptr<Connection>> finished;
    {
        std::lock_guard lock(mutex_);
        for (auto it = connections_.begin(); it != connections_.end();) {
            if ((*it)->done) {
                finished.push_back(std::move(*it));
                it = connections_.erase(it);
            } else {
                ++it;
            }
        }
    }
    for (auto& c : finished) c->thread.join();
}

void Server::accept_loop() {
    for (;;) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            std::lock_guard lock(mutex_);
            if (stopping_) return;
            continue;
        }
        reap_finished();
        std::lock_guard lock(mutex_);
        if (stopping_) {
            ::close(fd);
            return;
        }
        auto conn = std::make_unique<Connection>();
        conn->socket = LineSocket(fd);
        auto* raw = conn.get();
        connections_.push_back(std::move(conn));
        raw->thread = std::thread([this, raw] { serve(*raw); });
    }
}

void Server::serve(Connection& conn) {
    Session session;
    try {
        while (auto line = conn.socket.read_line()) {
            if (line->empty()) continue;
            conn.socket.write_line(handle_message(broker_, session, *line));
        }
    } catch (const Error& e) {
        if (e.code() == Errc::BadMessage) {
            try {
                conn.socket.write_line(error_response(wire_code(Errc::BadMessage), e.what()).dump());
            } catch (const Error&) {
            }
        }
    }
    // shutdown, not close: stop() may still shut this fd down concurrently.
    conn.socket.shutdown();
    conn.done = true;
}

void Server::tick_loop() {
    std::unique_lock lock(mutex_);
    while (!stopping_) {
        lock.unlock();
        try {
            broker_.tick();
        } catch (const std::exception& e) {
            std::cerr << "bdb_server: tick failed: " << e.what() << "\n";
        }
        lock.lock();
        stop_cv_.wait_for(lock, std::chrono::milliseconds(tick_ms_), [this] { return stopping_; });
    }
}

}  // namespace bdb
