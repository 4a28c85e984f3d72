#pragma once

#include <condition_variable>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "bdb/broker.hpp"

namespace bdb {

// Line-protocol TCP front end plus the lifecycle tick thread. One thread per
// client connection; the tick thread is the only caller of Broker::tick().
class Server {
public:
    Server(Broker& broker, std::string listen, TimeMs tick_ms);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and starts serving. Returns the bound port (useful with port 0).
    /// Throws ConfigError when the address cannot be bound.
    std::uint16_t start();
    void stop();

    std::uint16_t port() const { return port_; }

private:
    struct Connection;

    void accept_loop();
    void tick_loop();
    void serve(Connection& conn);
    void reap_finished();

    Broker& broker_;
    std::string listen_;
    TimeMs tick_ms_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;

    std::mutex mutex_;
    std::condition_variable stop_cv_;
    bool stopping_ = false;
    bool started_ = false;
    std::thread accept_thread_;
    std::thread tick_thread_;
    std::list<std::unique_ptr<Connection>> connections_;
};

}  // namespace bdb
