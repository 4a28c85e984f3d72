#include <csignal>
#include <iostream>
#include <pthread.h>
#include <string>

#include <CLI11.hpp>

#include "bdb/broker.hpp"
#include "bdb/client.hpp"
#include "bdb/config.hpp"
#include "bdb/error.hpp"
#include "bdb/server.hpp"

int main(int argc, char** argv) {
    CLI::App app{"bdb_server: data location and retrieval broker"};
    std::string config_path = bdb::process_env("BDB_SERVER_CONFIG").value_or("");
    std::string listen_override;
    app.add_option("-c,--config", config_path, "server config file (env BDB_SERVER_CONFIG)");
    app.add_option("--listen", listen_override, "override the configured listen address");
    CLI11_PARSE(app, argc, argv);

    if (config_path.empty()) {
        std::cerr << "bdb_server: no config (use --config or BDB_SERVER_CONFIG)\n";
        return 2;
    }

    // Block termination signals before any thread starts; main waits for them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    bdb::SystemClock clock;
    std::unique_ptr<bdb::Broker> broker;
    std::unique_ptr<bdb::Server> server;
    try {
        auto config = bdb::load_config(config_path);
        if (!listen_override.empty()) config.listen = listen_override;
        broker = bdb::open_broker(config, clock);
        server = std::make_unique<bdb::Server>(*broker, config.listen, config.tick_ms);
        auto port = server->start();
        std::cout << "listening " << bdb::parse_host_port(config.listen).host << ":" << port << std::endl;
    } catch (const bdb::Error& e) {
        std::cerr << "bdb_server: " << bdb::errc_name(e.code()) << ": " << e.what() << "\n";
        return 2;
    }

    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "bdb_server: signal " << sig << ", shutting down\n";
    server->stop();
    return 0;
}
