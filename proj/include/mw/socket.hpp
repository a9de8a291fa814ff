#pragma once

#include <string>

#include "mw/master.hpp"

namespace mw::net {

// TCP master: accepts workers, feeds their frames to the Master state
// machine in arrival order, and drives the dead sweep from a wall-clock
// timer. Single-threaded poll loop.
class MasterServer {
public:
    MasterServer(MasterConfig cfg, AppHooks& app);
    ~MasterServer();

    MasterServer(const MasterServer&) = delete;
    MasterServer& operator=(const MasterServer&) = delete;

    // Binds the listener; port 0 picks an ephemeral port.
    bool bind(const std::string& host, uint16_t port, std::string* err);
    uint16_t port() const { return port_; }

    // Runs until the application finishes or the master fails.
    bool serve(RunReport* report, std::string* err);

private:
    MasterConfig cfg_;
    AppHooks& app_;
    int listen_fd_ = -1;
    uint16_t port_ = 0;
};

// TCP worker: says hello, unpacks init data, then executes assigned tasks
// until Shutdown. A helper thread emits heartbeats every interval, also
// while a task is executing. Returns 0 on clean shutdown, 3 when the
// connection is lost or the protocol is violated.
// MW_HEARTBEAT_OVERRIDE_S, when set, replaces the master-provided
// heartbeat interval (test hook).
int run_worker_socket(const std::string& host, uint16_t port, AppHooks& app,
                      std::string* err = nullptr);

constexpr uint16_t kDefaultPort = 7477;

}  // namespace mw::net
