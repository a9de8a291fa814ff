#include "mw/socket.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <cstring>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "mw/hooks.hpp"
#include "mw/wire.hpp"

namespace mw::net {

namespace {

double mono_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

bool send_all(int fd, const Bytes& data) {
    size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        off += static_cast<size_t>(n);
    }
    return true;
}

int connect_to(const std::string& host, uint16_t port, std::string* err) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    std::string service = std::to_string(port);
    int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res);
    if (rc != 0) {
        if (err) *err = std::string("resolve ") + host + ": " + gai_strerror(rc);
        return -1;
    }
    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0 && err) *err = "cannot connect to " + host + ":" + service;
    if (fd >= 0) {
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    }
    return fd;
}

struct Conn {
    int fd = -1;
    wire::FrameReader reader;
    bool open = true;
};

}  // namespace

MasterServer::MasterServer(MasterConfig cfg, AppHooks& app) : cfg_(cfg), app_(app) {}

MasterServer::~MasterServer() {
    if (listen_fd_ >= 0) ::close(listen_fd_);
}

bool MasterServer::bind(const std::string& host, uint16_t port, std::string* err) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) {
        if (err) *err = std::string("socket: ") + std::strerror(errno);
        return false;
    }
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (host.empty() || host == "0.0.0.0") {
        addr.sin_addr.s_addr = INADDR_ANY;
    } else if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        if (err) *err = "listen host must be an IPv4 address, got '" + host + "'";
        return false;
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        if (err) *err = std::string("bind: ") + std::strerror(errno);
        return false;
    }
    if (::listen(listen_fd_, 64) != 0) {
        if (err) *err = std::string("listen: ") + std::strerror(errno);
        return false;
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    return true;
}

bool MasterServer::serve(RunReport* report, std::string* err) {
    Master master(cfg_, app_);
    std::map<uint64_t, Conn> conns;
    uint64_t next_peer = 1;
    const double start = mono_s();
    double next_tick = start;

    auto flush = [&](std::vector<Outbound>& out) {
        for (const Outbound& ob : out) {
            auto it = conns.find(ob.peer);
            if (it == conns.end() || !it->second.open) continue;
            if (!send_all(it->second.fd, wire::encode(ob.msg))) it->second.open = false;
        }
        out.clear();
    };

    std::vector<Outbound> out;
    master.begin(mono_s() - start, out);
    flush(out);

    std::vector<uint8_t> buf(64 * 1024);
    while (!master.finished() && !master.failed()) {
        std::vector<pollfd> fds;
        fds.push_back({listen_fd_, POLLIN, 0});
        std::vector<uint64_t> peer_of;
        peer_of.push_back(0);
        for (auto& [peer, conn] : conns)
            if (conn.open) {
                fds.push_back({conn.fd, POLLIN, 0});
                peer_of.push_back(peer);
            }

        double now = mono_s();
        int timeout_ms = static_cast<int>(std::max(0.0, (next_tick - now) * 1000.0)) + 1;
        int rc = ::poll(fds.data(), fds.size(), timeout_ms);
        if (rc < 0 && errno != EINTR) {
            if (err) *err = std::string("poll: ") + std::strerror(errno);
            return false;
        }

        now = mono_s();
        if (now >= next_tick) {
            master.on_tick(now - start, out);
            flush(out);
            while (next_tick <= now) next_tick += cfg_.heartbeat_s;
        }
        if (rc <= 0) continue;

        if (fds[0].revents & POLLIN) {
            int fd = ::accept(listen_fd_, nullptr, nullptr);
            if (fd >= 0) {
                int one = 1;
                ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
                Conn conn;
                conn.fd = fd;
                conns.emplace(next_peer++, std::move(conn));
            }
        }

        for (size_t i = 1; i < fds.size(); ++i) {
            if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            uint64_t peer = peer_of[i];
            Conn& conn = conns[peer];
            ssize_t n = ::recv(conn.fd, buf.data(), buf.size(), 0);
            if (n <= 0) {
                // silence; the dead sweep will requeue its work
                conn.open = false;
                ::close(conn.fd);
                conn.fd = -1;
                continue;
            }
            conn.reader.feed(std::span<const uint8_t>(buf.data(), static_cast<size_t>(n)));
            while (auto res = conn.reader.poll()) {
                if (std::holds_alternative<wire::DecodeError>(*res)) {
                    conn.open = false;  // protocol violation: drop the connection
                    ::close(conn.fd);
                    conn.fd = -1;
                    break;
                }
                master.on_message(mono_s() - start, peer, std::get<Message>(*res), out);
                flush(out);
            }
            if (master.finished() || master.failed()) break;
        }
    }

    // deliver trailing messages (the Shutdown broadcast)
    flush(out);
    for (auto& [peer, conn] : conns)
        if (conn.fd >= 0) ::close(conn.fd);

    if (master.failed()) {
        if (err) *err = master.failure();
        return false;
    }
    if (report) *report = master.report();
    return true;
}

int run_worker_socket(const std::string& host, uint16_t port, AppHooks& app, std::string* err) {
    int fd = connect_to(host, port, err);
    if (fd < 0) return 3;

    std::mutex write_mu;
    auto send_msg = [&](const Message& msg) {
        std::lock_guard<std::mutex> lock(write_mu);
        return send_all(fd, wire::encode(msg));
    };

    if (!send_msg(wire::Hello{})) {
        ::close(fd);
        if (err) *err = "failed to send hello";
        return 3;
    }

    uint64_t worker_id = 0;
    double heartbeat_s = 0;
    std::unique_ptr<WorkerContext> ctx;

    // heartbeat thread state
    std::mutex hb_mu;
    std::condition_variable hb_cv;
    bool stop_hb = false;
    std::thread hb_thread;

    auto stop_heartbeats = [&] {
        {
            std::lock_guard<std::mutex> lock(hb_mu);
            stop_hb = true;
        }
        hb_cv.notify_all();
        if (hb_thread.joinable()) hb_thread.join();
    };

    wire::FrameReader reader;
    std::vector<uint8_t> buf(64 * 1024);
    int exit_code = 3;
    std::string why = "connection lost";

    for (;;) {
        ssize_t n = ::recv(fd, buf.data(), buf.size(), 0);
        if (n <= 0) break;
        reader.feed(std::span<const uint8_t>(buf.data(), static_cast<size_t>(n)));

        bool done = false;
        while (auto res = reader.poll()) {
            if (std::holds_alternative<wire::DecodeError>(*res)) {
                why = std::string("protocol error: ") +
                      wire::to_string(std::get<wire::DecodeError>(*res));
                done = true;
                break;
            }
            const Message& msg = std::get<Message>(*res);

            if (const auto* init = std::get_if<wire::InitData>(&msg)) {
                ctx = app.unpack_init(init->blob);
                bool first = worker_id == 0;
                worker_id = init->worker_id;
                heartbeat_s = init->heartbeat_s;
                if (const char* ov = std::getenv("MW_HEARTBEAT_OVERRIDE_S"))
                    heartbeat_s = std::atof(ov);
                if (first && heartbeat_s > 0) {
                    hb_thread = std::thread([&, interval = heartbeat_s] {
                        std::unique_lock<std::mutex> lock(hb_mu);
                        while (!hb_cv.wait_for(lock, std::chrono::duration<double>(interval),
                                               [&] { return stop_hb; })) {
                            lock.unlock();
                            send_msg(wire::Heartbeat{worker_id, mono_s()});
                            lock.lock();
                        }
                    });
                }
                continue;
            }
            if (const auto* assign = std::get_if<wire::AssignTask>(&msg)) {
                ExecResult res2;
                try {
                    if (!ctx) throw std::runtime_error("task before init data");
                    res2 = app.execute_task(*ctx, assign->payload);
                } catch (const std::exception& e) {
                    res2.result = app_error_result(e.what());
                    res2.children.clear();
                }
                if (!send_msg(wire::TaskDone{assign->task_id, std::move(res2.result),
                                             std::move(res2.children)})) {
                    done = true;
                }
                continue;
            }
            if (std::holds_alternative<wire::Shutdown>(msg)) {
                exit_code = 0;
                done = true;
                break;
            }
            // Suspend/Resume/other: nothing for a socket worker to do
        }
        if (done) break;
    }

    stop_heartbeats();
    ::close(fd);
    if (exit_code != 0 && err) *err = why;
    return exit_code;
}

}  // namespace net
