#pragma once

#include "evacsim/engine.hpp"
#include "evacsim/scenario.hpp"
#include "evacsim/session.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace evacsim {

struct ServerOptions {
    std::string address = "127.0.0.1";
    std::uint16_t port = 8080;  // 0 picks a free port
    std::string log_path;       // tabular session log; empty disables it
    double state_rate_hz = 20.0;
};

/// WebSocket front end for SessionManager. Every connection gets its own
/// session, paced in wall-clock time on a shared single-threaded executor.
class SessionServer {
public:
    SessionServer(GridMap map, SimConfig config, ServerOptions options);
    ~SessionServer();
    SessionServer(const SessionServer&) = delete;
    SessionServer& operator=(const SessionServer&) = delete;

    /// Binds and listens; returns the bound port.
    std::uint16_t listen();
    /// Serves until stop() is called (or SIGINT/SIGTERM once stop_on_signals()).
    void run();
    void stop_on_signals();
    /// Starts serving on a background thread.
    void start();
    void stop();

    SessionManager& sessions();

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace evacsim
