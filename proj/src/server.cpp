#include "evacsim/server.hpp"

#include "evacsim/protocol.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <csignal>
#include <chrono>
#include <cmath>
#include <deque>
#include <optional>
#include <thread>

namespace evacsim {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

struct SessionServer::Impl {
    GridMap map;
    SimConfig config;
    ServerOptions options;
    SessionManager sessions;
    net::io_context ioc{1};
    tcp::acceptor acceptor{ioc};
    std::thread thread;
    std::atomic<std::uint64_t> connections{0};
    std::optional<net::signal_set> signals;

    Impl(GridMap m, SimConfig c, ServerOptions o)
        : map(std::move(m)), config(std::move(c)), options(std::move(o)), sessions(options.log_path) {}

    void accept();
};

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, SessionServer::Impl& server)
        : ws_(std::move(socket)), timer_(ws_.get_executor()), server_(server) {
        period_ = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(server_.config.dt));
        state_every_ = std::max(1L, std::lround(1.0 / (server_.options.state_rate_hz * server_.config.dt)));
    }

    void run() {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
            if (!ec) self->read();
        });
    }

private:
    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->disconnected();
                return;
            }
            const std::string text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            self->handle(text);
            if (!self->closing_) self->read();
        });
    }

    void handle(const std::string& text) {
        protocol::ClientMessage msg;
        try {
            msg = protocol::parse_client(text);
        } catch (const protocol::ProtocolError& e) {
            send(protocol::encode_error(e.what()));
            return;
        }
        try {
            std::visit([this](const auto& m) { on_message(m); }, msg);
        } catch (const SessionError& e) {
            send(protocol::encode_error(e.what()));
        }
    }

    void on_message(const protocol::Hello& hello) {
        if (session_) {
            send(protocol::encode_error("session already created"));
            return;
        }
        SimConfig cfg = server_.config;
        cfg.seed = server_.config.seed + server_.connections++;
        session_ = server_.sessions.create_session(server_.map, cfg, hello.questionnaire, hello.player);
        spdlog::info("{} created (group {}, seed {})", *session_, group_name(server_.sessions.group(*session_)),
                     cfg.seed);
        send(protocol::encode_welcome(*session_, server_.sessions.group(*session_), server_.map, cfg.dt));
        send_state();
        next_tick_ = Clock::now() + period_;
        schedule();
    }

    void on_message(const protocol::Start&) {
        if (!session_) throw SessionError(SessionError::Kind::WrongPhase, "start before hello");
        server_.sessions.start_live(*session_);
        spdlog::info("{} live", *session_);
        send_state();
        ticks_since_state_ = 0;
        next_tick_ = Clock::now() + period_;
    }

    void on_message(const protocol::Input& in) {
        if (!session_) throw SessionError(SessionError::Kind::WrongPhase, "input before hello");
        if (finished_) return;
        server_.sessions.apply_input(*session_, in.input);
    }

    void on_message(const protocol::Bye&) {
        finish();
        closing_ = true;
        close_after_write_ = true;
        if (outbox_.empty()) close();
    }

    void schedule() {
        timer_.expires_at(next_tick_);
        timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
            if (!ec) self->on_timer();
        });
    }

    void on_timer() {
        if (finished_ || closing_) return;
        for (int caught_up = 0; Clock::now() >= next_tick_ && caught_up < 10; ++caught_up) {
            const bool done = server_.sessions.tick(*session_);
            next_tick_ += period_;
            if (++ticks_since_state_ >= state_every_ || done) {
                ticks_since_state_ = 0;
                send_state();
            }
            if (done) {
                finish();
                return;
            }
        }
        if (Clock::now() >= next_tick_ + 10 * period_) next_tick_ = Clock::now() + period_;  // badly behind
        schedule();
    }

    void send_state() { send(protocol::encode_state(server_.sessions.state(*session_))); }

    void finish() {
        if (!session_ || finished_) return;
        finished_ = true;
        timer_.cancel();
        const SessionRecord r = server_.sessions.finalize_session(*session_);
        spdlog::info("{} finished: {}", *session_, outcome_name(r.outcome));
        send(protocol::encode_end(r.outcome, r.player_egress_time));
    }

    void disconnected() {
        closing_ = true;
        timer_.cancel();
        if (session_ && !finished_) {
            finished_ = true;
            const SessionRecord r = server_.sessions.finalize_session(*session_);
            spdlog::info("{} disconnected: {}", *session_, outcome_name(r.outcome));
        }
    }

    void send(std::string text) {
        if (write_failed_) return;
        outbox_.push_back(std::move(text));
        if (outbox_.size() == 1) write();
    }

    void write() {
        ws_.text(true);
        ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->write_failed_ = true;
                self->outbox_.clear();
                return;
            }
            self->outbox_.pop_front();
            if (!self->outbox_.empty()) {
                self->write();
            } else if (self->close_after_write_) {
                self->close();
            }
        });
    }

    void close() {
        ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    net::steady_timer timer_;
    SessionServer::Impl& server_;
    std::optional<std::string> session_;
    std::deque<std::string> outbox_;
    Clock::duration period_{};
    Clock::time_point next_tick_{};
    long state_every_ = 1;
    long ticks_since_state_ = 0;
    bool finished_ = false;
    bool closing_ = false;
    bool close_after_write_ = false;
    bool write_failed_ = false;
};

}  // namespace

void SessionServer::Impl::accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) return;  // acceptor closed
        std::make_shared<Connection>(std::move(socket), *this)->run();
        accept();
    });
}

SessionServer::SessionServer(GridMap map, SimConfig config, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(map), std::move(config), std::move(options))) {
    impl_->config.validate();
}

SessionServer::~SessionServer() { stop(); }

std::uint16_t SessionServer::listen() {
    const tcp::endpoint endpoint(net::ip::make_address(impl_->options.address), impl_->options.port);
    impl_->acceptor.open(endpoint.protocol());
    impl_->acceptor.set_option(net::socket_base::reuse_address(true));
    impl_->acceptor.bind(endpoint);
    impl_->acceptor.listen(net::socket_base::max_listen_connections);
    impl_->accept();
    return impl_->acceptor.local_endpoint().port();
}

void SessionServer::run() { impl_->ioc.run(); }

void SessionServer::stop_on_signals() {
    impl_->signals.emplace(impl_->ioc, SIGINT, SIGTERM);
    impl_->signals->async_wait([this](beast::error_code ec, int) {
        if (ec) return;
        beast::error_code ignored;
        impl_->acceptor.close(ignored);
        impl_->ioc.stop();
    });
}

void SessionServer::start() {
    impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void SessionServer::stop() {
    if (!impl_) return;
    net::post(impl_->ioc, [this] {
        beast::error_code ec;
        impl_->acceptor.close(ec);
    });
    impl_->ioc.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
    for (const auto& id : impl_->sessions.session_ids())
        if (!impl_->sessions.finalized(id)) impl_->sessions.finalize_session(id);
}

SessionManager& SessionServer::sessions() { return impl_->sessions; }

}  // namespace evacsim
