#include <boost/asio/signal_set.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <iostream>

#include "btpilot/gateway/gateway.hpp"

namespace btp::gateway {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

void add_cors(http::response<http::string_body>& res) {
    res.set(http::field::access_control_allow_origin, "*");
    res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
    res.set(http::field::access_control_allow_headers, "Content-Type");
    res.set(http::field::access_control_max_age, "600");
}

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket&& socket, EventHub& hub) : ws_(std::move(socket)), hub_(hub) {}

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.set_option(websocket::stream_base::decorator([](websocket::response_type& res) {
            res.set(http::field::server, "btpilot");
        }));
        ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        std::weak_ptr<WsSession> weak = shared_from_this();
        auto exec = ws_.get_executor();
        sub_ = hub_.subscribe([weak, exec] {
            net::post(exec, [weak] {
                if (auto self = weak.lock()) self->pump();
            });
        });
        do_read();
        pump();
    }

    void do_read() {
        ws_.async_read(in_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            close();
            return;
        }
        // Client messages are ignored; the stream is server to client.
        in_.consume(in_.size());
        do_read();
    }

    void pump() {
        if (writing_ || closed_ || !sub_) return;
        auto frame = sub_->pop();
        if (!frame) return;
        writing_ = true;
        out_ = frame->dump();
        ws_.text(true);
        ws_.async_write(net::buffer(out_), beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        writing_ = false;
        if (ec) {
            close();
            return;
        }
        pump();
    }

    void close() {
        if (closed_) return;
        closed_ = true;
        if (sub_) hub_.unsubscribe(sub_);
        sub_.reset();
    }

    websocket::stream<beast::tcp_stream> ws_;
    EventHub& hub_;
    std::shared_ptr<Subscriber> sub_;
    beast::flat_buffer in_;
    std::string out_;
    bool writing_ = false;
    bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, GatewayCore& core) : stream_(std::move(socket)), core_(core) {}

    void run() {
        net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
    }

private:
    void do_read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec == http::error::end_of_stream) {
            stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
            return;
        }
        if (ec) return;
        if (websocket::is_upgrade(req_)) {
            if (req_.target() == "/api/events") {
                stream_.expires_never();
                std::make_shared<WsSession>(stream_.release_socket(), core_.events())->run(std::move(req_));
                return;
            }
        }
        HttpReply reply;
        try {
            reply = core_.handle(std::string(req_.method_string()), std::string(req_.target()), req_.body());
        } catch (const std::exception& e) {
            reply = {500, {{"error", e.what()}}};
        }
        auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(reply.status), req_.version());
        res->set(http::field::server, "btpilot");
        add_cors(*res);
        if (reply.status != 204) {
            res->set(http::field::content_type, "application/json");
            res->body() = reply.body.dump();
        }
        res->keep_alive(req_.keep_alive());
        res->prepare_payload();
        res_ = res;
        http::async_write(stream_, *res_, beast::bind_front_handler(&HttpSession::on_write, shared_from_this(), res_->need_eof()));
    }

    void on_write(bool close, beast::error_code ec, std::size_t) {
        if (ec) return;
        if (close) {
            stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
            return;
        }
        res_.reset();
        do_read();
    }

    beast::tcp_stream stream_;
    GatewayCore& core_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    std::shared_ptr<http::response<http::string_body>> res_;
};

class Listener : public std::enable_shared_from_this<Listener> {
public:
    Listener(net::io_context& ioc, tcp::endpoint ep, GatewayCore& core) : ioc_(ioc), acceptor_(net::make_strand(ioc)), core_(core) {
        acceptor_.open(ep.protocol());
        acceptor_.set_option(net::socket_base::reuse_address(true));
        acceptor_.bind(ep);
        acceptor_.listen(net::socket_base::max_listen_connections);
    }

    std::uint16_t port() const { return acceptor_.local_endpoint().port(); }
    void run() { do_accept(); }
    void close() {
        net::post(acceptor_.get_executor(), [self = shared_from_this()] {
            beast::error_code ec;
            self->acceptor_.close(ec);
        });
    }

private:
    void do_accept() {
        acceptor_.async_accept(net::make_strand(ioc_), beast::bind_front_handler(&Listener::on_accept, shared_from_this()));
    }

    void on_accept(beast::error_code ec, tcp::socket socket) {
        if (ec == net::error::operation_aborted) return;
        if (!ec) std::make_shared<HttpSession>(std::move(socket), core_)->run();
        if (acceptor_.is_open()) do_accept();
    }

    net::io_context& ioc_;
    tcp::acceptor acceptor_;
    GatewayCore& core_;
};

}  // namespace

struct Server::Impl {
    GatewayCore& core;
    std::string address;
    std::uint16_t port;
    int threads;
    net::io_context ioc;
    std::shared_ptr<Listener> listener;
    std::vector<std::thread> workers;
    std::mutex mu;
    std::condition_variable cv;
    bool stopped = false;

    Impl(GatewayCore& c, std::string a, std::uint16_t p, int t)
        : core(c), address(std::move(a)), port(p), threads(std::max(1, t)), ioc(threads) {}
};

Server::Server(GatewayCore& core, std::string address, std::uint16_t port, int threads)
    : impl_(std::make_unique<Impl>(core, std::move(address), port, threads)) {}

Server::~Server() { stop(); }

std::uint16_t Server::start() {
    auto ep = tcp::endpoint(net::ip::make_address(impl_->address), impl_->port);
    impl_->listener = std::make_shared<Listener>(impl_->ioc, ep, impl_->core);
    impl_->listener->run();
    for (int i = 0; i < impl_->threads; ++i) {
        impl_->workers.emplace_back([this] { impl_->ioc.run(); });
    }
    return impl_->listener->port();
}

void Server::stop() {
    {
        std::lock_guard lock(impl_->mu);
        if (impl_->stopped) return;
        impl_->stopped = true;
    }
    impl_->cv.notify_all();
    if (impl_->listener) impl_->listener->close();
    impl_->ioc.stop();
    for (auto& w : impl_->workers) {
        if (w.joinable()) w.join();
    }
}

void Server::wait() {
    net::io_context sig_ioc;
    net::signal_set signals(sig_ioc, SIGINT, SIGTERM);
    signals.async_wait([this](beast::error_code, int) {
        std::lock_guard lock(impl_->mu);
        impl_->stopped = true;
        impl_->cv.notify_all();
    });
    std::thread sig_thread([&] { sig_ioc.run(); });
    {
        std::unique_lock lock(impl_->mu);
        impl_->cv.wait(lock, [&] { return impl_->stopped; });
    }
    sig_ioc.stop();
    sig_thread.join();
    impl_->ioc.stop();
    for (auto& w : impl_->workers) {
        if (w.joinable()) w.join();
    }
}

}  // namespace btp::gateway
