#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "smartmars/patterns/transport.hpp"

namespace smartmars::patterns {

namespace detail {
class Socket;
}

/// Transport over TCP with length-prefixed frames (see docs/wire-format.md).
///
/// A transport may listen for remote clients and serve the providers bound
/// to it; clients open channels to `host:port/name`. Each connection starts
/// with an Open handshake naming the provider and the required pattern and
/// types; an incompatible request is answered with a Reject and closed.
///
/// Admission verdicts of the remote provider travel back asynchronously as
/// Reject messages, so `Channel::post` reports only local failures. Runs on
/// the real clock; connection threads are not virtual-clock participants.
class TcpTransport final : public Transport {
public:
    explicit TcpTransport(std::shared_ptr<const TypeTable> types);
    ~TcpTransport() override;
    TcpTransport(const TcpTransport&) = delete;
    TcpTransport& operator=(const TcpTransport&) = delete;

    /// Starts accepting on `host:port`; port 0 picks a free one. Returns the port.
    std::uint16_t listen(const std::string& host = "127.0.0.1", std::uint16_t port = 0);

    void bind(const std::string& address, std::shared_ptr<Provider> provider) override;
    void unbind(const std::string& address) override;
    /// `address` is `host:port/name`. Throws Incompatible if the peer is
    /// unreachable, has no such provider or refuses the pattern or types.
    std::shared_ptr<Channel> open(const std::string& address, const model::ServicePortSpec& required,
                                  InboundFn inbound) override;

    void set_handshake_timeout(std::chrono::milliseconds t) { handshake_timeout_ = t; }

private:
    void accept_loop(int listen_fd);
    void serve(std::shared_ptr<detail::Socket> sock);
    void start(std::function<void()> body);
    void track(const std::shared_ptr<detail::Socket>& sock);

    std::shared_ptr<const TypeTable> types_;
    std::chrono::milliseconds handshake_timeout_{5000};
    std::mutex mu_;
    std::map<std::string, std::weak_ptr<Provider>> providers_;
    std::vector<std::weak_ptr<detail::Socket>> sockets_;
    std::vector<std::thread> threads_;
    std::vector<int> listeners_;
    ConnectionId next_id_ = 1;
    bool closing_ = false;
};

}  // namespace smartmars::patterns
