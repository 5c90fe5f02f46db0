#include "smartmars/patterns/tcp_transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>

#include "smartmars/log.hpp"
#include "smartmars/patterns/codec.hpp"

namespace smartmars::patterns {

namespace detail {

/// One connected stream socket. Writes are serialized; shutdown wakes a
/// blocked reader without closing the descriptor under it.
class Socket {
public:
    explicit Socket(int fd) : fd_(fd) {
        int one = 1;
        ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    }
    ~Socket() { ::close(fd_); }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    bool write(const ByteBuffer& bytes) {
        std::lock_guard lk(write_mu_);
        if (down_) return false;
        std::size_t off = 0;
        while (off < bytes.size()) {
            ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) return false;
            off += static_cast<std::size_t>(n);
        }
        return true;
    }

    /// Next frame, or nullopt on end of stream, error or a malformed frame.
    std::optional<Message> read(FrameDecoder& decoder) {
        std::uint8_t buf[4096];
        for (;;) {
            try {
                if (auto m = decoder.next()) return m;
            } catch (const Error& e) {
                log()->warn("tcp: dropping connection: {}", e.what());
                return std::nullopt;
            }
            ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) return std::nullopt;
            decoder.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
        }
    }

    void set_receive_timeout(std::chrono::milliseconds t) {
        timeval tv{};
        tv.tv_sec = static_cast<time_t>(t.count() / 1000);
        tv.tv_usec = static_cast<suseconds_t>((t.count() % 1000) * 1000);
        ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    }

    void shutdown() {
        std::lock_guard lk(write_mu_);
        if (down_) return;
        down_ = true;
        ::shutdown(fd_, SHUT_RDWR);
    }

private:
    int fd_;
    std::mutex write_mu_;
    bool down_ = false;
};

}  // namespace detail

namespace {

using detail::Socket;

struct Endpoint {
    std::string host;
    std::string port;
    std::string name;
};

Endpoint parse_endpoint(const std::string& address) {
    auto slash = address.find('/');
    auto colon = address.rfind(':', slash);
    if (slash == std::string::npos || colon == std::string::npos || colon == 0 || slash == colon + 1 ||
        slash + 1 == address.size())
        throw Error(ErrorCode::InvalidArgument, "expected host:port/name, got " + address);
    return {address.substr(0, colon), address.substr(colon + 1, slash - colon - 1), address.substr(slash + 1)};
}

int connect_to(const std::string& host, const std::string& port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &found) != 0) return -1;
    int fd = -1;
    for (addrinfo* a = found; a; a = a->ai_next) {
        fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(found);
    return fd;
}

CommObject open_request(const std::string& provider, const model::ServicePortSpec& spec) {
    CommObject o{std::string(builtin::kOpen)};
    o.set("provider", provider);
    o.set("pattern", std::string(model::to_string(spec.pattern)));
    o.set("request", spec.request_type.value_or(""));
    o.set("answer", spec.answer_type.value_or(""));
    return o;
}

model::ServicePortSpec spec_from_open(const CommObject& o) {
    model::ServicePortSpec s;
    s.name = o.get_string("provider");
    auto pattern = model::parse_pattern(o.get_string("pattern"));
    if (!pattern) throw Error(ErrorCode::Incompatible, "pattern");
    s.pattern = *pattern;
    s.direction = model::Direction::Required;
    if (auto r = o.get_string("request"); !r.empty()) s.request_type = r;
    if (auto a = o.get_string("answer"); !a.empty()) s.answer_type = a;
    return s;
}

Message control_result(std::int64_t code, const std::string& text) {
    CommObject o{std::string(builtin::kControlResult)};
    o.set("code", code);
    o.set("message", text);
    return Message{Op::ControlResult, Kind::Control, 0, std::move(o)};
}

/// Client direction of a connection.
class TcpChannel final : public Channel {
public:
    TcpChannel(std::shared_ptr<Socket> sock, std::shared_ptr<const TypeTable> types)
        : sock_(std::move(sock)), types_(std::move(types)) {}
    ~TcpChannel() override { close(); }

    Admission post(Message msg) override {
        if (closed_) return Admission::Closed;
        ByteBuffer frame;
        try {
            frame = encode_frame(msg, *types_);
        } catch (const Error&) {
            return Admission::Malformed;
        }
        return sock_->write(frame) ? Admission::Accepted : Admission::Closed;
    }

    void close() override {
        if (closed_.exchange(true)) return;
        sock_->write(encode_frame(Message{Op::ChannelClose, Kind::Control, 0, {}}, *types_));
        sock_->shutdown();
    }

    bool closed() const { return closed_; }

private:
    std::shared_ptr<Socket> sock_;
    std::shared_ptr<const TypeTable> types_;
    std::atomic<bool> closed_{false};
};

/// Provider direction of a served connection.
class TcpReplier final : public Replier {
public:
    TcpReplier(std::shared_ptr<Socket> sock, std::shared_ptr<const TypeTable> types)
        : sock_(std::move(sock)), types_(std::move(types)) {}

    bool reply(Message msg) override {
        if (closed_) return false;
        ByteBuffer frame;
        try {
            frame = encode_frame(msg, *types_);
        } catch (const Error& e) {
            log()->warn("tcp: reply not encodable: {}", e.what());
            return true;
        }
        return sock_->write(frame);
    }
    void close() { closed_ = true; }

private:
    std::shared_ptr<Socket> sock_;
    std::shared_ptr<const TypeTable> types_;
    std::atomic<bool> closed_{false};
};

bool expects_reply(Op op) {
    return op == Op::Query || op == Op::EventActivateSingle || op == Op::EventActivateContinuous ||
           op == Op::NewestSubscribe || op == Op::TimedSubscribe;
}

}  // namespace

TcpTransport::TcpTransport(std::shared_ptr<const TypeTable> types) : types_(std::move(types)) {
    if (!types_) types_ = std::make_shared<TypeTable>();
}

TcpTransport::~TcpTransport() {
    std::vector<std::thread> threads;
    {
        std::lock_guard lk(mu_);
        closing_ = true;
        for (int fd : listeners_) ::shutdown(fd, SHUT_RDWR);
        for (auto& w : sockets_)
            if (auto s = w.lock()) s->shutdown();
        threads.swap(threads_);
    }
    for (auto& t : threads)
        if (t.joinable()) t.join();
    for (int fd : listeners_) ::close(fd);
}

void TcpTransport::start(std::function<void()> body) {
    std::lock_guard lk(mu_);
    if (closing_) return;
    threads_.emplace_back(std::move(body));
}

void TcpTransport::track(const std::shared_ptr<Socket>& sock) {
    std::lock_guard lk(mu_);
    std::erase_if(sockets_, [](const auto& w) { return w.expired(); });
    sockets_.push_back(sock);
    if (closing_) sock->shutdown();
}

std::uint16_t TcpTransport::listen(const std::string& host, std::uint16_t port) {
    int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) throw Error(ErrorCode::InvalidArgument, std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw Error(ErrorCode::InvalidArgument, "not an IPv4 address: " + host);
    }
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 16) != 0) {
        std::string why = std::strerror(errno);
        ::close(fd);
        throw Error(ErrorCode::InvalidArgument, "listen on " + host + ":" + std::to_string(port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    {
        std::lock_guard lk(mu_);
        listeners_.push_back(fd);
    }
    start([this, fd] { accept_loop(fd); });
    return ntohs(addr.sin_port);
}

void TcpTransport::accept_loop(int listen_fd) {
    for (;;) {
        int fd = ::accept4(listen_fd, nullptr, nullptr, SOCK_CLOEXEC);
        if (fd < 0) {
            if (errno == EINTR || errno == ECONNABORTED) continue;
            return;
        }
        auto sock = std::make_shared<Socket>(fd);
        track(sock);
        start([this, sock] { serve(sock); });
    }
}

void TcpTransport::serve(std::shared_ptr<Socket> sock) {
    FrameDecoder decoder(*types_);
    auto hello = sock->read(decoder);
    if (!hello || hello->op != Op::ChannelOpen || hello->payload.type_name() != builtin::kOpen) {
        sock->shutdown();
        return;
    }
    std::shared_ptr<Provider> provider;
    std::string refusal;
    try {
        model::ServicePortSpec wanted = spec_from_open(hello->payload);
        {
            std::lock_guard lk(mu_);
            auto it = providers_.find(wanted.name);
            if (it != providers_.end()) provider = it->second.lock();
        }
        if (!provider)
            refusal = "no provider " + wanted.name;
        else if (auto why = incompatibility(wanted, provider->spec()))
            refusal = *why;
    } catch (const Error& e) {
        refusal = e.detail().empty() ? e.what() : e.detail();
    }
    if (!refusal.empty()) {
        sock->write(encode_frame(make_reject(Op::ChannelReject, 0, ErrorCode::Incompatible, refusal), *types_));
        sock->shutdown();
        return;
    }
    sock->write(encode_frame(control_result(0, "ok"), *types_));

    ConnectionId id;
    {
        std::lock_guard lk(mu_);
        id = next_id_++;
    }
    auto replier = std::make_shared<TcpReplier>(sock, types_);
    provider->attach(id, replier);
    while (auto msg = sock->read(decoder)) {
        if (msg->op == Op::ChannelClose) break;
        Op op = msg->op;
        std::uint64_t corr = msg->correlation;
        Admission a = provider->deliver(id, std::move(*msg));
        if (a != Admission::Accepted && expects_reply(op)) {
            Error e = admission_error(a);
            replier->reply(make_reject(Op::ChannelReject, corr, e.code(), provider->spec().name));
        }
    }
    replier->close();
    provider->detach(id);
    sock->shutdown();
}

void TcpTransport::bind(const std::string& address, std::shared_ptr<Provider> provider) {
    std::lock_guard lk(mu_);
    auto& slot = providers_[address];
    if (!slot.expired()) throw Error(ErrorCode::InvalidArgument, "address already bound: " + address);
    slot = provider;
}

void TcpTransport::unbind(const std::string& address) {
    std::lock_guard lk(mu_);
    providers_.erase(address);
}

std::shared_ptr<Channel> TcpTransport::open(const std::string& address, const model::ServicePortSpec& required,
                                            InboundFn inbound) {
    Endpoint ep = parse_endpoint(address);
    int fd = connect_to(ep.host, ep.port);
    if (fd < 0) throw Error(ErrorCode::Incompatible, "cannot reach " + ep.host + ":" + ep.port);
    auto sock = std::make_shared<Socket>(fd);
    track(sock);

    auto decoder = std::make_shared<FrameDecoder>(*types_);
    sock->set_receive_timeout(handshake_timeout_);
    if (!sock->write(encode_frame(Message{Op::ChannelOpen, Kind::Control, 0, open_request(ep.name, required)}, *types_)))
        throw Error(ErrorCode::Incompatible, "connection refused by " + address);
    auto answer = sock->read(*decoder);
    if (!answer) {
        sock->shutdown();
        throw Error(ErrorCode::Incompatible, "no handshake answer from " + address);
    }
    if (answer->op == Op::ChannelReject) {
        sock->shutdown();
        throw reject_error(*answer);
    }
    if (answer->op != Op::ControlResult || answer->payload.get_int("code") != 0) {
        sock->shutdown();
        throw Error(ErrorCode::ProtocolError, "unexpected handshake answer from " + address);
    }
    sock->set_receive_timeout(std::chrono::milliseconds(0));

    auto channel = std::make_shared<TcpChannel>(sock, types_);
    std::weak_ptr<TcpChannel> weak = channel;
    start([sock, decoder, inbound = std::move(inbound), weak] {
        while (auto msg = sock->read(*decoder)) inbound(std::move(*msg));
        // The peer went away without the client closing first.
        auto ch = weak.lock();
        if (ch && !ch->closed()) inbound(Message{Op::ProviderGone, Kind::Control, 0, {}});
    });
    return channel;
}

}  // namespace smartmars::patterns
