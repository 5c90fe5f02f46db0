#pragma once

#include <functional>

#include "smartmars/patterns/port.hpp"

namespace smartmars::patterns {

/// One-way client. `send` returns once the provider admitted the message.
class SendClient final : public RequiredPort {
public:
    using RequiredPort::RequiredPort;

    /// Throws NotWired, TypeMismatch, ServiceDeactivated, QueueFull or Disconnected.
    void send(const CommObject& msg);

protected:
    void fail_pending_locked(const Error&) override {}
    void on_message_locked(Message&) override {}

private:
    std::uint64_t next_corr_ = 1;
};

class SendServer final : public ProvidedPort {
public:
    using Handler = std::function<void(const CommObject&)>;
    using ProvidedPort::ProvidedPort;

    /// Throws HandlerAlreadyRegistered.
    void register_handler(Handler handler);
    Admission deliver(ConnectionId id, Message msg) override;

private:
    Handler handler_;
    std::size_t queued_ = 0;
};

}  // namespace smartmars::patterns
