#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "smartmars/error.hpp"
#include "smartmars/model/types.hpp"
#include "smartmars/patterns/comm_object.hpp"
#include "smartmars/patterns/message.hpp"
#include "smartmars/patterns/transport.hpp"
#include "smartmars/tasks/clock.hpp"
#include "smartmars/tasks/executor.hpp"

namespace smartmars::patterns {

struct PortContext {
    std::shared_ptr<const TypeTable> types;
    std::shared_ptr<tasks::Clock> clock;
    /// Runs provided-port handlers; unused by required ports.
    std::shared_ptr<tasks::Executor> executor;
    std::size_t queue_depth = 16;
};

/// State common to every service port: its declaration, activation and a
/// delivery counter.
class Port {
public:
    Port(model::ServicePortSpec spec, PortContext ctx);
    virtual ~Port() = default;
    Port(const Port&) = delete;
    Port& operator=(const Port&) = delete;

    const model::ServicePortSpec& port_spec() const { return spec_; }
    const std::string& name() const { return spec_.name; }
    bool active() const { return active_; }
    /// Deactivation fails pending calls with ServiceDeactivated.
    virtual void set_active(bool active) = 0;
    /// Messages handled (provided ports) or received (required ports).
    std::uint64_t deliveries() const { return deliveries_; }

protected:
    void count_delivery() { ++deliveries_; }
    void require_type(const CommObject& obj, const std::optional<std::string>& type) const;

    model::ServicePortSpec spec_;
    PortContext ctx_;
    std::atomic<bool> active_{true};
    std::atomic<std::uint64_t> deliveries_{0};
};

/// Client side of a pattern. Owns at most one channel to a provider; every
/// rewiring bumps a generation so late messages of an old wiring are dropped.
class RequiredPort : public Port, public std::enable_shared_from_this<RequiredPort> {
public:
    enum class State { Unwired, Wired, Disconnecting };

    using Port::Port;
    ~RequiredPort() override;

    /// Disconnects first, then opens a channel. On failure the port stays unwired.
    void connect(const ChannelOpener& open, std::string peer);
    /// Fails all pending calls with Disconnected; idempotent.
    void disconnect();
    void set_active(bool active) override;

    State state() const;
    std::optional<std::string> peer() const;

protected:
    /// Fails every pending wait; called with `mu_` held.
    virtual void fail_pending_locked(const Error& e) = 0;
    /// Handles a message of the current wiring; called with `mu_` held.
    virtual void on_message_locked(Message& msg) = 0;
    /// Runs after a successful connect, without the lock.
    virtual void on_connected(const std::shared_ptr<Channel>&) {}

    /// Channel of the current wiring. Throws ServiceDeactivated or NotWired.
    std::shared_ptr<Channel> link_locked() const;
    std::shared_ptr<Channel> channel_locked() const { return channel_; }
    /// Converts a non-accepted admission into the matching error.
    [[noreturn]] static void throw_admission(Admission a);
    static void check_admission(Admission a) {
        if (a != Admission::Accepted) throw_admission(a);
    }

    mutable std::mutex mu_;

private:
    void inbound(std::uint64_t generation, Message msg);
    void teardown(State during);

    State state_ = State::Unwired;
    std::shared_ptr<Channel> channel_;
    std::optional<std::string> peer_;
    std::uint64_t generation_ = 0;
};

/// Server side of a pattern, bound on a transport under an address.
class ProvidedPort : public Port, public Provider, public std::enable_shared_from_this<ProvidedPort> {
public:
    using Port::Port;

    const model::ServicePortSpec& spec() const override { return spec_; }
    void attach(ConnectionId id, std::shared_ptr<Replier> replier) override;
    void detach(ConnectionId id) override;
    void set_active(bool active) override;

    /// Tells every connected client the provider is gone and drops them.
    void shutdown();
    std::size_t connections() const;

protected:
    /// Rejects outstanding work on deactivation; called without the lock.
    virtual void on_deactivated() {}
    virtual void on_detached_locked(ConnectionId) {}

    bool reply(ConnectionId id, Message msg);
    std::map<ConnectionId, std::shared_ptr<Replier>> connections_locked() const { return conns_; }

    mutable std::mutex mu_;

private:
    std::map<ConnectionId, std::shared_ptr<Replier>> conns_;
};

}  // namespace smartmars::patterns
