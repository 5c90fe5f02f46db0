#pragma once

#include <memory>
#include <set>
#include <vector>

#include "smartmars/patterns/port.hpp"
#include "smartmars/tasks/completion.hpp"

namespace smartmars::patterns {

/// Subscriber of a push newest or push timed service. Keeps only the latest
/// value (single-slot mailbox); values older than one already seen are dropped.
class PushClient final : public RequiredPort {
public:
    using RequiredPort::RequiredPort;

    /// The subscription survives rewiring and is renewed on every connect.
    void subscribe();
    void unsubscribe();
    bool subscribed() const;

    /// A value fresher than the last one read. With `wait` false, nullopt
    /// means no update; with `wait` true it blocks until one arrives (or the
    /// optional timeout elapses, throwing Timeout).
    std::optional<CommObject> get_update(bool wait, std::optional<tasks::Millis> timeout = std::nullopt);

protected:
    void fail_pending_locked(const Error& e) override;
    void on_message_locked(Message& msg) override;
    void on_connected(const std::shared_ptr<Channel>& channel) override;

private:
    Op subscribe_op() const;
    Op unsubscribe_op() const;
    Op update_op() const;

    bool subscribed_ = false;
    std::optional<CommObject> latest_;
    std::uint64_t latest_seq_ = 0;
    std::uint64_t read_seq_ = 0;
    std::vector<tasks::Completion<void>> waiters_;
};

class PushServer;

/// Handle of a running push timed cycle.
class TimedTicket {
public:
    TimedTicket() = default;
    void stop();
    bool running() const;

private:
    friend class PushServer;
    explicit TimedTicket(std::weak_ptr<PushServer> server, std::uint64_t run) : server_(std::move(server)), run_(run) {}
    std::weak_ptr<PushServer> server_;
    std::uint64_t run_ = 0;
};

/// Publisher of a push newest or push timed service.
class PushServer final : public ProvidedPort {
public:
    using ProvidedPort::ProvidedPort;
    ~PushServer() override;

    /// Push newest distributes immediately; push timed at the next tick.
    void publish(const CommObject& value);
    std::optional<CommObject> current() const;

    /// Starts distributing the current value at every multiple of the cycle
    /// time. Throws NoCycleTime or AlreadyStarted.
    TimedTicket start_timed();
    TimedTicket start_timed(std::shared_ptr<tasks::Clock> clock);

    std::size_t subscribers() const;

    Admission deliver(ConnectionId id, Message msg) override;

protected:
    void on_deactivated() override;
    void on_detached_locked(ConnectionId id) override;

private:
    friend class TimedTicket;
    void distribute(bool next_seq);
    void schedule_tick_locked(tasks::Millis at, std::uint64_t run);
    void tick(std::uint64_t run, bool fired);
    void stop_timed(std::uint64_t run);
    Op update_op() const;

    std::optional<CommObject> current_;
    std::uint64_t seq_ = 0;
    std::set<ConnectionId> subscribers_;

    std::shared_ptr<tasks::Clock> tick_clock_;
    std::uint64_t run_ = 0;
    bool timed_running_ = false;
    std::optional<tasks::Clock::TimerId> timer_;
    tasks::Millis next_tick_ = 0;
};

}  // namespace smartmars::patterns
