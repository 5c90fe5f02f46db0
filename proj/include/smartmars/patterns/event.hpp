#pragma once

#include <deque>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "smartmars/patterns/port.hpp"
#include "smartmars/tasks/completion.hpp"

namespace smartmars::patterns {

enum class EventMode { Single, Continuous };
using ActivationId = std::uint64_t;

/// Event client. Each activation carries a parameter object; notifications
/// queue per activation until read.
class EventClient final : public RequiredPort {
public:
    using RequiredPort::RequiredPort;

    ActivationId activate(const CommObject& param, EventMode mode);
    /// Next notification of the activation. With `wait` true, blocks up to the
    /// port's timeout (Timeout). Throws UnknownId once deactivated or once a
    /// single activation's notification was read.
    std::optional<CommObject> get(ActivationId id, bool wait);
    void deactivate(ActivationId id);
    std::size_t activations() const;

protected:
    void fail_pending_locked(const Error& e) override;
    void on_message_locked(Message& msg) override;

private:
    struct Activation {
        EventMode mode;
        std::deque<CommObject> queue;
        bool finished = false;
        std::optional<Error> failure;
        std::vector<tasks::Completion<void>> waiters;
    };
    void wake(Activation& a);

    std::map<ActivationId, Activation> activations_;
    ActivationId next_id_ = 1;
};

/// Event server. The registered test decides, for each activation parameter
/// and new server state, whether the activation fires; the builder makes the
/// notification object.
class EventServer final : public ProvidedPort {
public:
    using Test = std::function<bool(const CommObject& param, const CommObject& state)>;
    using Builder = std::function<CommObject(const CommObject& param, const CommObject& state)>;
    using ProvidedPort::ProvidedPort;

    /// Throws HandlerAlreadyRegistered.
    void register_handler(Test test, Builder builder);
    /// Evaluates every activation against `state` on the executor.
    void put_state(CommObject state);
    std::size_t activations() const;

    Admission deliver(ConnectionId id, Message msg) override;

protected:
    void on_deactivated() override;
    void on_detached_locked(ConnectionId id) override;

private:
    struct Activation {
        CommObject param;
        EventMode mode;
    };
    void evaluate(const CommObject& state);

    Test test_;
    Builder builder_;
    std::map<std::pair<ConnectionId, ActivationId>, Activation> activations_;
};

}  // namespace smartmars::patterns
