#pragma once

#include <functional>
#include <map>
#include <set>
#include <utility>

#include "smartmars/patterns/port.hpp"
#include "smartmars/tasks/completion.hpp"

namespace smartmars::patterns {

using QueryId = std::uint64_t;

/// Two-way request client with synchronous and asynchronous access.
class QueryClient final : public RequiredPort {
public:
    using RequiredPort::RequiredPort;

    /// Blocks until the answer, the timeout (the port's QoS unless given),
    /// a disconnect or a deactivation.
    CommObject query(const CommObject& request, std::optional<model::TimeoutMs> timeout = std::nullopt);
    QueryId query_async(const CommObject& request, std::optional<model::TimeoutMs> timeout = std::nullopt);
    /// nullopt means still pending (only when `wait` is false). A returned
    /// answer or error consumes the id; later calls throw UnknownId.
    std::optional<CommObject> query_receive(QueryId id, bool wait);

    std::size_t pending() const;

protected:
    void fail_pending_locked(const Error& e) override;
    void on_message_locked(Message& msg) override;

private:
    struct Pending {
        tasks::Completion<CommObject> result;
        std::optional<tasks::Millis> deadline;
    };
    std::map<QueryId, Pending> pending_;
    QueryId next_id_ = 1;
};

class QueryServer final : public ProvidedPort {
public:
    using Handler = std::function<CommObject(const CommObject&)>;
    using ProvidedPort::ProvidedPort;

    /// Throws HandlerAlreadyRegistered.
    void register_handler(Handler handler);
    Admission deliver(ConnectionId id, Message msg) override;

protected:
    void on_deactivated() override;
    void on_detached_locked(ConnectionId id) override;

private:
    void handle(ConnectionId id, std::uint64_t corr, const CommObject& request);

    Handler handler_;
    std::size_t queued_ = 0;
    std::set<std::pair<ConnectionId, std::uint64_t>> outstanding_;
};

}  // namespace smartmars::patterns
