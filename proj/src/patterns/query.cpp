#include "smartmars/patterns/query.hpp"

#include "smartmars/log.hpp"

namespace smartmars::patterns {

CommObject QueryClient::query(const CommObject& request, std::optional<model::TimeoutMs> timeout) {
    return *query_receive(query_async(request, timeout), true);
}

QueryId QueryClient::query_async(const CommObject& request, std::optional<model::TimeoutMs> timeout) {
    require_type(request, spec_.request_type);
    auto bound = timeout ? timeout->bound : spec_.qos.timeout.value_or(model::TimeoutMs::unbounded()).bound;
    std::shared_ptr<Channel> ch;
    QueryId id;
    {
        std::lock_guard lk(mu_);
        ch = link_locked();
        id = next_id_++;
        std::optional<tasks::Millis> deadline;
        if (bound) deadline = ctx_.clock->now() + *bound;
        pending_.emplace(id, Pending{{}, deadline});
    }
    Admission a = ch->post(Message{Op::Query, Kind::Request, id, request});
    if (a != Admission::Accepted) {
        {
            std::lock_guard lk(mu_);
            pending_.erase(id);
        }
        throw_admission(a);
    }
    return id;
}

std::optional<CommObject> QueryClient::query_receive(QueryId id, bool wait) {
    Pending p;
    {
        std::lock_guard lk(mu_);
        auto it = pending_.find(id);
        if (it == pending_.end()) throw Error(ErrorCode::UnknownId, "query " + std::to_string(id));
        p = it->second;
        if (!wait) {
            if (p.deadline && ctx_.clock->now() >= *p.deadline)
                p.result.fail(Error(ErrorCode::Timeout));
            std::optional<CommObject> ready;
            try {
                ready = p.result.poll();
            } catch (...) {
                pending_.erase(it);
                throw;
            }
            if (ready) pending_.erase(it);
            return ready;
        }
    }
    auto consume = [&] {
        std::lock_guard lk(mu_);
        pending_.erase(id);
    };
    try {
        CommObject answer = p.result.wait(*ctx_.clock, p.deadline);
        consume();
        return answer;
    } catch (...) {
        consume();
        throw;
    }
}

std::size_t QueryClient::pending() const {
    std::lock_guard lk(mu_);
    return pending_.size();
}

void QueryClient::fail_pending_locked(const Error& e) {
    for (auto& [id, p] : pending_) p.result.fail(e);
}

void QueryClient::on_message_locked(Message& msg) {
    auto it = pending_.find(msg.correlation);
    if (it == pending_.end()) return;
    if (msg.op == Op::ChannelReject) {
        it->second.result.fail(reject_error(msg));
        return;
    }
    if (msg.op != Op::Query || msg.kind != Kind::Answer) return;
    if (msg.payload.type_name() != spec_.answer_type || object_mismatch(msg.payload, *ctx_.types)) {
        it->second.result.fail(Error(ErrorCode::TypeMismatch, "answer of type " + msg.payload.type_name()));
        return;
    }
    if (it->second.result.complete(std::move(msg.payload))) count_delivery();
}

void QueryServer::register_handler(Handler handler) {
    std::lock_guard lk(mu_);
    if (handler_) throw Error(ErrorCode::HandlerAlreadyRegistered, spec_.name);
    handler_ = std::move(handler);
}

Admission QueryServer::deliver(ConnectionId id, Message msg) {
    if (msg.op != Op::Query || msg.kind != Kind::Request) return Admission::Malformed;
    if (!active_) return Admission::Deactivated;
    if (msg.payload.type_name() != spec_.request_type || object_mismatch(msg.payload, *ctx_.types))
        return Admission::Malformed;
    {
        std::lock_guard lk(mu_);
        if (queued_ >= ctx_.queue_depth) return Admission::QueueFull;
        ++queued_;
        outstanding_.emplace(id, msg.correlation);
    }
    auto self = std::static_pointer_cast<QueryServer>(shared_from_this());
    bool posted = ctx_.executor->post([self, id, corr = msg.correlation, payload = std::move(msg.payload)] {
        self->handle(id, corr, payload);
    });
    if (!posted) {
        std::lock_guard lk(mu_);
        --queued_;
        outstanding_.erase({id, msg.correlation});
        return Admission::Closed;
    }
    return Admission::Accepted;
}

void QueryServer::handle(ConnectionId id, std::uint64_t corr, const CommObject& request) {
    Handler h;
    {
        std::lock_guard lk(mu_);
        --queued_;
        if (!outstanding_.count({id, corr})) return;
        h = handler_;
    }
    if (!h) {
        log()->warn("{}: no query handler registered, request dropped", spec_.name);
        std::lock_guard lk(mu_);
        outstanding_.erase({id, corr});
        return;
    }
    count_delivery();
    std::optional<CommObject> answer;
    try {
        answer = h(request);
        require_type(*answer, spec_.answer_type);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Disconnected)
            log()->debug("{}: query handler interrupted: {}", spec_.name, e.what());
        else
            log()->error("{}: query handler failed: {}", spec_.name, e.what());
        answer.reset();
    } catch (const std::exception& e) {
        log()->error("{}: query handler failed: {}", spec_.name, e.what());
        answer.reset();
    }
    {
        std::lock_guard lk(mu_);
        if (!outstanding_.erase({id, corr})) return;
    }
    if (answer) reply(id, Message{Op::Query, Kind::Answer, corr, std::move(*answer)});
}

void QueryServer::on_deactivated() {
    std::set<std::pair<ConnectionId, std::uint64_t>> rejected;
    {
        std::lock_guard lk(mu_);
        rejected.swap(outstanding_);
    }
    for (const auto& [id, corr] : rejected)
        reply(id, make_reject(Op::ChannelReject, corr, ErrorCode::ServiceDeactivated, spec_.name));
}

void QueryServer::on_detached_locked(ConnectionId id) {
    std::erase_if(outstanding_, [id](const auto& entry) { return entry.first == id; });
}

}  // namespace smartmars::patterns
