#include "smartmars/patterns/event.hpp"

#include "smartmars/log.hpp"

namespace smartmars::patterns {

// --- EventClient -------------------------------------------------------------

ActivationId EventClient::activate(const CommObject& param, EventMode mode) {
    require_type(param, spec_.request_type);
    std::shared_ptr<Channel> ch;
    ActivationId id;
    {
        std::lock_guard lk(mu_);
        ch = link_locked();
        id = next_id_++;
        activations_.emplace(id, Activation{mode, {}, false, std::nullopt, {}});
    }
    Op op = mode == EventMode::Single ? Op::EventActivateSingle : Op::EventActivateContinuous;
    Admission a = ch->post(Message{op, Kind::Request, id, param});
    if (a != Admission::Accepted) {
        {
            std::lock_guard lk(mu_);
            activations_.erase(id);
        }
        throw_admission(a);
    }
    return id;
}

std::optional<CommObject> EventClient::get(ActivationId id, bool wait) {
    std::optional<tasks::Millis> deadline;
    auto bound = spec_.qos.timeout.value_or(model::TimeoutMs::unbounded()).bound;
    if (wait && bound) deadline = ctx_.clock->now() + *bound;
    for (;;) {
        tasks::Completion<void> waiter;
        {
            std::lock_guard lk(mu_);
            auto it = activations_.find(id);
            if (it == activations_.end()) throw Error(ErrorCode::UnknownId, "activation " + std::to_string(id));
            Activation& a = it->second;
            if (!a.queue.empty()) {
                CommObject n = std::move(a.queue.front());
                a.queue.pop_front();
                if (a.finished && a.queue.empty()) activations_.erase(it);
                return n;
            }
            if (a.failure) {
                Error e = *a.failure;
                activations_.erase(it);
                throw e;
            }
            if (a.finished) {
                activations_.erase(it);
                throw Error(ErrorCode::UnknownId, "activation " + std::to_string(id) + " already fired");
            }
            if (!wait) return std::nullopt;
            std::erase_if(a.waiters, [](const auto& w) { return w.done(); });
            a.waiters.push_back(waiter);
        }
        waiter.wait(*ctx_.clock, deadline);
    }
}

void EventClient::deactivate(ActivationId id) {
    std::shared_ptr<Channel> ch;
    {
        std::lock_guard lk(mu_);
        auto it = activations_.find(id);
        if (it == activations_.end()) throw Error(ErrorCode::UnknownId, "activation " + std::to_string(id));
        for (auto& w : it->second.waiters) w.fail(Error(ErrorCode::UnknownId, "activation deactivated"));
        activations_.erase(it);
        ch = channel_locked();
    }
    if (ch) ch->post(Message{Op::EventDeactivate, Kind::Request, id, {}});
}

std::size_t EventClient::activations() const {
    std::lock_guard lk(mu_);
    return activations_.size();
}

void EventClient::wake(Activation& a) {
    for (auto& w : a.waiters) w.complete();
    a.waiters.clear();
}

void EventClient::fail_pending_locked(const Error& e) {
    for (auto& [id, a] : activations_) {
        for (auto& w : a.waiters) w.fail(e);
        a.waiters.clear();
        if (!a.failure) a.failure = e;
    }
    if (e.code() == ErrorCode::Disconnected)
        std::erase_if(activations_, [](const auto& entry) { return entry.second.queue.empty(); });
}

void EventClient::on_message_locked(Message& msg) {
    auto it = activations_.find(msg.correlation);
    if (it == activations_.end()) return;
    Activation& a = it->second;
    if (msg.op == Op::ChannelReject) {
        a.failure = reject_error(msg);
        for (auto& w : a.waiters) w.fail(*a.failure);
        a.waiters.clear();
        return;
    }
    if (msg.op != Op::EventNotify || a.finished) return;
    if (msg.payload.type_name() != spec_.answer_type || object_mismatch(msg.payload, *ctx_.types)) {
        log()->warn("{}: dropped notification of type {}", spec_.name, msg.payload.type_name());
        return;
    }
    a.queue.push_back(std::move(msg.payload));
    if (a.mode == EventMode::Single) a.finished = true;
    count_delivery();
    wake(a);
}

// --- EventServer -------------------------------------------------------------

void EventServer::register_handler(Test test, Builder builder) {
    std::lock_guard lk(mu_);
    if (test_) throw Error(ErrorCode::HandlerAlreadyRegistered, spec_.name);
    test_ = std::move(test);
    builder_ = std::move(builder);
}

void EventServer::put_state(CommObject state) {
    auto self = std::static_pointer_cast<EventServer>(shared_from_this());
    ctx_.executor->post([self, state = std::move(state)] { self->evaluate(state); });
}

std::size_t EventServer::activations() const {
    std::lock_guard lk(mu_);
    return activations_.size();
}

void EventServer::evaluate(const CommObject& state) {
    if (!active_) return;
    Test test;
    Builder builder;
    std::vector<std::pair<std::pair<ConnectionId, ActivationId>, Activation>> snapshot;
    {
        std::lock_guard lk(mu_);
        test = test_;
        builder = builder_;
        snapshot.assign(activations_.begin(), activations_.end());
    }
    if (!test || !builder) return;
    for (const auto& [key, act] : snapshot) {
        std::optional<CommObject> note;
        try {
            if (!test(act.param, state)) continue;
            note = builder(act.param, state);
            require_type(*note, spec_.answer_type);
        } catch (const std::exception& e) {
            log()->error("{}: event test failed: {}", spec_.name, e.what());
            continue;
        }
        {
            std::lock_guard lk(mu_);
            auto it = activations_.find(key);
            if (it == activations_.end()) continue;
            if (it->second.mode == EventMode::Single) activations_.erase(it);
        }
        count_delivery();
        reply(key.first, Message{Op::EventNotify, Kind::Event, key.second, std::move(*note)});
    }
}

Admission EventServer::deliver(ConnectionId id, Message msg) {
    if (msg.op == Op::EventDeactivate) {
        std::lock_guard lk(mu_);
        activations_.erase({id, msg.correlation});
        return Admission::Accepted;
    }
    if (msg.op != Op::EventActivateSingle && msg.op != Op::EventActivateContinuous) return Admission::Malformed;
    if (!active_) return Admission::Deactivated;
    if (msg.payload.type_name() != spec_.request_type || object_mismatch(msg.payload, *ctx_.types))
        return Admission::Malformed;
    EventMode mode = msg.op == Op::EventActivateSingle ? EventMode::Single : EventMode::Continuous;
    std::lock_guard lk(mu_);
    activations_.insert_or_assign({id, msg.correlation}, Activation{std::move(msg.payload), mode});
    return Admission::Accepted;
}

void EventServer::on_deactivated() {
    std::map<std::pair<ConnectionId, ActivationId>, Activation> dropped;
    {
        std::lock_guard lk(mu_);
        dropped.swap(activations_);
    }
    for (const auto& [key, act] : dropped)
        reply(key.first, make_reject(Op::ChannelReject, key.second, ErrorCode::ServiceDeactivated, spec_.name));
}

void EventServer::on_detached_locked(ConnectionId id) {
    std::erase_if(activations_, [id](const auto& entry) { return entry.first.first == id; });
}

}  // namespace smartmars::patterns
