#include "smartmars/patterns/send.hpp"

#include "smartmars/log.hpp"

namespace smartmars::patterns {

void SendClient::send(const CommObject& msg) {
    require_type(msg, spec_.request_type);
    std::shared_ptr<Channel> ch;
    std::uint64_t corr;
    {
        std::lock_guard lk(mu_);
        ch = link_locked();
        corr = next_corr_++;
    }
    check_admission(ch->post(Message{Op::Send, Kind::Request, corr, msg}));
    count_delivery();
}

void SendServer::register_handler(Handler handler) {
    std::lock_guard lk(mu_);
    if (handler_) throw Error(ErrorCode::HandlerAlreadyRegistered, spec_.name);
    handler_ = std::move(handler);
}

Admission SendServer::deliver(ConnectionId, Message msg) {
    if (msg.op != Op::Send) return Admission::Malformed;
    if (!active_) return Admission::Deactivated;
    if (object_mismatch(msg.payload, *ctx_.types) || msg.payload.type_name() != spec_.request_type)
        return Admission::Malformed;
    {
        std::lock_guard lk(mu_);
        if (queued_ >= ctx_.queue_depth) return Admission::QueueFull;
        ++queued_;
    }
    auto self = std::static_pointer_cast<SendServer>(shared_from_this());
    bool posted = ctx_.executor->post([self, payload = std::move(msg.payload)] {
        Handler h;
        {
            std::lock_guard lk(self->mu_);
            --self->queued_;
            h = self->handler_;
        }
        if (!self->active_) return;
        if (!h) {
            log()->warn("{}: no send handler registered, message dropped", self->spec_.name);
            return;
        }
        self->count_delivery();
        try {
            h(payload);
        } catch (const std::exception& e) {
            log()->error("{}: send handler failed: {}", self->spec_.name, e.what());
        }
    });
    if (!posted) {
        std::lock_guard lk(mu_);
        --queued_;
        return Admission::Closed;
    }
    return Admission::Accepted;
}

}  // namespace smartmars::patterns
