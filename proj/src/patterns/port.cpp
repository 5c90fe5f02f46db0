#include "smartmars/patterns/port.hpp"

#include "smartmars/log.hpp"

namespace smartmars::patterns {

Port::Port(model::ServicePortSpec spec, PortContext ctx) : spec_(std::move(spec)), ctx_(std::move(ctx)) {
    if (!ctx_.types) ctx_.types = std::make_shared<TypeTable>();
}

void Port::require_type(const CommObject& obj, const std::optional<std::string>& type) const {
    if (!type) throw Error(ErrorCode::TypeMismatch, spec_.name + " carries no payload");
    require_conforms(obj, *type, *ctx_.types);
}

// --- RequiredPort ------------------------------------------------------------

RequiredPort::~RequiredPort() {
    std::shared_ptr<Channel> ch;
    {
        std::lock_guard lk(mu_);
        ch = std::move(channel_);
    }
    if (ch) ch->close();
}

void RequiredPort::connect(const ChannelOpener& open, std::string peer) {
    teardown(State::Disconnecting);
    std::uint64_t gen;
    {
        std::lock_guard lk(mu_);
        gen = ++generation_;
    }
    std::weak_ptr<RequiredPort> weak = weak_from_this();
    auto channel = open([weak, gen](Message msg) {
        if (auto self = weak.lock()) self->inbound(gen, std::move(msg));
    });
    {
        std::lock_guard lk(mu_);
        if (gen != generation_) {
            channel->close();
            throw Error(ErrorCode::Disconnected, "superseded by a concurrent rewiring");
        }
        channel_ = channel;
        peer_ = std::move(peer);
        state_ = State::Wired;
    }
    on_connected(channel);
}

void RequiredPort::disconnect() { teardown(State::Disconnecting); }

void RequiredPort::teardown(State during) {
    std::shared_ptr<Channel> ch;
    {
        std::lock_guard lk(mu_);
        ++generation_;
        ch = std::move(channel_);
        channel_.reset();
        state_ = ch ? during : State::Unwired;
        peer_.reset();
        fail_pending_locked(Error(ErrorCode::Disconnected));
    }
    if (ch) ch->close();
    std::lock_guard lk(mu_);
    if (state_ == State::Disconnecting) state_ = State::Unwired;
}

void RequiredPort::set_active(bool active) {
    std::lock_guard lk(mu_);
    active_ = active;
    if (!active) fail_pending_locked(Error(ErrorCode::ServiceDeactivated));
}

RequiredPort::State RequiredPort::state() const {
    std::lock_guard lk(mu_);
    return state_;
}

std::optional<std::string> RequiredPort::peer() const {
    std::lock_guard lk(mu_);
    return peer_;
}

std::shared_ptr<Channel> RequiredPort::link_locked() const {
    if (!active_) throw Error(ErrorCode::ServiceDeactivated, spec_.name);
    if (!channel_) throw Error(ErrorCode::NotWired, spec_.name);
    return channel_;
}

void RequiredPort::throw_admission(Admission a) { throw admission_error(a); }

void RequiredPort::inbound(std::uint64_t generation, Message msg) {
    std::shared_ptr<Channel> gone;
    {
        std::lock_guard lk(mu_);
        if (generation != generation_) return;
        if (msg.op == Op::ProviderGone || msg.op == Op::ChannelClose) {
            ++generation_;
            gone = std::move(channel_);
            channel_.reset();
            peer_.reset();
            state_ = State::Unwired;
            fail_pending_locked(Error(ErrorCode::Disconnected, "provider gone"));
        } else {
            try {
                on_message_locked(msg);
            } catch (const std::exception& e) {
                log()->warn("{}: dropped {} message: {}", spec_.name, to_string(msg.op), e.what());
            }
        }
    }
    if (gone) gone->close();
}

// --- ProvidedPort ------------------------------------------------------------

void ProvidedPort::attach(ConnectionId id, std::shared_ptr<Replier> replier) {
    std::lock_guard lk(mu_);
    conns_[id] = std::move(replier);
}

void ProvidedPort::detach(ConnectionId id) {
    std::lock_guard lk(mu_);
    conns_.erase(id);
    on_detached_locked(id);
}

void ProvidedPort::set_active(bool active) {
    bool was = active_.exchange(active);
    if (was && !active) on_deactivated();
}

void ProvidedPort::shutdown() {
    std::map<ConnectionId, std::shared_ptr<Replier>> conns;
    {
        std::lock_guard lk(mu_);
        conns.swap(conns_);
        for (const auto& [id, r] : conns) on_detached_locked(id);
    }
    for (const auto& [id, r] : conns) r->reply(Message{Op::ProviderGone, Kind::Control, 0, {}});
}

std::size_t ProvidedPort::connections() const {
    std::lock_guard lk(mu_);
    return conns_.size();
}

bool ProvidedPort::reply(ConnectionId id, Message msg) {
    std::shared_ptr<Replier> r;
    {
        std::lock_guard lk(mu_);
        auto it = conns_.find(id);
        if (it == conns_.end()) return false;
        r = it->second;
    }
    return r->reply(std::move(msg));
}

}  // namespace smartmars::patterns
