#include "smartmars/patterns/push.hpp"

#include "smartmars/log.hpp"

namespace smartmars::patterns {

namespace {
bool timed(const model::ServicePortSpec& spec) { return spec.pattern == model::Pattern::PushTimed; }
}  // namespace

// --- PushClient --------------------------------------------------------------

Op PushClient::subscribe_op() const { return timed(spec_) ? Op::TimedSubscribe : Op::NewestSubscribe; }
Op PushClient::unsubscribe_op() const { return timed(spec_) ? Op::TimedUnsubscribe : Op::NewestUnsubscribe; }
Op PushClient::update_op() const { return timed(spec_) ? Op::TimedUpdate : Op::NewestUpdate; }

void PushClient::subscribe() {
    std::shared_ptr<Channel> ch;
    {
        std::lock_guard lk(mu_);
        ch = link_locked();
        subscribed_ = true;
    }
    Admission a = ch->post(Message{subscribe_op(), Kind::Request, 0, {}});
    if (a != Admission::Accepted) {
        {
            std::lock_guard lk(mu_);
            subscribed_ = false;
        }
        throw_admission(a);
    }
}

void PushClient::unsubscribe() {
    std::shared_ptr<Channel> ch;
    {
        std::lock_guard lk(mu_);
        subscribed_ = false;
        ch = channel_locked();
    }
    if (ch) ch->post(Message{unsubscribe_op(), Kind::Request, 0, {}});
}

bool PushClient::subscribed() const {
    std::lock_guard lk(mu_);
    return subscribed_;
}

void PushClient::on_connected(const std::shared_ptr<Channel>& channel) {
    {
        std::lock_guard lk(mu_);
        if (!subscribed_) return;
    }
    Admission a = channel->post(Message{subscribe_op(), Kind::Request, 0, {}});
    if (a != Admission::Accepted) log()->warn("{}: resubscribe not admitted", spec_.name);
}

std::optional<CommObject> PushClient::get_update(bool wait, std::optional<tasks::Millis> timeout) {
    std::optional<tasks::Millis> deadline;
    if (timeout) deadline = ctx_.clock->now() + *timeout;
    for (;;) {
        tasks::Completion<void> waiter;
        {
            std::lock_guard lk(mu_);
            link_locked();
            if (latest_seq_ > read_seq_) {
                read_seq_ = latest_seq_;
                return latest_;
            }
            if (!wait) return std::nullopt;
            std::erase_if(waiters_, [](const auto& w) { return w.done(); });
            waiters_.push_back(waiter);
        }
        waiter.wait(*ctx_.clock, deadline);
    }
}

void PushClient::fail_pending_locked(const Error& e) {
    for (auto& w : waiters_) w.fail(e);
    waiters_.clear();
    if (e.code() == ErrorCode::Disconnected) {
        latest_.reset();
        latest_seq_ = read_seq_ = 0;
    }
}

void PushClient::on_message_locked(Message& msg) {
    if (msg.op == Op::ChannelReject) {
        Error e = reject_error(msg);
        for (auto& w : waiters_) w.fail(e);
        waiters_.clear();
        return;
    }
    if (msg.op != update_op() || msg.correlation <= latest_seq_) return;
    if (msg.payload.type_name() != spec_.answer_type || object_mismatch(msg.payload, *ctx_.types)) {
        log()->warn("{}: dropped update of type {}", spec_.name, msg.payload.type_name());
        return;
    }
    latest_ = std::move(msg.payload);
    latest_seq_ = msg.correlation;
    count_delivery();
    for (auto& w : waiters_) w.complete();
    waiters_.clear();
}

// --- TimedTicket -------------------------------------------------------------

void TimedTicket::stop() {
    if (auto s = server_.lock()) s->stop_timed(run_);
}

bool TimedTicket::running() const {
    auto s = server_.lock();
    if (!s) return false;
    std::lock_guard lk(s->mu_);
    return s->timed_running_ && s->run_ == run_;
}

// --- PushServer --------------------------------------------------------------

PushServer::~PushServer() {
    if (timer_ && tick_clock_) tick_clock_->cancel(*timer_);
}

Op PushServer::update_op() const { return timed(spec_) ? Op::TimedUpdate : Op::NewestUpdate; }

void PushServer::publish(const CommObject& value) {
    require_type(value, spec_.answer_type);
    {
        std::lock_guard lk(mu_);
        current_ = value;
        if (timed(spec_)) return;
        ++seq_;
    }
    distribute(false);
}

std::optional<CommObject> PushServer::current() const {
    std::lock_guard lk(mu_);
    return current_;
}

std::size_t PushServer::subscribers() const {
    std::lock_guard lk(mu_);
    return subscribers_.size();
}

void PushServer::distribute(bool next_seq) {
    Message msg;
    std::vector<ConnectionId> targets;
    {
        std::lock_guard lk(mu_);
        if (!current_ || !active_) return;
        if (next_seq) ++seq_;
        msg = Message{update_op(), Kind::Update, seq_, *current_};
        targets.assign(subscribers_.begin(), subscribers_.end());
    }
    count_delivery();
    for (ConnectionId id : targets) reply(id, msg);
}

Admission PushServer::deliver(ConnectionId id, Message msg) {
    bool is_timed = timed(spec_);
    Op sub = is_timed ? Op::TimedSubscribe : Op::NewestSubscribe;
    Op unsub = is_timed ? Op::TimedUnsubscribe : Op::NewestUnsubscribe;
    if (msg.op == unsub) {
        std::lock_guard lk(mu_);
        subscribers_.erase(id);
        return Admission::Accepted;
    }
    if (msg.op != sub) return Admission::Malformed;
    if (!active_) return Admission::Deactivated;
    std::optional<Message> initial;
    {
        std::lock_guard lk(mu_);
        subscribers_.insert(id);
        if (!is_timed && current_ && seq_ > 0) initial = Message{update_op(), Kind::Update, seq_, *current_};
    }
    if (initial) reply(id, std::move(*initial));
    return Admission::Accepted;
}

void PushServer::on_deactivated() {
    std::vector<ConnectionId> targets;
    {
        std::lock_guard lk(mu_);
        targets.assign(subscribers_.begin(), subscribers_.end());
    }
    for (ConnectionId id : targets) reply(id, make_reject(Op::ChannelReject, 0, ErrorCode::ServiceDeactivated, spec_.name));
}

void PushServer::on_detached_locked(ConnectionId id) { subscribers_.erase(id); }

TimedTicket PushServer::start_timed() { return start_timed(ctx_.clock); }

TimedTicket PushServer::start_timed(std::shared_ptr<tasks::Clock> clock) {
    if (!timed(spec_) || !spec_.qos.cycle_ms || *spec_.qos.cycle_ms <= 0)
        throw Error(ErrorCode::NoCycleTime, spec_.name);
    std::lock_guard lk(mu_);
    if (timed_running_) throw Error(ErrorCode::AlreadyStarted, spec_.name);
    tick_clock_ = std::move(clock);
    const tasks::Millis period = *spec_.qos.cycle_ms;
    const tasks::Millis now = tick_clock_->now();
    timed_running_ = true;
    std::uint64_t run = ++run_;
    schedule_tick_locked((now / period + 1) * period, run);
    return TimedTicket(std::static_pointer_cast<PushServer>(shared_from_this()), run);
}

void PushServer::schedule_tick_locked(tasks::Millis at, std::uint64_t run) {
    std::weak_ptr<PushServer> weak = std::static_pointer_cast<PushServer>(shared_from_this());
    next_tick_ = at;
    try {
        timer_ = tick_clock_->schedule_at(at, [weak, run](bool fired) {
            if (auto self = weak.lock()) self->tick(run, fired);
        });
    } catch (const Error&) {
        timed_running_ = false;
        timer_.reset();
    }
}

void PushServer::tick(std::uint64_t run, bool fired) {
    {
        std::lock_guard lk(mu_);
        if (run != run_ || !timed_running_) return;
        timer_.reset();
        if (!fired) {
            timed_running_ = false;
            return;
        }
        schedule_tick_locked(next_tick_ + *spec_.qos.cycle_ms, run);
    }
    distribute(true);
}

void PushServer::stop_timed(std::uint64_t run) {
    std::optional<tasks::Clock::TimerId> timer;
    {
        std::lock_guard lk(mu_);
        if (run != run_ || !timed_running_) return;
        timed_running_ = false;
        timer.swap(timer_);
    }
    if (timer) tick_clock_->cancel(*timer);
}

}  // namespace smartmars::patterns
