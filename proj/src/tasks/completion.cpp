#include "smartmars/tasks/completion.hpp"

#include <algorithm>

namespace smartmars::tasks {

namespace detail {

bool WaitState::fail(Error e) {
    return finish([&] { error_.emplace(std::move(e)); });
}

bool WaitState::done() const {
    std::lock_guard lk(mu_);
    return done_;
}

void WaitState::unpark_locked() {
    if (parked_ > 0) {
        parked_on_->enter(parked_);
        parked_ = 0;
    }
    cv_.notify_all();
}

void WaitState::rethrow_locked() const {
    if (error_) throw *error_;
}

void WaitState::await(Clock* clock, std::optional<Millis> deadline) {
    if (done()) return;
    std::optional<Clock::TimerId> timer;
    if (clock) {
        if (deadline && *deadline <= clock->now()) {
            fail(Error(ErrorCode::Timeout));
        } else {
            // Unbounded waits still hold a timer so a stopping clock releases them.
            std::weak_ptr<WaitState> weak = weak_from_this();
            try {
                timer = clock->schedule_at(deadline.value_or(kNever), [weak](bool fired) {
                    if (auto s = weak.lock())
                        s->fail(fired ? Error(ErrorCode::Timeout) : Error(ErrorCode::ClockStopped));
                });
            } catch (const Error& e) {
                fail(e);
            }
        }
    }
    CancelScope* scope = CancelScope::current();
    if (scope) scope->add(shared_from_this());
    {
        std::unique_lock lk(mu_);
        if (!done_) {
            if (ActivityMonitor* mon = ActivityMonitor::current()) {
                mon->leave();
                parked_on_ = mon;
                ++parked_;
            }
            cv_.wait(lk, [&] { return done_; });
        }
    }
    if (scope) scope->remove(this);
    if (timer) clock->cancel(*timer);
}

}  // namespace detail

namespace {
thread_local CancelScope* t_scope = nullptr;
}

void CancelScope::cancel() {
    std::vector<std::weak_ptr<detail::WaitState>> waits;
    {
        std::lock_guard lk(mu_);
        cancelled_ = true;
        waits.swap(waits_);
    }
    for (auto& w : waits)
        if (auto s = w.lock()) s->fail(Error(ErrorCode::Disconnected, "cancelled"));
}

bool CancelScope::cancelled() const {
    std::lock_guard lk(mu_);
    return cancelled_;
}

CancelScope* CancelScope::current() { return t_scope; }

CancelScope::Binding::Binding(CancelScope& scope) : previous_(t_scope) { t_scope = &scope; }
CancelScope::Binding::~Binding() { t_scope = previous_; }

void CancelScope::add(const std::shared_ptr<detail::WaitState>& w) {
    {
        std::lock_guard lk(mu_);
        if (!cancelled_) {
            std::erase_if(waits_, [](const auto& weak) { return weak.expired(); });
            waits_.push_back(w);
            return;
        }
    }
    w->fail(Error(ErrorCode::Disconnected, "cancelled"));
}

void CancelScope::remove(const detail::WaitState* w) {
    std::lock_guard lk(mu_);
    std::erase_if(waits_, [w](const auto& weak) {
        auto s = weak.lock();
        return !s || s.get() == w;
    });
}

}  // namespace smartmars::tasks
