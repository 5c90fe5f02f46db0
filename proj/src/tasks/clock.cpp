#include "smartmars/tasks/clock.hpp"

#include <stdexcept>
#include <vector>

#include "smartmars/error.hpp"
#include "smartmars/log.hpp"
#include "smartmars/tasks/completion.hpp"

namespace smartmars::tasks {

namespace {
thread_local ActivityMonitor* t_monitor = nullptr;
}

void ActivityMonitor::enter(long n) {
    std::lock_guard lk(mu_);
    active_ += n;
}

void ActivityMonitor::leave(long n) {
    std::lock_guard lk(mu_);
    active_ -= n;
    if (active_ < 0) throw std::logic_error("activity monitor underflow");
    if (active_ == 0) idle_.notify_all();
}

void ActivityMonitor::wait_idle() {
    std::unique_lock lk(mu_);
    idle_.wait(lk, [&] { return active_ == 0; });
}

long ActivityMonitor::active() const {
    std::lock_guard lk(mu_);
    return active_;
}

ActivityMonitor* ActivityMonitor::current() { return t_monitor; }

ActivityMonitor* ActivityMonitor::bind_current(ActivityMonitor* monitor) {
    ActivityMonitor* prev = t_monitor;
    t_monitor = monitor;
    return prev;
}

void Clock::sleep_until(Millis t) {
    if (t <= now()) {
        if (stopped()) throw Error(ErrorCode::ClockStopped);
        return;
    }
    Completion<void> done;
    auto id = schedule_at(t, [done](bool fired) mutable {
        if (fired)
            done.complete();
        else
            done.fail(Error(ErrorCode::ClockStopped));
    });
    try {
        done.wait(*this);
    } catch (...) {
        cancel(id);
        throw;
    }
}

// --- VirtualClock ----------------------------------------------------------

VirtualClock::VirtualClock(Millis start) : now_(start) {}

VirtualClock::~VirtualClock() { stop(); }

Clock::TimerId VirtualClock::schedule_at(Millis at, TimerCallback cb) {
    std::lock_guard lk(mu_);
    if (stopped_) throw Error(ErrorCode::ClockStopped);
    TimerId id = next_id_++;
    timers_.emplace(Key{at, id}, std::move(cb));
    index_.emplace(id, at);
    return id;
}

bool VirtualClock::cancel(TimerId id) {
    std::lock_guard lk(mu_);
    auto it = index_.find(id);
    if (it == index_.end()) return false;
    timers_.erase(Key{it->second, id});
    index_.erase(it);
    return true;
}

void VirtualClock::stop() {
    std::map<Key, TimerCallback> flushed;
    {
        std::lock_guard lk(mu_);
        stopped_ = true;
        flushed.swap(timers_);
        index_.clear();
    }
    for (auto& [key, cb] : flushed) cb(false);
}

bool VirtualClock::stopped() const {
    std::lock_guard lk(mu_);
    return stopped_;
}

void VirtualClock::advance_to(Millis t) {
    if (ActivityMonitor::current() == &monitor_)
        throw std::logic_error("a participant thread cannot advance its own virtual clock");
    for (;;) {
        monitor_.wait_idle();
        TimerCallback cb;
        {
            std::lock_guard lk(mu_);
            if (timers_.empty() || timers_.begin()->first.at > t) {
                if (now_.load() < t) now_.store(t);
                break;
            }
            auto it = timers_.begin();
            if (it->first.at > now_.load()) now_.store(it->first.at);
            cb = std::move(it->second);
            index_.erase(it->first.id);
            timers_.erase(it);
        }
        cb(true);
    }
    monitor_.wait_idle();
}

std::size_t VirtualClock::pending_timers() const {
    std::lock_guard lk(mu_);
    return timers_.size();
}

// --- RealClock -------------------------------------------------------------

RealClock::RealClock() : origin_(std::chrono::steady_clock::now()), worker_([this] { run(); }) {}

RealClock::~RealClock() {
    stop();
    {
        std::lock_guard lk(mu_);
        exiting_ = true;
    }
    wake_.notify_all();
    worker_.join();
}

Millis RealClock::now() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - origin_).count();
}

Clock::TimerId RealClock::schedule_at(Millis at, TimerCallback cb) {
    TimerId id;
    {
        std::lock_guard lk(mu_);
        if (stopped_) throw Error(ErrorCode::ClockStopped);
        id = next_id_++;
        timers_.emplace(Key{at, id}, std::move(cb));
        index_.emplace(id, at);
    }
    wake_.notify_all();
    return id;
}

bool RealClock::cancel(TimerId id) {
    std::lock_guard lk(mu_);
    auto it = index_.find(id);
    if (it == index_.end()) return false;
    timers_.erase(Key{it->second, id});
    index_.erase(it);
    return true;
}

void RealClock::stop() {
    std::map<Key, TimerCallback> flushed;
    {
        std::lock_guard lk(mu_);
        stopped_ = true;
        flushed.swap(timers_);
        index_.clear();
    }
    wake_.notify_all();
    for (auto& [key, cb] : flushed) cb(false);
}

bool RealClock::stopped() const {
    std::lock_guard lk(mu_);
    return stopped_;
}

void RealClock::run() {
    std::unique_lock lk(mu_);
    while (!exiting_) {
        if (timers_.empty()) {
            wake_.wait(lk);
            continue;
        }
        auto first = timers_.begin();
        if (first->first.at == kNever) {
            wake_.wait(lk);
            continue;
        }
        auto due = origin_ + std::chrono::milliseconds(first->first.at);
        if (std::chrono::steady_clock::now() < due) {
            wake_.wait_until(lk, due);
            continue;
        }
        TimerCallback cb = std::move(first->second);
        index_.erase(first->first.id);
        timers_.erase(first);
        lk.unlock();
        cb(true);
        lk.lock();
    }
}

// --- Participant -----------------------------------------------------------

Participant::Participant(Clock& clock) : monitor_(clock.monitor()), previous_(nullptr) {
    if (monitor_) {
        monitor_->enter();
        previous_ = ActivityMonitor::bind_current(monitor_);
    }
}

Participant::~Participant() {
    if (monitor_) {
        ActivityMonitor::bind_current(previous_);
        monitor_->leave();
    }
}

std::thread start_participant(Clock& clock, std::function<void()> body) {
    ActivityMonitor* monitor = clock.monitor();
    if (monitor) monitor->enter();
    return std::thread([monitor, body = std::move(body)] {
        ActivityMonitor::bind_current(monitor);
        try {
            body();
        } catch (const std::exception& e) {
            log()->error("participant thread failed: {}", e.what());
        }
        ActivityMonitor::bind_current(nullptr);
        if (monitor) monitor->leave();
    });
}

}  // namespace smartmars::tasks
