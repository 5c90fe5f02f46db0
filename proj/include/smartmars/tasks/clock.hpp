#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

namespace smartmars::tasks {

using Millis = std::int64_t;
/// A timer due at kNever only ever runs when its clock stops.
inline constexpr Millis kNever = std::numeric_limits<Millis>::max();

/// Counts runnable units of work (participant threads, queued executor jobs)
/// so a virtual clock only advances once everything started at the current
/// instant has either finished or parked in a blocking wait.
class ActivityMonitor {
public:
    void enter(long n = 1);
    void leave(long n = 1);
    void wait_idle();
    long active() const;

    /// Monitor the calling thread currently counts against, if any.
    static ActivityMonitor* current();
    /// Sets the calling thread's monitor and returns the previous one.
    static ActivityMonitor* bind_current(ActivityMonitor* monitor);

private:
    mutable std::mutex mu_;
    std::condition_variable idle_;
    long active_ = 0;
};

class Clock {
public:
    enum class Mode { Virtual, Real };
    using TimerId = std::uint64_t;
    /// `fired` is false when the timer is flushed by `stop()`.
    using TimerCallback = std::function<void(bool fired)>;

    virtual ~Clock() = default;

    virtual Mode mode() const = 0;
    virtual Millis now() const = 0;

    /// Runs `cb` once the clock reaches `at`; throws Error(ClockStopped) after stop().
    virtual TimerId schedule_at(Millis at, TimerCallback cb) = 0;
    /// True if the timer was still pending. Its callback is not invoked.
    virtual bool cancel(TimerId id) = 0;

    /// Flushes every pending timer with `fired == false`; later schedules throw.
    virtual void stop() = 0;
    virtual bool stopped() const = 0;

    /// Non-null for virtual clocks only.
    virtual ActivityMonitor* monitor() { return nullptr; }

    /// Blocks the caller until `t`; throws Error(ClockStopped) if the clock stops first.
    void sleep_until(Millis t);
    void sleep_for(Millis d) { sleep_until(now() + d); }
};

/// Time that moves only through `advance_to`. Timers due at the same instant
/// fire in scheduling order, one at a time, with the system run to quiescence
/// after each.
class VirtualClock final : public Clock {
public:
    explicit VirtualClock(Millis start = 0);
    ~VirtualClock() override;

    Mode mode() const override { return Mode::Virtual; }
    Millis now() const override { return now_.load(); }
    TimerId schedule_at(Millis at, TimerCallback cb) override;
    bool cancel(TimerId id) override;
    void stop() override;
    bool stopped() const override;
    ActivityMonitor* monitor() override { return &monitor_; }

    /// Fires every timer due up to `t`. Must not be called from a thread that
    /// counts as a participant of this clock.
    void advance_to(Millis t);
    void advance_by(Millis d) { advance_to(now() + d); }
    /// Waits until no participant is runnable.
    void settle() { monitor_.wait_idle(); }
    std::size_t pending_timers() const;

private:
    struct Key {
        Millis at;
        TimerId id;
        auto operator<=>(const Key&) const = default;
    };

    mutable std::mutex mu_;
    std::atomic<Millis> now_;
    std::map<Key, TimerCallback> timers_;
    std::map<TimerId, Millis> index_;
    TimerId next_id_ = 1;
    bool stopped_ = false;
    ActivityMonitor monitor_;
};

/// Wall-clock time in milliseconds since construction, with a timer thread.
class RealClock final : public Clock {
public:
    RealClock();
    ~RealClock() override;

    Mode mode() const override { return Mode::Real; }
    Millis now() const override;
    TimerId schedule_at(Millis at, TimerCallback cb) override;
    bool cancel(TimerId id) override;
    void stop() override;
    bool stopped() const override;

private:
    struct Key {
        Millis at;
        TimerId id;
        auto operator<=>(const Key&) const = default;
    };
    void run();

    const std::chrono::steady_clock::time_point origin_;
    mutable std::mutex mu_;
    std::condition_variable wake_;
    std::map<Key, TimerCallback> timers_;
    std::map<TimerId, Millis> index_;
    TimerId next_id_ = 1;
    bool stopped_ = false;
    bool exiting_ = false;
    std::thread worker_;
};

/// Registers the calling thread as runnable work on `clock` for its
/// lifetime. Threads that drive a virtual clock must not hold one.
class Participant {
public:
    explicit Participant(Clock& clock);
    ~Participant();
    Participant(const Participant&) = delete;
    Participant& operator=(const Participant&) = delete;

private:
    ActivityMonitor* monitor_;
    ActivityMonitor* previous_;
};

/// Starts a thread that counts as runnable work on `clock` from before it is
/// spawned until `body` returns, so a concurrent `settle()` cannot miss it.
std::thread start_participant(Clock& clock, std::function<void()> body);

}  // namespace smartmars::tasks
