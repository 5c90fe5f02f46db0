#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <type_traits>
#include <variant>
#include <vector>

#include "smartmars/error.hpp"
#include "smartmars/tasks/clock.hpp"

namespace smartmars::tasks {

class CancelScope;

namespace detail {

/// Shared state of one blocking rendezvous. Completed at most once, either
/// with a value (by the derived class) or with an Error.
class WaitState : public std::enable_shared_from_this<WaitState> {
public:
    virtual ~WaitState() = default;

    bool fail(Error e);
    bool done() const;

protected:
    /// Runs `set` under the lock if not yet done, wakes every waiter and
    /// re-counts parked participants. Returns false if already done.
    template <class F>
    bool finish(F&& set) {
        std::lock_guard lk(mu_);
        if (done_) return false;
        set();
        done_ = true;
        unpark_locked();
        return true;
    }

    /// Blocks until done. A deadline fails the state with Timeout once
    /// `clock` reaches it, stopping `clock` fails it with ClockStopped and the
    /// thread's CancelScope fails it with Disconnected.
    void await(Clock* clock, std::optional<Millis> deadline);
    void rethrow_locked() const;
    bool done_locked() const { return done_; }

    mutable std::mutex mu_;

private:
    void unpark_locked();

    std::condition_variable cv_;
    bool done_ = false;
    std::optional<Error> error_;
    ActivityMonitor* parked_on_ = nullptr;
    long parked_ = 0;
};

}  // namespace detail

/// One-shot result slot shared between a blocked caller and whoever resolves
/// the call (an answer, a timer, a disconnect). Copies share the same state.
template <class T>
class Completion {
    using Stored = std::conditional_t<std::is_void_v<T>, std::monostate, T>;

    struct State : detail::WaitState {
        std::optional<Stored> value;

        template <class U>
        bool set(U&& v) {
            return finish([&] { value.emplace(std::forward<U>(v)); });
        }
        Stored take(Clock* clock, std::optional<Millis> deadline) {
            await(clock, deadline);
            std::lock_guard lk(mu_);
            rethrow_locked();
            return *value;
        }
        std::optional<Stored> peek() {
            std::lock_guard lk(mu_);
            if (!value) {
                if (done_locked()) rethrow_locked();
                return std::nullopt;
            }
            return *value;
        }
    };

public:
    Completion() : s_(std::make_shared<State>()) {}

    template <class U = T>
        requires(!std::is_void_v<U>)
    bool complete(U value) {
        return s_->set(std::move(value));
    }
    template <class U = T>
        requires std::is_void_v<U>
    bool complete() {
        return s_->set(std::monostate{});
    }

    bool fail(Error e) { return s_->fail(std::move(e)); }
    bool done() const { return s_->done(); }

    /// Blocks until resolved; throws the failure, if any.
    T wait(Clock& clock, std::optional<Millis> deadline = std::nullopt) {
        if constexpr (std::is_void_v<T>)
            s_->take(&clock, deadline);
        else
            return s_->take(&clock, deadline);
    }
    T wait() {
        if constexpr (std::is_void_v<T>)
            s_->take(nullptr, std::nullopt);
        else
            return s_->take(nullptr, std::nullopt);
    }

    /// Resolved value, nullopt while pending; throws the failure once failed.
    std::optional<Stored> poll() const { return s_->peek(); }

private:
    std::shared_ptr<State> s_;
};

/// Cooperative cancellation for a thread of control: while bound, every
/// blocking wait the thread enters fails with Disconnected once cancelled.
class CancelScope {
public:
    void cancel();
    bool cancelled() const;

    static CancelScope* current();

    class Binding {
    public:
        explicit Binding(CancelScope& scope);
        ~Binding();
        Binding(const Binding&) = delete;
        Binding& operator=(const Binding&) = delete;

    private:
        CancelScope* previous_;
    };

private:
    friend class detail::WaitState;
    void add(const std::shared_ptr<detail::WaitState>& w);
    void remove(const detail::WaitState* w);

    mutable std::mutex mu_;
    bool cancelled_ = false;
    std::vector<std::weak_ptr<detail::WaitState>> waits_;
};

}  // namespace smartmars::tasks
