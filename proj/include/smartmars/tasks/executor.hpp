#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "smartmars/tasks/clock.hpp"
#include "smartmars/tasks/completion.hpp"

namespace smartmars::tasks {

/// Single-threaded job queue owned by a component. Handlers posted here run
/// one at a time, in posting order, never on the caller's thread.
class Executor {
public:
    Executor(std::string name, std::shared_ptr<Clock> clock);
    ~Executor();
    Executor(const Executor&) = delete;
    Executor& operator=(const Executor&) = delete;

    /// False once stopped; the job is dropped.
    bool post(std::function<void()> job);
    /// Drops queued jobs, fails any blocking wait of the running job with
    /// Disconnected, waits for it and joins.
    void stop();

    bool on_executor_thread() const { return std::this_thread::get_id() == worker_.get_id(); }
    const std::string& name() const { return name_; }
    const std::shared_ptr<Clock>& clock() const { return clock_; }

private:
    void run();

    std::string name_;
    std::shared_ptr<Clock> clock_;
    ActivityMonitor* monitor_;
    CancelScope cancel_;
    std::mutex mu_;
    std::mutex join_mu_;
    std::condition_variable wake_;
    std::deque<std::function<void()>> jobs_;
    bool stopping_ = false;
    // Holds one unit on the monitor while there is work the worker can run.
    bool busy_ = false;
    bool running_ = false;
    std::thread worker_;
};

}  // namespace smartmars::tasks
