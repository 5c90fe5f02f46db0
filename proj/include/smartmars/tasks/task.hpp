#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include <json.hpp>

#include "smartmars/model/types.hpp"
#include "smartmars/tasks/clock.hpp"

namespace smartmars::tasks {

/// Platform-specific execution class of a task.
enum class TaskMapping { RealtimeTask, EmulatedPeriodicTask, FreeRunningTask };

std::string_view to_string(TaskMapping m);

struct PsmTask {
    model::TaskSpec spec;
    TaskMapping mapping = TaskMapping::FreeRunningTask;
    std::string platform;
    friend bool operator==(const PsmTask&, const PsmTask&) = default;
};

/// Realtime tasks need a realtime platform (MissingPlatformCapability
/// otherwise); other periodic tasks are emulated; aperiodic ones run free.
/// Throws InvalidTaskSpec for a spec the model validator would reject.
PsmTask map_task(const model::TaskSpec& spec, const model::PlatformDescription& platform);

struct RunReport {
    std::string task;
    std::int64_t iterations = 0;
    std::int64_t deadline_misses = 0;
    std::int64_t max_jitter_ms = 0;

    friend bool operator==(const RunReport&, const RunReport&) = default;
};

nlohmann::json to_json(const RunReport& r);
RunReport run_report_from_json(const nlohmann::json& j);

struct PeriodicLoop;

/// What a task body sees of its own execution.
class TaskContext {
public:
    TaskContext(Clock& clock, const std::atomic<bool>& stop) : clock_(clock), stop_(stop) {}

    Clock& clock() const { return clock_; }
    bool stop_requested() const { return stop_.load(); }
    /// Index of the current release, starting at 1; 0 for free-running bodies.
    std::int64_t iteration() const { return iteration_; }
    /// Release time of the current invocation.
    Millis release() const { return release_; }

private:
    friend struct PeriodicLoop;
    Clock& clock_;
    const std::atomic<bool>& stop_;
    std::int64_t iteration_ = 0;
    Millis release_ = 0;
};

using TaskBody = std::function<void(TaskContext&)>;

/// Invokes `body` at start+period, start+2*period, ... up to and including
/// the clock time `until` (kNever for no limit), where start is the clock
/// time of the call. An invocation still running at a release skips
/// that release and counts a deadline miss. Stops early, with the report so
/// far, when the calling thread's CancelScope is cancelled. Throws
/// ClockStopped, InvalidArgument for a free-running task or until <= 0.
RunReport run_periodic(const PsmTask& task, const TaskBody& body, Clock& clock, Millis until);

/// A task running on its own thread, which is a participant of the clock.
/// Periodic tasks follow run_periodic; a free-running body is invoked once
/// and is expected to loop until stop_requested().
class TaskHandle {
public:
    static TaskHandle spawn(std::shared_ptr<Clock> clock, PsmTask task, TaskBody body, Millis until = kNever);

    TaskHandle() = default;

    /// Requests cancellation, fails blocking waits inside the body with
    /// Disconnected and joins. Throws AlreadyStopped on the second call.
    void stop();
    /// Blocks until the task ends by itself.
    void join();
    bool running() const;
    const std::string& name() const;
    /// Totals so far; final once the task has ended.
    RunReport report() const;
    /// Message of the exception that ended the body, if any.
    std::string failure() const;

private:
    struct State;
    std::shared_ptr<State> s_;
};

}  // namespace smartmars::tasks
