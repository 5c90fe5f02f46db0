#include "smartmars/tasks/task.hpp"

#include <mutex>
#include <thread>

#include "smartmars/error.hpp"
#include "smartmars/log.hpp"
#include "smartmars/tasks/completion.hpp"

namespace smartmars::tasks {

std::string_view to_string(TaskMapping m) {
    switch (m) {
        case TaskMapping::RealtimeTask: return "RealtimeTask";
        case TaskMapping::EmulatedPeriodicTask: return "EmulatedPeriodicTask";
        case TaskMapping::FreeRunningTask: return "FreeRunningTask";
    }
    return "?";
}

PsmTask map_task(const model::TaskSpec& spec, const model::PlatformDescription& platform) {
    auto invalid = [&](const std::string& why) { return Error(ErrorCode::InvalidTaskSpec, spec.name + ": " + why); };
    if (spec.is_periodic && (!spec.period_ms || *spec.period_ms <= 0)) throw invalid("periodic task requires periodMs");
    if (spec.wcet_ms && *spec.wcet_ms <= 0) throw invalid("wcetMs must be positive");
    if (spec.is_realtime) {
        if (!spec.is_periodic) throw invalid("realtime task must be periodic");
        if (!spec.wcet_ms) throw invalid("realtime task requires wcetMs");
        if (*spec.wcet_ms > *spec.period_ms) throw invalid("wcetMs exceeds periodMs");
    }
    PsmTask t{spec, TaskMapping::FreeRunningTask, platform.name};
    if (spec.is_realtime) {
        if (!platform.supports_realtime)
            throw Error(ErrorCode::MissingPlatformCapability,
                        "task " + spec.name + " requires realtime but platform " + platform.name + " lacks it");
        t.mapping = TaskMapping::RealtimeTask;
    } else if (spec.is_periodic) {
        t.mapping = TaskMapping::EmulatedPeriodicTask;
    }
    return t;
}

nlohmann::json to_json(const RunReport& r) {
    return {{"task", r.task},
            {"iterations", r.iterations},
            {"deadlineMisses", r.deadline_misses},
            {"maxJitterMs", r.max_jitter_ms}};
}

RunReport run_report_from_json(const nlohmann::json& j) {
    RunReport r;
    r.task = j.at("task").get<std::string>();
    r.iterations = j.at("iterations").get<std::int64_t>();
    r.deadline_misses = j.at("deadlineMisses").get<std::int64_t>();
    r.max_jitter_ms = j.at("maxJitterMs").get<std::int64_t>();
    return r;
}

namespace {

bool cancelled(const TaskContext& ctx) {
    auto* scope = CancelScope::current();
    return ctx.stop_requested() || (scope && scope->cancelled());
}

}  // namespace

/// Shared by run_periodic and spawned tasks; `report` is updated under `mu`.
struct PeriodicLoop {
    static void run(const PsmTask& task, const TaskBody& body, Clock& clock, Millis until, TaskContext& ctx,
                    RunReport& report, std::mutex& mu) {
        if (task.mapping == TaskMapping::FreeRunningTask || !task.spec.period_ms)
            throw Error(ErrorCode::InvalidArgument, task.spec.name + " is not periodic");
        if (until <= 0) throw Error(ErrorCode::InvalidArgument, "until must be positive");
        const Millis period = *task.spec.period_ms;
        Millis release = clock.now() + period;
        std::int64_t k = 1;
        while (release <= until && !cancelled(ctx)) {
            try {
                clock.sleep_until(release);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::Disconnected && cancelled(ctx)) return;
                throw;
            }
            if (cancelled(ctx)) return;
            Millis start = clock.now();
            ctx.iteration_ = k;
            ctx.release_ = release;
            body(ctx);
            Millis end = clock.now();
            Millis next = release + period;
            std::int64_t missed = 0;
            while (next < end && next <= until) {
                ++missed;
                next += period;
            }
            {
                std::lock_guard lk(mu);
                ++report.iterations;
                report.deadline_misses += missed;
                report.max_jitter_ms = std::max(report.max_jitter_ms, start - release);
            }
            k += 1 + missed;
            release = next;
        }
    }
};

RunReport run_periodic(const PsmTask& task, const TaskBody& body, Clock& clock, Millis until) {
    std::atomic<bool> stop{false};
    TaskContext ctx(clock, stop);
    RunReport report;
    report.task = task.spec.name;
    std::mutex mu;
    PeriodicLoop::run(task, body, clock, until, ctx, report, mu);
    return report;
}

struct TaskHandle::State {
    std::shared_ptr<Clock> clock;
    PsmTask task;
    TaskBody body;
    Millis until = kNever;
    CancelScope scope;
    std::atomic<bool> stop{false};
    std::atomic<bool> finished{false};
    mutable std::mutex mu;
    std::mutex join_mu;
    bool stopped = false;
    RunReport report;
    std::string failure;
    std::thread thread;

    ~State() {
        if (!thread.joinable()) return;
        if (thread.get_id() == std::this_thread::get_id()) {
            thread.detach();
            return;
        }
        stop = true;
        scope.cancel();
        thread.join();
    }
};

TaskHandle TaskHandle::spawn(std::shared_ptr<Clock> clock, PsmTask task, TaskBody body, Millis until) {
    if (!clock) throw Error(ErrorCode::InvalidArgument, "no clock");
    TaskHandle h;
    h.s_ = std::make_shared<State>();
    auto s = h.s_;
    s->clock = std::move(clock);
    s->task = std::move(task);
    s->body = std::move(body);
    s->until = until;
    s->report.task = s->task.spec.name;
    s->thread = start_participant(*s->clock, [s] {
        CancelScope::Binding binding(s->scope);
        TaskContext ctx(*s->clock, s->stop);
        try {
            if (s->task.mapping == TaskMapping::FreeRunningTask)
                s->body(ctx);
            else
                PeriodicLoop::run(s->task, s->body, *s->clock, s->until, ctx, s->report, s->mu);
        } catch (const Error& e) {
            if (!(e.code() == ErrorCode::Disconnected && cancelled(ctx))) {
                std::lock_guard lk(s->mu);
                s->failure = e.what();
            }
            if (e.code() == ErrorCode::ClockStopped)
                log()->debug("task {}: clock stopped", s->task.spec.name);
            else if (!cancelled(ctx))
                log()->error("task {} ended: {}", s->task.spec.name, e.what());
        } catch (const std::exception& e) {
            std::lock_guard lk(s->mu);
            s->failure = e.what();
            log()->error("task {} ended: {}", s->task.spec.name, e.what());
        }
        s->finished = true;
    });
    return h;
}

void TaskHandle::stop() {
    if (!s_) throw Error(ErrorCode::InvalidArgument, "empty task handle");
    {
        std::lock_guard lk(s_->mu);
        if (s_->stopped) throw Error(ErrorCode::AlreadyStopped, s_->task.spec.name);
        s_->stopped = true;
    }
    s_->stop = true;
    s_->scope.cancel();
    join();
}

void TaskHandle::join() {
    if (!s_) return;
    std::lock_guard lk(s_->join_mu);
    if (s_->thread.joinable() && s_->thread.get_id() != std::this_thread::get_id()) s_->thread.join();
}

bool TaskHandle::running() const { return s_ && !s_->finished; }

const std::string& TaskHandle::name() const {
    static const std::string empty;
    return s_ ? s_->task.spec.name : empty;
}

RunReport TaskHandle::report() const {
    if (!s_) return {};
    std::lock_guard lk(s_->mu);
    return s_->report;
}

std::string TaskHandle::failure() const {
    if (!s_) return {};
    std::lock_guard lk(s_->mu);
    return s_->failure;
}

}  // namespace smartmars::tasks
