#include "smartmars/tasks/executor.hpp"

#include "smartmars/log.hpp"

namespace smartmars::tasks {

Executor::Executor(std::string name, std::shared_ptr<Clock> clock)
    : name_(std::move(name)), clock_(std::move(clock)), monitor_(clock_->monitor()), worker_([this] { run(); }) {}

Executor::~Executor() { stop(); }

bool Executor::post(std::function<void()> job) {
    {
        std::lock_guard lk(mu_);
        if (stopping_) return false;
        if (!busy_) {
            busy_ = true;
            if (monitor_) monitor_->enter();
        }
        jobs_.push_back(std::move(job));
    }
    wake_.notify_one();
    return true;
}

void Executor::stop() {
    {
        std::lock_guard lk(mu_);
        if (!stopping_) {
            stopping_ = true;
            jobs_.clear();
            if (busy_ && !running_) {
                busy_ = false;
                if (monitor_) monitor_->leave();
            }
        }
    }
    wake_.notify_all();
    if (!on_executor_thread()) cancel_.cancel();
    if (worker_.joinable() && !on_executor_thread()) {
        std::lock_guard lk(join_mu_);
        if (worker_.joinable()) worker_.join();
    }
}

void Executor::run() {
    ActivityMonitor::bind_current(monitor_);
    CancelScope::Binding binding(cancel_);
    std::unique_lock lk(mu_);
    for (;;) {
        wake_.wait(lk, [&] { return stopping_ || !jobs_.empty(); });
        if (jobs_.empty()) return;
        auto job = std::move(jobs_.front());
        jobs_.pop_front();
        running_ = true;
        lk.unlock();
        try {
            job();
        } catch (const std::exception& e) {
            log()->error("executor {}: job failed: {}", name_, e.what());
        } catch (...) {
            log()->error("executor {}: job failed", name_);
        }
        job = nullptr;
        lk.lock();
        running_ = false;
        if (jobs_.empty() && busy_) {
            busy_ = false;
            if (monitor_) monitor_->leave();
        }
    }
}

}  // namespace smartmars::tasks
