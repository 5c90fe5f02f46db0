#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "smartmars/component/system.hpp"
#include "smartmars/deploy/deploy.hpp"
#include "smartmars/model/types.hpp"
#include "smartmars/tasks/task.hpp"

namespace smartmars::scenario {

/// What behaviors of a running deployment share: the wiring master, the
/// clock and named counters that end up in the run report.
class RunContext {
public:
    RunContext(component::System& system, std::shared_ptr<tasks::Clock> clock)
        : system_(system), clock_(std::move(clock)) {}

    component::System& system() { return system_; }
    const std::shared_ptr<tasks::Clock>& clock() const { return clock_; }

    void count(const std::string& metric, std::int64_t n = 1);
    std::int64_t metric(const std::string& metric) const;
    std::map<std::string, std::int64_t> metrics() const;

private:
    component::System& system_;
    std::shared_ptr<tasks::Clock> clock_;
    mutable std::mutex mu_;
    std::map<std::string, std::int64_t> metrics_;
};

/// Code behind one component instance of a run.
class ComponentBehavior {
public:
    virtual ~ComponentBehavior() = default;
    /// Declares states, binds ports and registers handlers; runs before the
    /// component is bound on the transport.
    virtual void configure(component::Component& c, RunContext& ctx) = 0;
    /// Runs once every instance is created and wired, before any task.
    virtual void start(component::Component&, RunContext&) {}
    /// Body of the named task of the component model; empty if unknown.
    virtual tasks::TaskBody task(const std::string& name) = 0;
    /// Runs after the last instant of the run, before the tasks are stopped.
    virtual void finish(component::Component&, RunContext&) {}
};

using BehaviorFactory = std::function<std::unique_ptr<ComponentBehavior>()>;

/// Behaviors keyed by component model name.
class Registry {
public:
    /// Throws DuplicateRegistration.
    void add(const std::string& component, BehaviorFactory factory);
    /// Throws UnknownBehavior.
    const BehaviorFactory& lookup(const std::string& component) const;
    bool contains(const std::string& component) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, BehaviorFactory> factories_;
};

/// Raised when a deployment fails transformation or checks; nothing has
/// been instantiated.
class CheckFailed : public std::runtime_error {
public:
    explicit CheckFailed(std::vector<deploy::Issue> issues);
    const std::vector<deploy::Issue>& issues() const { return issues_; }

private:
    std::vector<deploy::Issue> issues_;
};

struct RunOptions {
    /// Run on a virtual clock up to this instant.
    std::optional<tasks::Millis> virtual_until;
    /// On a real clock: stop after this many milliseconds, or when `interrupt`
    /// becomes true, whichever comes first.
    std::optional<tasks::Millis> real_for;
    const std::atomic<bool>* interrupt = nullptr;
    /// Called with the live system once all tasks are running.
    std::function<void(component::System&, RunContext&)> on_started;
};

struct PortCounter {
    std::string instance;
    std::string port;
    model::Pattern pattern = model::Pattern::Send;
    model::Direction direction = model::Direction::Provided;
    std::uint64_t deliveries = 0;

    friend bool operator==(const PortCounter&, const PortCounter&) = default;
};

struct RunBundle {
    std::string clock;
    tasks::Millis end_time_ms = 0;
    /// Task names are `instance.task`.
    std::vector<tasks::RunReport> tasks;
    std::vector<PortCounter> ports;
    std::map<std::string, std::int64_t> metrics;
    /// `instance.task: message` for every task that ended by an exception.
    std::vector<std::string> failures;

    const PortCounter* port(const std::string& instance, const std::string& port) const;
    const tasks::RunReport* task(const std::string& name) const;
    /// Sum of the deliveries of every port of the pattern.
    std::uint64_t deliveries(model::Pattern pattern) const;
};

nlohmann::json to_json(const RunBundle& bundle);

/// Transforms and checks the deployment (CheckFailed), resolves every
/// behavior (UnknownBehavior), then instantiates, wires, starts and runs it.
/// An empty deployment returns at once. Requires exactly one of
/// `virtual_until` and `real_for`/`interrupt`.
RunBundle run_deployment(const model::ModelDocument& doc, const Registry& registry, const RunOptions& options);

}  // namespace smartmars::scenario
