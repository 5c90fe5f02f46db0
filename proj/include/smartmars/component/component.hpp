#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "smartmars/component/automaton.hpp"
#include "smartmars/component/params.hpp"
#include "smartmars/patterns/port.hpp"
#include "smartmars/patterns/transport.hpp"
#include "smartmars/tasks/executor.hpp"
#include "smartmars/tasks/task.hpp"

namespace smartmars::component {

/// Spec of the control endpoint every component serves next to its ports.
const model::ServicePortSpec& control_spec();

class ControlEndpoint;

/// Runtime instance of a component model: its ports, main-state automaton,
/// parameters, a handler executor and a control executor. Control commands
/// arrive as messages on the control endpoint and run on the control
/// executor, one at a time.
class Component : public std::enable_shared_from_this<Component> {
public:
    static std::shared_ptr<Component> create(std::string instance, model::ComponentModel model,
                                             std::shared_ptr<const patterns::TypeTable> types,
                                             std::shared_ptr<tasks::Clock> clock,
                                             std::shared_ptr<patterns::Transport> transport,
                                             std::size_t queue_depth = 16);
    ~Component();
    Component(const Component&) = delete;
    Component& operator=(const Component&) = delete;

    const std::string& instance() const { return instance_; }
    const model::ComponentModel& model() const { return model_; }

    /// Throws UnknownEndpoint.
    std::shared_ptr<patterns::Port> port(std::string_view name) const;
    /// Throws UnknownEndpoint if missing or of another port class.
    template <class P>
    std::shared_ptr<P> port_as(std::string_view name) const {
        auto p = std::dynamic_pointer_cast<P>(port(name));
        if (!p) throw Error(ErrorCode::UnknownEndpoint, instance_ + "." + std::string(name) + " has another kind");
        return p;
    }
    std::vector<std::shared_ptr<patterns::ProvidedPort>> provided_ports() const;
    std::vector<std::shared_ptr<patterns::RequiredPort>> required_ports() const;

    StateAutomaton& automaton() { return automaton_; }
    ParamSet& params() { return params_; }
    const std::shared_ptr<tasks::Executor>& executor() const { return executor_; }
    const std::shared_ptr<tasks::Executor>& control_executor() const { return control_; }
    const std::shared_ptr<tasks::Clock>& clock() const { return clock_; }
    std::shared_ptr<patterns::Provider> control_endpoint() const;

    /// Starts a task owned by this component; stop() stops it.
    tasks::TaskHandle spawn_task(tasks::PsmTask task, tasks::TaskBody body, tasks::Millis until = tasks::kNever);
    std::vector<tasks::TaskHandle> tasks() const;

    /// Runs one control command; throws the error the command fails with.
    void execute(patterns::Op op, const patterns::CommObject& command);

    /// Stops its tasks, shuts provided ports down, disconnects required ports
    /// and stops both executors. Idempotent.
    void stop();

private:
    Component(std::string instance, model::ComponentModel model, std::shared_ptr<const patterns::TypeTable> types,
              std::shared_ptr<tasks::Clock> clock, std::shared_ptr<patterns::Transport> transport,
              std::size_t queue_depth);

    std::string instance_;
    model::ComponentModel model_;
    std::shared_ptr<const patterns::TypeTable> types_;
    std::shared_ptr<tasks::Clock> clock_;
    std::shared_ptr<patterns::Transport> transport_;
    std::shared_ptr<tasks::Executor> executor_;
    std::shared_ptr<tasks::Executor> control_;
    std::map<std::string, std::shared_ptr<patterns::Port>, std::less<>> ports_;
    StateAutomaton automaton_;
    ParamSet params_;
    std::shared_ptr<ControlEndpoint> endpoint_;
    mutable std::mutex tasks_mu_;
    std::vector<tasks::TaskHandle> tasks_;
    bool stopping_ = false;
    std::once_flag stopped_;
};

}  // namespace smartmars::component
