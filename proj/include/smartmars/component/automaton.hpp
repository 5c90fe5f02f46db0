#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "smartmars/patterns/port.hpp"

namespace smartmars::component {

inline constexpr std::string_view kNeutral = "Neutral";

/// Flat main states of one component. Each bound port is active exactly in
/// the states of its binding set; unbound ports are always active and the
/// reserved Neutral state deactivates every bound port.
class StateAutomaton {
public:
    using Action = std::function<void()>;

    StateAutomaton();

    void add_state(const std::string& name);
    /// Throws UnknownState for undeclared states and InvalidArgument for
    /// Neutral. Takes effect for the current state at once.
    void bind(std::shared_ptr<patterns::Port> port, std::set<std::string> states);
    void on_entry(const std::string& state, Action action);
    void on_exit(const std::string& state, Action action);

    /// Runs Neutral's entry action; the first set_state does so implicitly.
    void start();
    /// Exit action of the current state, port (de)activation, then the entry
    /// action of `target`. A transition to the current state is a no-op.
    /// Throws UnknownState.
    void set_state(const std::string& target);

    std::string current() const;
    std::vector<std::string> states() const;
    bool has_state(const std::string& name) const;
    /// Whether `port` should accept calls in the current state.
    bool should_be_active(const patterns::Port& port) const;

private:
    struct Binding {
        std::weak_ptr<patterns::Port> port;
        std::set<std::string> states;
    };
    void require_state_locked(const std::string& name) const;
    void run(const std::map<std::string, std::vector<Action>>& actions, const std::string& state);

    mutable std::mutex mu_;
    std::mutex transition_mu_;
    std::thread::id transitioning_;
    std::set<std::string> states_;
    std::string current_;
    bool started_ = false;
    std::vector<Binding> bindings_;
    std::map<std::string, std::vector<Action>> entry_;
    std::map<std::string, std::vector<Action>> exit_;
};

}  // namespace smartmars::component
