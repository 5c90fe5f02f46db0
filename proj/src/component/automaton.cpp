#include "smartmars/component/automaton.hpp"

#include <stdexcept>

namespace smartmars::component {

StateAutomaton::StateAutomaton() : states_{std::string(kNeutral)}, current_(kNeutral) {}

void StateAutomaton::add_state(const std::string& name) {
    if (name.empty()) throw Error(ErrorCode::InvalidArgument, "empty state name");
    std::lock_guard lk(mu_);
    states_.insert(name);
}

void StateAutomaton::require_state_locked(const std::string& name) const {
    if (!states_.count(name)) throw Error(ErrorCode::UnknownState, name);
}

void StateAutomaton::bind(std::shared_ptr<patterns::Port> port, std::set<std::string> states) {
    bool active;
    {
        std::lock_guard lk(mu_);
        for (const auto& s : states) {
            require_state_locked(s);
            if (s == kNeutral) throw Error(ErrorCode::InvalidArgument, "ports cannot be bound to Neutral");
        }
        std::erase_if(bindings_, [&](const Binding& b) { return b.port.expired() || b.port.lock() == port; });
        active = states.count(current_) > 0;
        bindings_.push_back({port, std::move(states)});
    }
    port->set_active(active);
}

void StateAutomaton::on_entry(const std::string& state, Action action) {
    std::lock_guard lk(mu_);
    require_state_locked(state);
    entry_[state].push_back(std::move(action));
}

void StateAutomaton::on_exit(const std::string& state, Action action) {
    std::lock_guard lk(mu_);
    require_state_locked(state);
    exit_[state].push_back(std::move(action));
}

void StateAutomaton::run(const std::map<std::string, std::vector<Action>>& actions, const std::string& state) {
    std::vector<Action> todo;
    {
        std::lock_guard lk(mu_);
        auto it = actions.find(state);
        if (it != actions.end()) todo = it->second;
    }
    for (auto& a : todo) a();
}

void StateAutomaton::start() {
    if (transitioning_ == std::this_thread::get_id())
        throw std::logic_error("state actions cannot start a transition");
    std::lock_guard tl(transition_mu_);
    {
        std::lock_guard lk(mu_);
        if (started_) return;
        started_ = true;
    }
    transitioning_ = std::this_thread::get_id();
    run(entry_, std::string(kNeutral));
    transitioning_ = {};
}

void StateAutomaton::set_state(const std::string& target) {
    if (transitioning_ == std::this_thread::get_id())
        throw std::logic_error("state actions cannot start a transition");
    {
        std::lock_guard lk(mu_);
        require_state_locked(target);
    }
    start();
    std::lock_guard tl(transition_mu_);
    std::string from;
    {
        std::lock_guard lk(mu_);
        if (current_ == target) return;
        from = current_;
    }
    transitioning_ = std::this_thread::get_id();
    struct Reset {
        std::thread::id& t;
        ~Reset() { t = {}; }
    } reset{transitioning_};

    run(exit_, from);
    std::vector<std::pair<std::shared_ptr<patterns::Port>, bool>> changes;
    {
        std::lock_guard lk(mu_);
        current_ = target;
        for (const auto& b : bindings_)
            if (auto p = b.port.lock()) changes.emplace_back(p, b.states.count(target) > 0);
    }
    // Deactivate first so no call slips into a port that is about to close.
    for (auto& [p, on] : changes)
        if (!on) p->set_active(false);
    for (auto& [p, on] : changes)
        if (on) p->set_active(true);
    run(entry_, target);
}

std::string StateAutomaton::current() const {
    std::lock_guard lk(mu_);
    return current_;
}

std::vector<std::string> StateAutomaton::states() const {
    std::lock_guard lk(mu_);
    return {states_.begin(), states_.end()};
}

bool StateAutomaton::has_state(const std::string& name) const {
    std::lock_guard lk(mu_);
    return states_.count(name) > 0;
}

bool StateAutomaton::should_be_active(const patterns::Port& port) const {
    std::lock_guard lk(mu_);
    for (const auto& b : bindings_)
        if (auto p = b.port.lock(); p.get() == &port) return b.states.count(current_) > 0;
    return true;
}

}  // namespace smartmars::component
