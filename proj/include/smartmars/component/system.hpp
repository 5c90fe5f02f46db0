#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "smartmars/component/component.hpp"
#include "smartmars/patterns/transport.hpp"
#include "smartmars/tasks/clock.hpp"

namespace smartmars::component {

struct PortRef {
    std::string instance;
    std::string port;

    std::string address() const { return instance + "." + port; }
    friend auto operator<=>(const PortRef&, const PortRef&) = default;
};

/// Current wiring: each required port maps to the provided port it is
/// connected to, if any.
class WiringTable {
public:
    void set(const PortRef& from, const PortRef& to);
    void clear(const PortRef& from);
    std::optional<PortRef> get(const PortRef& from) const;
    /// Drops every entry from or to `instance`.
    void erase_instance(const std::string& instance);
    std::map<PortRef, PortRef> entries() const;

private:
    mutable std::mutex mu_;
    std::map<PortRef, PortRef> wires_;
};

/// Address under which a component's control endpoint is bound.
std::string control_address(const std::string& instance);

/// Wiring master of one system. Components are created through `add`; every
/// later management operation travels as a control message over the
/// transport and blocks until the component has answered. Operations are
/// serialized.
class System {
public:
    System(std::shared_ptr<const patterns::TypeTable> types, std::shared_ptr<tasks::Clock> clock,
           std::shared_ptr<patterns::Transport> transport);
    ~System();
    System(const System&) = delete;
    System& operator=(const System&) = delete;

    using Configure = std::function<void(Component&)>;

    /// Creates the instance, runs `configure` (states, handlers, hooks),
    /// starts its automaton in Neutral and binds its provided ports at
    /// "instance.port". Throws InvalidArgument for a taken name.
    std::shared_ptr<Component> add(const std::string& instance, model::ComponentModel model,
                                   const Configure& configure = {}, std::size_t queue_depth = 16);
    /// Unbinds and stops the instance; its clients see Disconnected.
    void remove(const std::string& instance);
    std::shared_ptr<Component> find(const std::string& instance) const;
    /// Throws UnknownEndpoint.
    std::shared_ptr<Component> at(const std::string& instance) const;
    std::vector<std::string> instances() const;

    /// Throws UnknownEndpoint for a missing instance or port (or a port of
    /// the wrong direction) and Incompatible when pattern or types differ.
    /// The wiring is visible only after the client port is wired.
    void connect(const PortRef& from, const PortRef& to);
    void disconnect(const PortRef& from);
    void set_state(const std::string& instance, const std::string& state);
    /// Throws UnknownKey or TypeMismatch.
    void set_param(const std::string& instance, const std::string& key, const patterns::Value& value);

    const WiringTable& wiring() const { return wiring_; }
    const std::shared_ptr<tasks::Clock>& clock() const { return clock_; }
    const std::shared_ptr<patterns::Transport>& transport() const { return transport_; }
    const std::shared_ptr<const patterns::TypeTable>& types() const { return types_; }

    /// Removes every instance.
    void shutdown();

private:
    struct Link;
    struct Managed {
        std::shared_ptr<Component> component;
        std::shared_ptr<Link> link;
        std::shared_ptr<patterns::Channel> channel;
    };

    Managed managed(const std::string& instance) const;
    void command(const std::string& instance, patterns::Op op, const std::string& target,
                 const std::string& argument = {}, patterns::Bytes value = {});
    void remove_locked(const std::string& instance);

    std::shared_ptr<const patterns::TypeTable> types_;
    std::shared_ptr<tasks::Clock> clock_;
    std::shared_ptr<patterns::Transport> transport_;
    std::mutex op_mu_;
    mutable std::mutex mu_;
    std::map<std::string, Managed> components_;
    WiringTable wiring_;
};

}  // namespace smartmars::component
