#include "smartmars/component/system.hpp"

#include "smartmars/log.hpp"
#include "smartmars/tasks/completion.hpp"

namespace smartmars::component {

using patterns::CommObject;
using patterns::Message;
using patterns::Op;

// --- WiringTable -------------------------------------------------------------

void WiringTable::set(const PortRef& from, const PortRef& to) {
    std::lock_guard lk(mu_);
    wires_[from] = to;
}

void WiringTable::clear(const PortRef& from) {
    std::lock_guard lk(mu_);
    wires_.erase(from);
}

std::optional<PortRef> WiringTable::get(const PortRef& from) const {
    std::lock_guard lk(mu_);
    auto it = wires_.find(from);
    if (it == wires_.end()) return std::nullopt;
    return it->second;
}

void WiringTable::erase_instance(const std::string& instance) {
    std::lock_guard lk(mu_);
    std::erase_if(wires_, [&](const auto& w) { return w.first.instance == instance || w.second.instance == instance; });
}

std::map<PortRef, PortRef> WiringTable::entries() const {
    std::lock_guard lk(mu_);
    return wires_;
}

std::string control_address(const std::string& instance) { return instance + ".$control"; }

// --- System ------------------------------------------------------------------

/// Master end of one control connection: outstanding commands by correlation.
struct System::Link {
    std::mutex mu;
    std::uint64_t next = 1;
    std::map<std::uint64_t, tasks::Completion<CommObject>> pending;
    bool gone = false;

    void inbound(Message msg) {
        std::lock_guard lk(mu);
        if (msg.op == Op::ProviderGone || msg.op == Op::ChannelClose) {
            gone = true;
            for (auto& [id, c] : pending) c.fail(Error(ErrorCode::Disconnected, "component gone"));
            pending.clear();
            return;
        }
        auto it = pending.find(msg.correlation);
        if (it == pending.end()) return;
        if (msg.op == Op::ControlResult)
            it->second.complete(std::move(msg.payload));
        else if (msg.op == Op::ChannelReject)
            it->second.fail(patterns::reject_error(msg));
        pending.erase(it);
    }
};

System::System(std::shared_ptr<const patterns::TypeTable> types, std::shared_ptr<tasks::Clock> clock,
               std::shared_ptr<patterns::Transport> transport)
    : types_(types ? std::move(types) : std::make_shared<patterns::TypeTable>()),
      clock_(std::move(clock)),
      transport_(std::move(transport)) {}

System::~System() { shutdown(); }

std::shared_ptr<Component> System::add(const std::string& instance, model::ComponentModel model,
                                       const Configure& configure, std::size_t queue_depth) {
    std::lock_guard op(op_mu_);
    if (instance.empty() || instance.find('.') != std::string::npos)
        throw Error(ErrorCode::InvalidArgument, "bad instance name '" + instance + "'");
    {
        std::lock_guard lk(mu_);
        if (components_.count(instance)) throw Error(ErrorCode::InvalidArgument, "duplicate instance " + instance);
    }
    auto comp = Component::create(instance, std::move(model), types_, clock_, transport_, queue_depth);
    if (configure) configure(*comp);
    comp->automaton().start();
    std::vector<std::string> bound;
    try {
        for (auto& p : comp->provided_ports()) {
            std::string addr = PortRef{instance, p->name()}.address();
            transport_->bind(addr, p);
            bound.push_back(addr);
        }
        transport_->bind(control_address(instance), comp->control_endpoint());
        bound.push_back(control_address(instance));
    } catch (...) {
        for (auto& a : bound) transport_->unbind(a);
        throw;
    }
    Managed m;
    m.component = comp;
    m.link = std::make_shared<Link>();
    std::weak_ptr<Link> weak = m.link;
    auto required = control_spec();
    required.direction = model::Direction::Required;
    m.channel = transport_->open(control_address(instance), required, [weak](Message msg) {
        if (auto l = weak.lock()) l->inbound(std::move(msg));
    });
    {
        std::lock_guard lk(mu_);
        components_[instance] = m;
    }
    log()->debug("system: added {} ({})", instance, comp->model().name);
    return comp;
}

void System::remove(const std::string& instance) {
    std::lock_guard op(op_mu_);
    {
        std::lock_guard lk(mu_);
        if (!components_.count(instance)) throw Error(ErrorCode::UnknownEndpoint, instance);
    }
    remove_locked(instance);
}

void System::remove_locked(const std::string& instance) {
    Managed m;
    {
        std::lock_guard lk(mu_);
        auto it = components_.find(instance);
        if (it == components_.end()) return;
        m = std::move(it->second);
        components_.erase(it);
    }
    wiring_.erase_instance(instance);
    transport_->unbind(control_address(instance));
    for (auto& p : m.component->provided_ports()) transport_->unbind(PortRef{instance, p->name()}.address());
    if (m.channel) m.channel->close();
    m.component->stop();
    log()->debug("system: removed {}", instance);
}

void System::shutdown() {
    std::lock_guard op(op_mu_);
    for (const auto& name : instances()) remove_locked(name);
}

std::shared_ptr<Component> System::find(const std::string& instance) const {
    std::lock_guard lk(mu_);
    auto it = components_.find(instance);
    return it == components_.end() ? nullptr : it->second.component;
}

std::shared_ptr<Component> System::at(const std::string& instance) const {
    auto c = find(instance);
    if (!c) throw Error(ErrorCode::UnknownEndpoint, instance);
    return c;
}

std::vector<std::string> System::instances() const {
    std::lock_guard lk(mu_);
    std::vector<std::string> out;
    for (const auto& [name, m] : components_) out.push_back(name);
    return out;
}

System::Managed System::managed(const std::string& instance) const {
    std::lock_guard lk(mu_);
    auto it = components_.find(instance);
    if (it == components_.end()) throw Error(ErrorCode::UnknownEndpoint, instance);
    return it->second;
}

void System::command(const std::string& instance, Op op, const std::string& target, const std::string& argument,
                     patterns::Bytes value) {
    Managed m = managed(instance);
    tasks::Completion<CommObject> done;
    std::uint64_t corr;
    {
        std::lock_guard lk(m.link->mu);
        if (m.link->gone) throw Error(ErrorCode::Disconnected, instance);
        corr = m.link->next++;
        m.link->pending.emplace(corr, done);
    }
    CommObject cmd{std::string(patterns::builtin::kControl)};
    cmd.set("command", std::string(patterns::to_string(op)))
        .set("target", target)
        .set("argument", argument)
        .set("value", std::move(value));
    auto admission = m.channel->post(Message{op, patterns::Kind::Control, corr, std::move(cmd)});
    if (admission != patterns::Admission::Accepted) {
        std::lock_guard lk(m.link->mu);
        m.link->pending.erase(corr);
        throw patterns::admission_error(admission);
    }
    CommObject result = done.wait(*clock_);
    auto code = result.get_int("code");
    if (code != 0) throw Error(static_cast<ErrorCode>(code), result.get_string("message"));
}

void System::connect(const PortRef& from, const PortRef& to) {
    std::lock_guard op(op_mu_);
    auto client = at(from.instance);
    auto server = at(to.instance);
    const auto* req = client->model().find_port(from.port);
    if (!req || req->direction != model::Direction::Required)
        throw Error(ErrorCode::UnknownEndpoint, from.address() + " is not a required port");
    const auto* prov = server->model().find_port(to.port);
    if (!prov || prov->direction != model::Direction::Provided)
        throw Error(ErrorCode::UnknownEndpoint, to.address() + " is not a provided port");
    wiring_.clear(from);
    command(from.instance, Op::ControlConnect, from.port, to.address());
    wiring_.set(from, to);
}

void System::disconnect(const PortRef& from) {
    std::lock_guard op(op_mu_);
    auto client = at(from.instance);
    const auto* req = client->model().find_port(from.port);
    if (!req || req->direction != model::Direction::Required)
        throw Error(ErrorCode::UnknownEndpoint, from.address() + " is not a required port");
    wiring_.clear(from);
    command(from.instance, Op::ControlDisconnect, from.port);
}

void System::set_state(const std::string& instance, const std::string& state) {
    std::lock_guard op(op_mu_);
    command(instance, Op::ControlState, state);
}

void System::set_param(const std::string& instance, const std::string& key, const patterns::Value& value) {
    std::lock_guard op(op_mu_);
    auto comp = at(instance);
    const auto* decl = comp->model().find_param(key);
    if (!decl) throw Error(ErrorCode::UnknownKey, key);
    auto bytes = encode_param(value, decl->type, *types_);
    command(instance, Op::ControlParam, key, decl->type.to_string(), patterns::Bytes{std::move(bytes)});
}

}  // namespace smartmars::component
