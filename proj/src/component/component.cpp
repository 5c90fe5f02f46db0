#include "smartmars/component/component.hpp"

#include "smartmars/log.hpp"
#include "smartmars/patterns/event.hpp"
#include "smartmars/patterns/push.hpp"
#include "smartmars/patterns/query.hpp"
#include "smartmars/patterns/send.hpp"

namespace smartmars::component {

using patterns::CommObject;
using patterns::Message;
using patterns::Op;

const model::ServicePortSpec& control_spec() {
    static const model::ServicePortSpec spec{"control",
                                             model::Pattern::Query,
                                             model::Direction::Provided,
                                             std::string(patterns::builtin::kControl),
                                             std::string(patterns::builtin::kControlResult),
                                             {}};
    return spec;
}

/// Provider side of the control endpoint: accepts control commands and
/// answers each with a ControlResult once the control executor has run it.
class ControlEndpoint final : public patterns::Provider, public std::enable_shared_from_this<ControlEndpoint> {
public:
    ControlEndpoint(std::weak_ptr<Component> owner, std::shared_ptr<tasks::Executor> control)
        : owner_(std::move(owner)), control_(std::move(control)) {}

    const model::ServicePortSpec& spec() const override { return control_spec(); }

    void attach(patterns::ConnectionId id, std::shared_ptr<patterns::Replier> replier) override {
        std::lock_guard lk(mu_);
        if (!closed_) conns_[id] = std::move(replier);
    }
    void detach(patterns::ConnectionId id) override {
        std::lock_guard lk(mu_);
        conns_.erase(id);
    }

    patterns::Admission deliver(patterns::ConnectionId id, Message msg) override {
        auto op = static_cast<std::uint8_t>(msg.op);
        if (msg.kind != patterns::Kind::Control || op < 0x70 || op > 0x73 ||
            msg.payload.type_name() != patterns::builtin::kControl)
            return patterns::Admission::Malformed;
        {
            std::lock_guard lk(mu_);
            if (closed_) return patterns::Admission::Closed;
        }
        bool posted = control_->post([this, self = shared_from_this(), id, msg = std::move(msg)] {
            std::int64_t code = 0;
            std::string text = "ok";
            try {
                auto owner = owner_.lock();
                if (!owner) throw Error(ErrorCode::Disconnected, "component gone");
                owner->execute(msg.op, msg.payload);
            } catch (const Error& e) {
                code = static_cast<std::int64_t>(e.code());
                text = e.detail();
            } catch (const std::exception& e) {
                code = static_cast<std::int64_t>(ErrorCode::InvalidArgument);
                text = e.what();
            }
            CommObject result{std::string(patterns::builtin::kControlResult)};
            result.set("code", code).set("message", text);
            std::shared_ptr<patterns::Replier> r;
            {
                std::lock_guard lk(mu_);
                auto it = conns_.find(id);
                if (it != conns_.end()) r = it->second;
            }
            if (r) r->reply(Message{Op::ControlResult, patterns::Kind::Control, msg.correlation, std::move(result)});
        });
        return posted ? patterns::Admission::Accepted : patterns::Admission::Closed;
    }

    void shutdown() {
        std::map<patterns::ConnectionId, std::shared_ptr<patterns::Replier>> conns;
        {
            std::lock_guard lk(mu_);
            closed_ = true;
            conns.swap(conns_);
        }
        for (auto& [id, r] : conns) r->reply(Message{Op::ProviderGone, patterns::Kind::Control, 0, {}});
    }

private:
    std::weak_ptr<Component> owner_;
    std::shared_ptr<tasks::Executor> control_;
    std::mutex mu_;
    bool closed_ = false;
    std::map<patterns::ConnectionId, std::shared_ptr<patterns::Replier>> conns_;
};

namespace {

std::shared_ptr<patterns::Port> make_port(const model::ServicePortSpec& spec, const patterns::PortContext& ctx) {
    using model::Direction;
    using model::Pattern;
    bool provided = spec.direction == Direction::Provided;
    switch (spec.pattern) {
        case Pattern::Send:
            if (provided) return std::make_shared<patterns::SendServer>(spec, ctx);
            return std::make_shared<patterns::SendClient>(spec, ctx);
        case Pattern::Query:
            if (provided) return std::make_shared<patterns::QueryServer>(spec, ctx);
            return std::make_shared<patterns::QueryClient>(spec, ctx);
        case Pattern::PushNewest:
        case Pattern::PushTimed:
            if (provided) return std::make_shared<patterns::PushServer>(spec, ctx);
            return std::make_shared<patterns::PushClient>(spec, ctx);
        case Pattern::Event:
            if (provided) return std::make_shared<patterns::EventServer>(spec, ctx);
            return std::make_shared<patterns::EventClient>(spec, ctx);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown pattern");
}

}  // namespace

Component::Component(std::string instance, model::ComponentModel model,
                     std::shared_ptr<const patterns::TypeTable> types, std::shared_ptr<tasks::Clock> clock,
                     std::shared_ptr<patterns::Transport> transport, std::size_t queue_depth)
    : instance_(std::move(instance)),
      model_(std::move(model)),
      types_(types ? std::move(types) : std::make_shared<patterns::TypeTable>()),
      clock_(std::move(clock)),
      transport_(std::move(transport)),
      executor_(std::make_shared<tasks::Executor>(instance_, clock_)),
      control_(std::make_shared<tasks::Executor>(instance_ + ".control", clock_)),
      params_(model_.params, types_) {
    patterns::PortContext ctx{types_, clock_, executor_, queue_depth};
    for (const auto& spec : model_.ports) {
        if (ports_.count(spec.name)) throw Error(ErrorCode::InvalidArgument, "duplicate port " + spec.name);
        ports_.emplace(spec.name, make_port(spec, ctx));
    }
}

std::shared_ptr<Component> Component::create(std::string instance, model::ComponentModel model,
                                             std::shared_ptr<const patterns::TypeTable> types,
                                             std::shared_ptr<tasks::Clock> clock,
                                             std::shared_ptr<patterns::Transport> transport,
                                             std::size_t queue_depth) {
    std::shared_ptr<Component> c(new Component(std::move(instance), std::move(model), std::move(types),
                                               std::move(clock), std::move(transport), queue_depth));
    c->endpoint_ = std::make_shared<ControlEndpoint>(c, c->control_);
    return c;
}

Component::~Component() { stop(); }

std::shared_ptr<patterns::Port> Component::port(std::string_view name) const {
    auto it = ports_.find(name);
    if (it == ports_.end()) throw Error(ErrorCode::UnknownEndpoint, instance_ + "." + std::string(name));
    return it->second;
}

std::vector<std::shared_ptr<patterns::ProvidedPort>> Component::provided_ports() const {
    std::vector<std::shared_ptr<patterns::ProvidedPort>> out;
    for (const auto& [name, p] : ports_)
        if (auto pp = std::dynamic_pointer_cast<patterns::ProvidedPort>(p)) out.push_back(pp);
    return out;
}

std::vector<std::shared_ptr<patterns::RequiredPort>> Component::required_ports() const {
    std::vector<std::shared_ptr<patterns::RequiredPort>> out;
    for (const auto& [name, p] : ports_)
        if (auto rp = std::dynamic_pointer_cast<patterns::RequiredPort>(p)) out.push_back(rp);
    return out;
}

std::shared_ptr<patterns::Provider> Component::control_endpoint() const { return endpoint_; }

void Component::execute(Op op, const CommObject& command) {
    const std::string& target = command.get_string("target");
    const std::string& argument = command.get_string("argument");
    switch (op) {
        case Op::ControlState:
            automaton_.set_state(target);
            return;
        case Op::ControlConnect: {
            auto p = port_as<patterns::RequiredPort>(target);
            if (!transport_) throw Error(ErrorCode::InvalidArgument, "no transport");
            p->connect(transport_->opener(argument, p->port_spec()), argument);
            return;
        }
        case Op::ControlDisconnect:
            port_as<patterns::RequiredPort>(target)->disconnect();
            return;
        case Op::ControlParam: {
            const auto* decl = params_.decl(target);
            if (!decl) throw Error(ErrorCode::UnknownKey, target);
            auto type = model::parse_field_type(argument);
            if (!type || !(*type == decl->type))
                throw Error(ErrorCode::TypeMismatch, target + ": expected " + decl->type.to_string());
            const auto& bytes = std::get<patterns::Bytes>(command.at("value").data).data;
            params_.set(target, decode_param(bytes, decl->type, *types_));
            return;
        }
        default:
            throw Error(ErrorCode::InvalidArgument, "not a control command");
    }
}

tasks::TaskHandle Component::spawn_task(tasks::PsmTask task, tasks::TaskBody body, tasks::Millis until) {
    std::lock_guard lk(tasks_mu_);
    if (stopping_) throw Error(ErrorCode::AlreadyStopped, instance_);
    auto h = tasks::TaskHandle::spawn(clock_, std::move(task), std::move(body), until);
    tasks_.push_back(h);
    return h;
}

std::vector<tasks::TaskHandle> Component::tasks() const {
    std::lock_guard lk(tasks_mu_);
    return tasks_;
}

void Component::stop() {
    std::call_once(stopped_, [this] {
        std::vector<tasks::TaskHandle> running;
        {
            std::lock_guard lk(tasks_mu_);
            stopping_ = true;
            running = tasks_;
        }
        for (auto& t : running) {
            try {
                t.stop();
            } catch (const Error&) {
            }
        }
        if (endpoint_) endpoint_->shutdown();
        control_->stop();
        for (auto& p : provided_ports()) p->shutdown();
        for (auto& p : required_ports()) p->disconnect();
        executor_->stop();
        log()->debug("{}: stopped", instance_);
    });
}

}  // namespace smartmars::component
