#include "smartmars/scenario/runner.hpp"

#include <chrono>
#include <thread>

#include "smartmars/error.hpp"
#include "smartmars/log.hpp"

namespace smartmars::scenario {

void RunContext::count(const std::string& metric, std::int64_t n) {
    std::lock_guard lk(mu_);
    metrics_[metric] += n;
}

std::int64_t RunContext::metric(const std::string& metric) const {
    std::lock_guard lk(mu_);
    auto it = metrics_.find(metric);
    return it == metrics_.end() ? 0 : it->second;
}

std::map<std::string, std::int64_t> RunContext::metrics() const {
    std::lock_guard lk(mu_);
    return metrics_;
}

void Registry::add(const std::string& component, BehaviorFactory factory) {
    if (!factory) throw Error(ErrorCode::InvalidArgument, "empty behavior for " + component);
    if (!factories_.emplace(component, std::move(factory)).second)
        throw Error(ErrorCode::DuplicateRegistration, component);
}

const BehaviorFactory& Registry::lookup(const std::string& component) const {
    auto it = factories_.find(component);
    if (it == factories_.end()) throw Error(ErrorCode::UnknownBehavior, component);
    return it->second;
}

bool Registry::contains(const std::string& component) const { return factories_.count(component) > 0; }

std::vector<std::string> Registry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : factories_) out.push_back(name);
    return out;
}

namespace {

std::string describe(const std::vector<deploy::Issue>& issues) {
    std::string s = std::to_string(issues.size()) + " deployment issue(s)";
    if (!issues.empty()) s += ", first: " + issues.front().to_string();
    return s;
}

}  // namespace

CheckFailed::CheckFailed(std::vector<deploy::Issue> issues)
    : std::runtime_error(describe(issues)), issues_(std::move(issues)) {}

const PortCounter* RunBundle::port(const std::string& instance, const std::string& port) const {
    for (const auto& p : ports)
        if (p.instance == instance && p.port == port) return &p;
    return nullptr;
}

const tasks::RunReport* RunBundle::task(const std::string& name) const {
    for (const auto& t : tasks)
        if (t.task == name) return &t;
    return nullptr;
}

std::uint64_t RunBundle::deliveries(model::Pattern pattern) const {
    std::uint64_t n = 0;
    for (const auto& p : ports)
        if (p.pattern == pattern) n += p.deliveries;
    return n;
}

nlohmann::json to_json(const RunBundle& bundle) {
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& t : bundle.tasks) tasks.push_back(tasks::to_json(t));
    nlohmann::json ports = nlohmann::json::array();
    for (const auto& p : bundle.ports)
        ports.push_back({{"instance", p.instance},
                         {"port", p.port},
                         {"pattern", model::to_string(p.pattern)},
                         {"direction", model::to_string(p.direction)},
                         {"deliveries", p.deliveries}});
    return {{"clock", bundle.clock},
            {"endTimeMs", bundle.end_time_ms},
            {"tasks", tasks},
            {"ports", ports},
            {"metrics", bundle.metrics},
            {"failures", bundle.failures}};
}

RunBundle run_deployment(const model::ModelDocument& doc, const Registry& registry, const RunOptions& options) {
    if (options.virtual_until.has_value() == (options.real_for.has_value() || options.interrupt != nullptr))
        throw Error(ErrorCode::InvalidArgument, "choose either a virtual or a real run");
    if (options.virtual_until && *options.virtual_until < 0)
        throw Error(ErrorCode::InvalidArgument, "virtual run limit must not be negative");

    auto transformed = deploy::transform(doc);
    if (!transformed.ok()) throw CheckFailed(transformed.errors);
    auto violations = deploy::check_deployment(transformed.psm);
    if (!violations.empty()) throw CheckFailed(violations);
    const auto& psm = transformed.psm;

    RunBundle bundle;
    bundle.clock = options.virtual_until ? "virtual" : "real";
    if (psm.instances.empty()) return bundle;

    struct Slot {
        const deploy::PsmInstance* instance;
        std::unique_ptr<ComponentBehavior> behavior;
        std::vector<std::pair<tasks::PsmTask, tasks::TaskBody>> bodies;
        std::shared_ptr<component::Component> component;
    };
    std::vector<Slot> slots;
    for (const auto& inst : psm.instances) {
        Slot s{&inst, registry.lookup(inst.component.name)(), {}, nullptr};
        for (const auto& t : inst.tasks) {
            auto body = s.behavior->task(t.spec.name);
            if (!body)
                throw Error(ErrorCode::UnknownBehavior,
                            inst.component.name + " has no body for task " + t.spec.name);
            s.bodies.emplace_back(t, std::move(body));
        }
        slots.push_back(std::move(s));
    }

    std::shared_ptr<tasks::Clock> clock;
    std::shared_ptr<tasks::VirtualClock> virtual_clock;
    if (options.virtual_until) {
        virtual_clock = std::make_shared<tasks::VirtualClock>(0);
        clock = virtual_clock;
    } else {
        clock = std::make_shared<tasks::RealClock>();
    }
    auto types = std::make_shared<const patterns::TypeTable>(psm.types);
    auto transport = std::make_shared<patterns::InProcessTransport>(types);
    component::System system(types, clock, transport);
    RunContext ctx(system, clock);

    std::vector<std::pair<std::string, tasks::TaskHandle>> handles;
    auto teardown = [&] {
        for (auto& [_, h] : handles) {
            try {
                h.stop();
            } catch (const Error&) {
            }
        }
        system.shutdown();
        clock->stop();
    };

    try {
        for (auto& s : slots) {
            s.component = system.add(s.instance->name, s.instance->component,
                                     [&](component::Component& c) { s.behavior->configure(c, ctx); });
        }
        for (const auto& w : psm.wires) system.connect({w.from_instance, w.from_port}, {w.to_instance, w.to_port});
        for (auto& s : slots) s.behavior->start(*s.component, ctx);
        for (auto& s : slots)
            for (auto& [task, body] : s.bodies)
                handles.emplace_back(s.instance->name, s.component->spawn_task(task, body));
        if (options.on_started) options.on_started(system, ctx);

        if (virtual_clock) {
            virtual_clock->settle();
            virtual_clock->advance_to(*options.virtual_until);
            virtual_clock->settle();
        } else {
            const auto start = std::chrono::steady_clock::now();
            while (!(options.interrupt && options.interrupt->load())) {
                if (options.real_for &&
                    std::chrono::steady_clock::now() - start >= std::chrono::milliseconds(*options.real_for))
                    break;
                std::this_thread::sleep_for(std::chrono::milliseconds(20));
            }
        }
        for (auto& s : slots) s.behavior->finish(*s.component, ctx);
        if (virtual_clock) virtual_clock->settle();
    } catch (...) {
        teardown();
        throw;
    }

    bundle.end_time_ms = clock->now();
    for (const auto& s : slots)
        for (const auto& spec : s.instance->component.ports)
            bundle.ports.push_back({s.instance->name, spec.name, spec.pattern, spec.direction,
                                    s.component->port(spec.name)->deliveries()});
    bundle.metrics = ctx.metrics();
    teardown();

    for (auto& [instance, h] : handles) {
        auto r = h.report();
        r.task = instance + "." + r.task;
        bundle.tasks.push_back(r);
        if (auto f = h.failure(); !f.empty()) bundle.failures.push_back(r.task + ": " + f);
    }
    return bundle;
}

}  // namespace smartmars::scenario
