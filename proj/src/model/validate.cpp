#include "smartmars/model/validate.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace smartmars::model {

namespace {

void sort_unique(std::vector<Violation>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

const FieldType& innermost(const FieldType& t) {
    const FieldType* cur = &t;
    while (cur->kind == FieldType::Kind::List && cur->element) cur = cur->element.get();
    return *cur;
}

bool type_exists(const std::vector<CommObjectType>& types, const std::string& name) {
    return std::any_of(types.begin(), types.end(), [&](const CommObjectType& t) { return t.name == name; });
}

template <class Range, class Name>
std::set<std::string> duplicates(const Range& range, Name name) {
    std::set<std::string> seen, dup;
    for (const auto& item : range)
        if (!seen.insert(name(item)).second) dup.insert(name(item));
    return dup;
}

void check_port(const ComponentModel& model, const ServicePortSpec& port, const std::vector<CommObjectType>& types,
                std::vector<Violation>& out) {
    const std::string el = model.name + ".port:" + port.name;
    auto add = [&](std::string msg) { out.push_back({el, std::move(msg)}); };

    const bool has_req = port.request_type.has_value();
    const bool has_ans = port.answer_type.has_value();
    switch (port.pattern) {
        case Pattern::Send:
            if (has_ans) add("send is one-way");
            if (!has_req) add("send requires a request type");
            break;
        case Pattern::Query:
            if (!has_req) add("query requires a request type");
            if (!has_ans) add("query requires an answer type");
            break;
        case Pattern::PushNewest:
        case Pattern::PushTimed:
            if (has_req) add("push carries no request type");
            if (!has_ans) add("push requires an answer type");
            break;
        case Pattern::Event:
            if (!has_req) add("event requires an activation type");
            if (!has_ans) add("event requires a notification type");
            break;
    }

    for (const auto* ref : {&port.request_type, &port.answer_type})
        if (*ref && !type_exists(types, **ref)) add("unresolved commobject type '" + **ref + "'");

    const auto& q = port.qos;
    if (port.pattern == Pattern::PushTimed) {
        if (!q.cycle_ms && port.direction == Direction::Provided) add("push timed requires cycleMs");
    } else if (q.cycle_ms) {
        add("cycleMs only allowed on push timed");
    }
    if (q.cycle_ms && *q.cycle_ms <= 0) add("cycleMs must be positive");

    const bool timeout_pattern = port.pattern == Pattern::Query || port.pattern == Pattern::Event;
    if (q.timeout && !timeout_pattern) add("timeoutMs only allowed on query and event");
    if (q.timeout && q.timeout->bound && *q.timeout->bound <= 0) add("timeoutMs must be positive");

    if (q.min_handling_ms) {
        if (port.pattern != Pattern::Query || port.direction != Direction::Provided)
            add("minHandlingMs only allowed on provided query");
        if (*q.min_handling_ms < 0) add("minHandlingMs must not be negative");
    }
    if (q.cycle_cost_ms) {
        if (port.pattern != Pattern::PushTimed || port.direction != Direction::Provided)
            add("cycleCostMs only allowed on provided push timed");
        if (*q.cycle_cost_ms <= 0) add("cycleCostMs must be positive");
    }
}

void check_task(const ComponentModel& model, const TaskSpec& task, std::vector<Violation>& out) {
    const std::string el = model.name + ".task:" + task.name;
    auto add = [&](std::string msg) { out.push_back({el, std::move(msg)}); };
    if (task.is_periodic && !task.period_ms) add("periodic task requires periodMs");
    if (task.period_ms && *task.period_ms <= 0) add("periodMs must be positive");
    if (task.wcet_ms && *task.wcet_ms <= 0) add("wcetMs must be positive");
    if (task.is_realtime) {
        if (!task.is_periodic) add("realtime task must be periodic");
        if (!task.wcet_ms) add("realtime task requires wcetMs");
        if (task.wcet_ms && task.period_ms && *task.wcet_ms > *task.period_ms) add("wcetMs exceeds periodMs");
    }
}

}  // namespace

std::vector<Violation> validate_types(const std::vector<CommObjectType>& types) {
    std::vector<Violation> out;
    for (const auto& name : duplicates(types, [](const auto& t) { return t.name; }))
        out.push_back({"commobject:" + name, "duplicate commobject type"});

    std::map<std::string, std::vector<std::string>> edges;
    for (const auto& t : types) {
        for (const auto& name : duplicates(t.fields, [](const auto& f) { return f.name; }))
            out.push_back({"commobject:" + t.name + "." + name, "duplicate field"});
        for (const auto& f : t.fields) {
            const FieldType& leaf = innermost(f.type);
            if (leaf.kind != FieldType::Kind::Object) continue;
            if (!type_exists(types, leaf.object_name))
                out.push_back({"commobject:" + t.name + "." + f.name,
                               "unresolved commobject type '" + leaf.object_name + "'"});
            else
                edges[t.name].push_back(leaf.object_name);
        }
    }

    // Any type lying on a cycle of the nesting graph is reported once.
    enum class Mark { None, Active, Done };
    std::map<std::string, Mark> mark;
    std::set<std::string> cyclic;
    std::vector<std::string> stack;
    auto visit = [&](auto& self, const std::string& node) -> void {
        mark[node] = Mark::Active;
        stack.push_back(node);
        for (const auto& next : edges[node]) {
            if (mark[next] == Mark::Active) {
                auto it = std::find(stack.begin(), stack.end(), next);
                cyclic.insert(it, stack.end());
            } else if (mark[next] == Mark::None) {
                self(self, next);
            }
        }
        stack.pop_back();
        mark[node] = Mark::Done;
    };
    for (const auto& t : types)
        if (mark[t.name] == Mark::None) visit(visit, t.name);
    for (const auto& name : cyclic) out.push_back({"commobject:" + name, "recursive nesting"});

    sort_unique(out);
    return out;
}

std::vector<Violation> validate_pim(const ComponentModel& model, const std::vector<CommObjectType>& types) {
    std::vector<Violation> out;
    for (const auto& name : duplicates(model.ports, [](const auto& p) { return p.name; }))
        out.push_back({model.name + ".port:" + name, "duplicate port name"});
    for (const auto& name : duplicates(model.tasks, [](const auto& t) { return t.name; }))
        out.push_back({model.name + ".task:" + name, "duplicate task name"});
    for (const auto& name : duplicates(model.params, [](const auto& p) { return p.key; }))
        out.push_back({model.name + ".param:" + name, "duplicate param key"});

    for (const auto& port : model.ports) check_port(model, port, types, out);
    for (const auto& task : model.tasks) check_task(model, task, out);
    for (const auto& param : model.params) {
        const FieldType& leaf = innermost(param.type);
        if (leaf.kind == FieldType::Kind::Object && !type_exists(types, leaf.object_name))
            out.push_back({model.name + ".param:" + param.key,
                           "unresolved commobject type '" + leaf.object_name + "'"});
    }
    for (const auto& c : model.constraints) {
        if (const auto* dev = std::get_if<RequiresDevice>(&c); dev && dev->count <= 0)
            out.push_back({model.name + ".requires:device " + dev->device_class, "device count must be positive"});
        if (const auto* mem = std::get_if<RequiresMemory>(&c); mem && mem->mb <= 0)
            out.push_back({model.name + ".requires:memoryMB", "memoryMB must be positive"});
    }
    sort_unique(out);
    return out;
}

std::vector<Violation> validate_platform(const PlatformDescription& platform) {
    std::vector<Violation> out;
    const std::string el = "platform:" + platform.name;
    if (platform.memory_mb <= 0) out.push_back({el, "memoryMB must be positive"});
    if (platform.cpu_count != 1) out.push_back({el, "cpuCount must be 1"});
    for (const auto& d : platform.devices)
        if (d.count <= 0) out.push_back({el + ".device:" + d.device_class, "device count must be positive"});
    sort_unique(out);
    return out;
}

std::vector<Violation> validate_deployment(const ModelDocument& doc) {
    std::vector<Violation> out;
    if (!doc.deployment) return out;
    const DeploymentModel& dep = *doc.deployment;

    for (const auto& name : duplicates(dep.instances, [](const auto& i) { return i.name; }))
        out.push_back({"instance:" + name, "duplicate instance name"});
    for (const auto& inst : dep.instances) {
        if (!doc.find_component(inst.component))
            out.push_back({"instance:" + inst.name, "unresolved component '" + inst.component + "'"});
        if (inst.platform.empty())
            out.push_back({"instance:" + inst.name, "instance has no placement"});
        else if (!doc.find_platform(inst.platform))
            out.push_back({"instance:" + inst.name, "unresolved platform '" + inst.platform + "'"});
    }

    auto port_of = [&](const std::string& instance, const std::string& port) -> const ServicePortSpec* {
        const Instance* inst = dep.find_instance(instance);
        if (!inst) return nullptr;
        const ComponentModel* comp = doc.find_component(inst->component);
        return comp ? comp->find_port(port) : nullptr;
    };
    for (const auto& w : dep.wires) {
        const std::string el =
            "wire:" + w.from_instance + "." + w.from_port + "->" + w.to_instance + "." + w.to_port;
        const ServicePortSpec* from = port_of(w.from_instance, w.from_port);
        const ServicePortSpec* to = port_of(w.to_instance, w.to_port);
        if (!from) out.push_back({el, "unknown requestor endpoint"});
        if (!to) out.push_back({el, "unknown provider endpoint"});
        if (from && from->direction != Direction::Required) out.push_back({el, "wire source must be a required port"});
        if (to && to->direction != Direction::Provided) out.push_back({el, "wire target must be a provided port"});
    }
    for (const auto& name : duplicates(dep.wires, [](const auto& w) { return w.from_instance + "." + w.from_port; }))
        out.push_back({"wire:" + name, "required port wired more than once"});

    for (const auto& o : dep.overrides) {
        const std::string el = "override:" + o.instance + "." + o.port;
        const ServicePortSpec* port = port_of(o.instance, o.port);
        if (!port) {
            out.push_back({el, "unknown endpoint"});
            continue;
        }
        if (port->pattern != Pattern::Query && port->pattern != Pattern::Event)
            out.push_back({el, "timeoutMs only allowed on query and event"});
        if (o.timeout.bound && *o.timeout.bound <= 0) out.push_back({el, "timeoutMs must be positive"});
    }
    sort_unique(out);
    return out;
}

std::vector<Violation> validate_document(const ModelDocument& doc) {
    std::vector<Violation> out = validate_types(doc.types);
    for (const auto& c : doc.components) {
        auto v = validate_pim(c, doc.types);
        out.insert(out.end(), v.begin(), v.end());
    }
    for (const auto& name : duplicates(doc.components, [](const auto& c) { return c.name; }))
        out.push_back({"component:" + name, "duplicate component name"});
    for (const auto& p : doc.platforms) {
        auto v = validate_platform(p);
        out.insert(out.end(), v.begin(), v.end());
    }
    for (const auto& name : duplicates(doc.platforms, [](const auto& p) { return p.name; }))
        out.push_back({"platform:" + name, "duplicate platform name"});
    auto d = validate_deployment(doc);
    out.insert(out.end(), d.begin(), d.end());
    sort_unique(out);
    return out;
}

}  // namespace smartmars::model
