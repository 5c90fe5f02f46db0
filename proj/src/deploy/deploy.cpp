#include "smartmars/deploy/deploy.hpp"

#include <algorithm>
#include <map>

#include "smartmars/error.hpp"
#include "smartmars/model/validate.hpp"
#include "smartmars/patterns/transport.hpp"

namespace smartmars::deploy {

std::string_view to_string(IssueKind k) {
    switch (k) {
        case IssueKind::Validation: return "Validation";
        case IssueKind::InvalidTaskSpec: return "InvalidTaskSpec";
        case IssueKind::MissingPlatformCapability: return "MissingPlatformCapability";
        case IssueKind::MemoryExceeded: return "MemoryExceeded";
        case IssueKind::DeviceShortage: return "DeviceShortage";
        case IssueKind::RealtimeUnsupported: return "RealtimeUnsupported";
        case IssueKind::Incompatible: return "Incompatible";
        case IssueKind::TimeoutBelowHandling: return "TimeoutBelowHandling";
    }
    return "?";
}

std::string Issue::to_string() const {
    return std::string(deploy::to_string(kind)) + " " + element + ": " + message;
}

const PsmInstance* PsmDeployment::find(std::string_view instance) const {
    for (const auto& i : instances)
        if (i.name == instance) return &i;
    return nullptr;
}

namespace {

void sort_unique(std::vector<Issue>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::string wire_name(const model::Wire& w) {
    return "wire:" + w.from_instance + "." + w.from_port + "->" + w.to_instance + "." + w.to_port;
}

}  // namespace

TransformResult transform(const model::ModelDocument& doc) {
    TransformResult out;
    for (const auto& v : model::validate_document(doc)) out.errors.push_back({IssueKind::Validation, v.element, v.message});
    out.psm.types = doc.types;
    out.psm.platforms = doc.platforms;
    std::sort(out.psm.platforms.begin(), out.psm.platforms.end(),
              [](const auto& a, const auto& b) { return a.name < b.name; });
    if (!doc.deployment) {
        sort_unique(out.errors);
        return out;
    }
    const auto& dep = *doc.deployment;
    out.psm.wires = dep.wires;
    std::sort(out.psm.wires.begin(), out.psm.wires.end(), [](const auto& a, const auto& b) {
        return std::tie(a.from_instance, a.from_port, a.to_instance, a.to_port) <
               std::tie(b.from_instance, b.from_port, b.to_instance, b.to_port);
    });
    for (const auto& inst : dep.instances) {
        const auto* comp = doc.find_component(inst.component);
        const auto* plat = doc.find_platform(inst.platform);
        if (!comp || !plat) continue;
        PsmInstance p{inst.name, *comp, *plat, {}};
        for (const auto& o : dep.overrides) {
            if (o.instance != inst.name) continue;
            for (auto& port : p.component.ports)
                if (port.name == o.port) port.qos.timeout = o.timeout;
        }
        for (const auto& t : comp->tasks) {
            try {
                p.tasks.push_back(tasks::map_task(t, *plat));
            } catch (const Error& e) {
                IssueKind kind = e.code() == ErrorCode::MissingPlatformCapability ? IssueKind::MissingPlatformCapability
                                                                                   : IssueKind::InvalidTaskSpec;
                out.errors.push_back({kind, inst.name + "." + t.name, e.detail()});
            }
        }
        out.psm.instances.push_back(std::move(p));
    }
    std::sort(out.psm.instances.begin(), out.psm.instances.end(),
              [](const auto& a, const auto& b) { return a.name < b.name; });
    sort_unique(out.errors);
    return out;
}

std::vector<Issue> check_deployment(const PsmDeployment& psm) {
    std::vector<Issue> out;
    for (const auto& plat : psm.platforms) {
        const std::string el = "platform:" + plat.name;
        std::int64_t memory = 0;
        std::map<std::string, std::int64_t> devices;
        for (const auto& inst : psm.instances) {
            if (inst.platform.name != plat.name) continue;
            for (const auto& c : inst.component.constraints) {
                if (const auto* m = std::get_if<model::RequiresMemory>(&c)) memory += m->mb;
                if (const auto* d = std::get_if<model::RequiresDevice>(&c)) devices[d->device_class] += d->count;
            }
        }
        if (memory > plat.memory_mb)
            out.push_back({IssueKind::MemoryExceeded, el,
                           "instances require " + std::to_string(memory) + " MB, platform has " +
                               std::to_string(plat.memory_mb) + " MB"});
        for (const auto& [cls, need] : devices) {
            auto have = plat.device_count(cls);
            if (need > have)
                out.push_back({IssueKind::DeviceShortage, el + ".device:" + cls,
                               "instances require " + std::to_string(need) + " " + cls + ", platform has " +
                                   std::to_string(have)});
        }
    }
    for (const auto& inst : psm.instances) {
        bool needs_rt = std::any_of(inst.component.constraints.begin(), inst.component.constraints.end(),
                                    [](const auto& c) { return std::holds_alternative<model::RequiresRealtime>(c); });
        if (needs_rt && !inst.platform.supports_realtime)
            out.push_back({IssueKind::RealtimeUnsupported, "instance:" + inst.name,
                           "requires realtime but platform " + inst.platform.name + " lacks it"});
    }
    for (const auto& w : psm.wires) {
        const auto* from = psm.find(w.from_instance);
        const auto* to = psm.find(w.to_instance);
        if (!from || !to) continue;
        const auto* req = from->component.find_port(w.from_port);
        const auto* prov = to->component.find_port(w.to_port);
        if (!req || !prov) continue;
        if (auto why = patterns::incompatibility(*req, *prov)) {
            out.push_back({IssueKind::Incompatible, wire_name(w),
                           *why + " mismatch: " + std::string(model::to_string(req->pattern)) + " " +
                               req->request_type.value_or("-") + "/" + req->answer_type.value_or("-") + " vs " +
                               std::string(model::to_string(prov->pattern)) + " " + prov->request_type.value_or("-") +
                               "/" + prov->answer_type.value_or("-")});
            continue;
        }
        if (req->pattern == model::Pattern::Query && prov->qos.min_handling_ms && req->qos.timeout &&
            req->qos.timeout->bound && *req->qos.timeout->bound < *prov->qos.min_handling_ms)
            out.push_back({IssueKind::TimeoutBelowHandling, wire_name(w),
                           "timeoutMs " + std::to_string(*req->qos.timeout->bound) + " below provider minHandlingMs " +
                               std::to_string(*prov->qos.min_handling_ms)});
    }
    sort_unique(out);
    return out;
}

analysis::AnalysisTaskSet extract_analysis_model(const PsmDeployment& psm, const ExtractOptions& options) {
    analysis::AnalysisTaskSet set;
    std::map<std::string, std::vector<analysis::AnalysisTask>> loads;
    for (const auto& inst : psm.instances) {
        for (const auto& t : inst.tasks) {
            if (!t.spec.wcet_ms || !t.spec.period_ms) continue;
            if (t.mapping == tasks::TaskMapping::FreeRunningTask) continue;
            set.per_platform[inst.platform.name].push_back({inst.name + "." + t.spec.name, *t.spec.wcet_ms,
                                                            *t.spec.period_ms, t.spec.priority,
                                                            t.mapping == tasks::TaskMapping::EmulatedPeriodicTask});
        }
        if (!options.include_cyclic_load) continue;
        for (const auto& port : inst.component.ports) {
            if (port.pattern != model::Pattern::PushTimed || port.direction != model::Direction::Provided) continue;
            if (!port.qos.cycle_cost_ms || !port.qos.cycle_ms) continue;
            loads[inst.platform.name].push_back(
                {inst.name + "." + port.name, *port.qos.cycle_cost_ms, *port.qos.cycle_ms, std::nullopt, true});
        }
    }
    for (auto& [platform, extra] : loads) {
        auto& tasks = set.per_platform[platform];
        std::int64_t top = 0;
        for (const auto& t : tasks) top = std::max(top, t.priority.value_or(0));
        std::sort(extra.begin(), extra.end(), [](const auto& a, const auto& b) {
            return std::tie(a.period_ms, a.name) > std::tie(b.period_ms, b.name);
        });
        for (auto& l : extra) {
            l.priority = ++top;
            tasks.push_back(std::move(l));
        }
    }
    return set;
}

nlohmann::json to_json(const Issue& issue) {
    return {{"kind", to_string(issue.kind)}, {"element", issue.element}, {"message", issue.message}};
}

nlohmann::json deployment_report(const TransformResult& transformed, const std::vector<Issue>& violations,
                                 const analysis::AnalysisTaskSet& tasks) {
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& e : transformed.errors) errors.push_back(to_json(e));
    nlohmann::json viol = nlohmann::json::array();
    for (const auto& v : violations) viol.push_back(to_json(v));
    nlohmann::json mapping = nlohmann::json::array();
    for (const auto& inst : transformed.psm.instances)
        for (const auto& t : inst.tasks)
            mapping.push_back({{"instance", inst.name},
                               {"task", t.spec.name},
                               {"mapping", tasks::to_string(t.mapping)},
                               {"platform", t.platform}});
    nlohmann::json sets = nlohmann::json::object();
    for (const auto& [platform, list] : tasks.per_platform) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& t : list) {
            nlohmann::json j{{"name", t.name}, {"wcetMs", t.wcet_ms}, {"periodMs", t.period_ms}, {"emulated", t.emulated}};
            j["priority"] = t.priority ? nlohmann::json(*t.priority) : nlohmann::json(nullptr);
            arr.push_back(std::move(j));
        }
        sets[platform] = std::move(arr);
    }
    return {{"errors", errors}, {"violations", viol}, {"mapping", mapping}, {"taskSets", sets}};
}

}  // namespace smartmars::deploy
