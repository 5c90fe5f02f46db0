#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smartmars/analysis/analysis.hpp"
#include "smartmars/model/types.hpp"
#include "smartmars/tasks/task.hpp"

namespace smartmars::deploy {

enum class IssueKind {
    Validation,
    InvalidTaskSpec,
    MissingPlatformCapability,
    MemoryExceeded,
    DeviceShortage,
    RealtimeUnsupported,
    Incompatible,
    TimeoutBelowHandling,
};

std::string_view to_string(IssueKind k);

/// One finding of the transformation or the deployment checks. `element`
/// names the instance, task, platform or wire it concerns.
struct Issue {
    IssueKind kind = IssueKind::Validation;
    std::string element;
    std::string message;

    std::string to_string() const;
    friend bool operator==(const Issue&, const Issue&) = default;
    friend auto operator<=>(const Issue&, const Issue&) = default;
};

/// A placed component with its platform-specific tasks. Ports carry the
/// deployment's timeout overrides.
struct PsmInstance {
    std::string name;
    model::ComponentModel component;
    model::PlatformDescription platform;
    std::vector<tasks::PsmTask> tasks;

    friend bool operator==(const PsmInstance&, const PsmInstance&) = default;
};

struct PsmDeployment {
    std::vector<model::CommObjectType> types;
    std::vector<model::PlatformDescription> platforms;
    std::vector<PsmInstance> instances;
    std::vector<model::Wire> wires;

    const PsmInstance* find(std::string_view instance) const;
    friend bool operator==(const PsmDeployment&, const PsmDeployment&) = default;
};

struct TransformResult {
    PsmDeployment psm;
    /// Sorted; empty iff the transformation succeeded.
    std::vector<Issue> errors;

    bool ok() const { return errors.empty(); }
};

/// Maps every task of every placed instance onto its platform and applies
/// timeout overrides. Document validation findings and task mapping
/// failures are collected rather than thrown; tasks that fail to map are
/// left out of the result.
TransformResult transform(const model::ModelDocument& doc);

/// Memory, device and realtime capacity per platform plus wire
/// compatibility and query timeouts against declared handling times.
/// Sorted.
std::vector<Issue> check_deployment(const PsmDeployment& psm);

struct ExtractOptions {
    /// Publishers of push timed ports with a declared per-cycle cost add an
    /// emulated periodic load.
    bool include_cyclic_load = false;
};

/// Per platform: realtime tasks, plus emulated periodic tasks that declare a
/// wcet (flagged emulated). Task names are `instance.task`. Platforms
/// without any entry are left out.
analysis::AnalysisTaskSet extract_analysis_model(const PsmDeployment& psm, const ExtractOptions& options = {});

/// Report of transform and check: {"errors": [...], "violations": [...],
/// "mapping": [...], "taskSets": {...}}.
nlohmann::json deployment_report(const TransformResult& transformed, const std::vector<Issue>& violations,
                                 const analysis::AnalysisTaskSet& tasks);

nlohmann::json to_json(const Issue& issue);

}  // namespace smartmars::deploy
