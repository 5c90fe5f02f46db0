#pragma once

#include <string>
#include <vector>

#include "smartmars/model/types.hpp"

namespace smartmars::model {

/// One broken invariant. `element` is a dotted path naming exactly one model
/// element, e.g. `Planner.plan` or `commobject:Pose.x`.
struct Violation {
    std::string element;
    std::string message;

    std::string to_string() const { return element + ": " + message; }
    friend bool operator==(const Violation&, const Violation&) = default;
    friend auto operator<=>(const Violation&, const Violation&) = default;
};

/// Field-name uniqueness, resolvable nested types and an acyclic type graph.
std::vector<Violation> validate_types(const std::vector<CommObjectType>& types);

/// Checks the component's ports, tasks and parameters. `types` is the type
/// table port references must resolve in. The result is sorted, so it does
/// not depend on declaration order.
std::vector<Violation> validate_pim(const ComponentModel& model, const std::vector<CommObjectType>& types);

std::vector<Violation> validate_platform(const PlatformDescription& platform);

/// Structural deployment invariants: unique instances, total placement,
/// existing wire endpoints and override targets.
std::vector<Violation> validate_deployment(const ModelDocument& doc);

/// Every check above over a whole document, sorted.
std::vector<Violation> validate_document(const ModelDocument& doc);

}  // namespace smartmars::model
