#pragma once

#include <string_view>

#include "smartmars/model/types.hpp"
#include "smartmars/scenario/runner.hpp"

namespace smartmars::scenario {

/// Scripted interventions of the sequencer during a navigation run. Times
/// are release times of its 10 ms task.
struct NavigationScript {
    /// Rewire the planner's motion, base-state and status ports from the
    /// simulated base to the stub.
    tasks::Millis swap_at = 2010;
    /// Planner in Neutral on [neutral_from, neutral_until).
    tasks::Millis neutral_from = 4010;
    tasks::Millis neutral_until = 4210;
};

/// Text of the pinned navigation model (types, components, platforms and
/// deployment), identical to fixtures/navigation.model.
std::string_view navigation_model_text();

/// Registers BaseSim, BaseStub, LaserSim, Mapper, Watchdog, Planner and Sequencer.
void register_navigation(Registry& registry, const NavigationScript& script = {});

struct NavigationScenario {
    model::ModelDocument model;
    Registry registry;
};

NavigationScenario build_navigation_scenario(const NavigationScript& script = {});

}  // namespace smartmars::scenario
