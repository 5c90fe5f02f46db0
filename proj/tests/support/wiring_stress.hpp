#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace smartmars::testing {

/// One randomized wiring schedule on a virtual clock: up to five components
/// exchanging queries and push newest updates while the master connects,
/// disconnects and switches states. Checks housekeeping liveness, wiring
/// atomicity, state/port consistency at every quiescent point and
/// entry/exit pairing. Returns the first violation.
std::optional<std::string> check_wiring_schedule(std::uint64_t seed);

struct StressReport {
    int runs = 0;
    int failures = 0;
    std::optional<std::uint64_t> first_failing_seed;
    std::string first_failure;
};

StressReport run_wiring_stress(std::uint64_t first_seed, int runs);

}  // namespace smartmars::testing
