#pragma once

#include <memory>

#include <spdlog/spdlog.h>

namespace smartmars {

/// Process-wide logger writing to stderr. The level comes from the
/// SMARTMARS_LOG environment variable (trace, debug, info, warn, error, off);
/// the default is warn.
std::shared_ptr<spdlog::logger> log();

}  // namespace smartmars
