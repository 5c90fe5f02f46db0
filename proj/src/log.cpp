#include "smartmars/log.hpp"

#include <cstdlib>

#include <spdlog/sinks/stdout_sinks.h>

namespace smartmars {

std::shared_ptr<spdlog::logger> log() {
    static std::shared_ptr<spdlog::logger> logger = [] {
        auto l = spdlog::stderr_logger_mt("smartmars");
        l->set_pattern("[%l] %v");
        const char* env = std::getenv("SMARTMARS_LOG");
        l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
        return l;
    }();
    return logger;
}

}  // namespace smartmars
