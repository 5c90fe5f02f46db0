#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace smartmars {

enum class ErrorCode : std::uint8_t {
    NotWired = 1,
    TypeMismatch,
    Timeout,
    Disconnected,
    UnknownId,
    HandlerAlreadyRegistered,
    QueueFull,
    ServiceDeactivated,
    AlreadyStarted,
    NoCycleTime,
    Incompatible,
    UnknownEndpoint,
    UnknownState,
    UnknownKey,
    ClockStopped,
    AlreadyStopped,
    MissingPlatformCapability,
    InvalidTaskSpec,
    InvalidTaskSet,
    HyperperiodTooLarge,
    DuplicateRegistration,
    UnknownBehavior,
    InvalidArgument,
    ProtocolError,
};

std::string_view to_string(ErrorCode code);

/// Runtime failure carrying a stable error code. Every pattern, wiring and
/// task operation reports failures through this type.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail = {});

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace smartmars
