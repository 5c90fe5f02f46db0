#include "smartmars/error.hpp"

namespace smartmars {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotWired: return "NotWired";
        case ErrorCode::TypeMismatch: return "TypeMismatch";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::Disconnected: return "Disconnected";
        case ErrorCode::UnknownId: return "UnknownId";
        case ErrorCode::HandlerAlreadyRegistered: return "HandlerAlreadyRegistered";
        case ErrorCode::QueueFull: return "QueueFull";
        case ErrorCode::ServiceDeactivated: return "ServiceDeactivated";
        case ErrorCode::AlreadyStarted: return "AlreadyStarted";
        case ErrorCode::NoCycleTime: return "NoCycleTime";
        case ErrorCode::Incompatible: return "Incompatible";
        case ErrorCode::UnknownEndpoint: return "UnknownEndpoint";
        case ErrorCode::UnknownState: return "UnknownState";
        case ErrorCode::UnknownKey: return "UnknownKey";
        case ErrorCode::ClockStopped: return "ClockStopped";
        case ErrorCode::AlreadyStopped: return "AlreadyStopped";
        case ErrorCode::MissingPlatformCapability: return "MissingPlatformCapability";
        case ErrorCode::InvalidTaskSpec: return "InvalidTaskSpec";
        case ErrorCode::InvalidTaskSet: return "InvalidTaskSet";
        case ErrorCode::HyperperiodTooLarge: return "HyperperiodTooLarge";
        case ErrorCode::DuplicateRegistration: return "DuplicateRegistration";
        case ErrorCode::UnknownBehavior: return "UnknownBehavior";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ProtocolError: return "ProtocolError";
    }
    return "Unknown";
}

namespace {
std::string compose(ErrorCode code, const std::string& detail) {
    std::string s(to_string(code));
    if (!detail.empty()) s += ": " + detail;
    return s;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(compose(code, detail)), code_(code), detail_(detail) {}

}  // namespace smartmars
