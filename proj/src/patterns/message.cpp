#include "smartmars/patterns/message.hpp"

namespace smartmars::patterns {

std::optional<Op> op_from_byte(std::uint8_t b) {
    switch (b) {
        case 0x10: case 0x20:
        case 0x30: case 0x31: case 0x32:
        case 0x40: case 0x41: case 0x42:
        case 0x50: case 0x51: case 0x52: case 0x53:
        case 0x61: case 0x62: case 0x63: case 0x64:
        case 0x70: case 0x71: case 0x72: case 0x73: case 0x74:
            return static_cast<Op>(b);
        default:
            return std::nullopt;
    }
}

std::optional<Kind> kind_from_byte(std::uint8_t b) {
    if (b < 1 || b > 6) return std::nullopt;
    return static_cast<Kind>(b);
}

std::string_view to_string(Op op) {
    switch (op) {
        case Op::Send: return "send";
        case Op::Query: return "query";
        case Op::NewestUpdate: return "newest-update";
        case Op::NewestSubscribe: return "newest-subscribe";
        case Op::NewestUnsubscribe: return "newest-unsubscribe";
        case Op::TimedUpdate: return "timed-update";
        case Op::TimedSubscribe: return "timed-subscribe";
        case Op::TimedUnsubscribe: return "timed-unsubscribe";
        case Op::EventNotify: return "event-notify";
        case Op::EventActivateSingle: return "event-activate-single";
        case Op::EventActivateContinuous: return "event-activate-continuous";
        case Op::EventDeactivate: return "event-deactivate";
        case Op::ChannelOpen: return "channel-open";
        case Op::ChannelClose: return "channel-close";
        case Op::ChannelReject: return "channel-reject";
        case Op::ProviderGone: return "provider-gone";
        case Op::ControlState: return "control-state";
        case Op::ControlConnect: return "control-connect";
        case Op::ControlDisconnect: return "control-disconnect";
        case Op::ControlParam: return "control-param";
        case Op::ControlResult: return "control-result";
    }
    return "?";
}

Message make_reject(Op op, std::uint64_t correlation, ErrorCode code, const std::string& reason) {
    CommObject body{std::string(builtin::kReject)};
    body.set("code", static_cast<std::int64_t>(code));
    body.set("reason", reason);
    return Message{op, Kind::Answer, correlation, std::move(body)};
}

Error reject_error(const Message& reject) {
    auto code = static_cast<ErrorCode>(reject.payload.get_int("code"));
    return Error(code, reject.payload.get_string("reason"));
}

}  // namespace smartmars::patterns
