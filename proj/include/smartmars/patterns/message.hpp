#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "smartmars/error.hpp"
#include "smartmars/patterns/comm_object.hpp"

namespace smartmars::patterns {

/// Wire opcode. The high nibble names the pattern, the low nibble the action.
enum class Op : std::uint8_t {
    Send = 0x10,
    Query = 0x20,
    NewestUpdate = 0x30,
    NewestSubscribe = 0x31,
    NewestUnsubscribe = 0x32,
    TimedUpdate = 0x40,
    TimedSubscribe = 0x41,
    TimedUnsubscribe = 0x42,
    EventNotify = 0x50,
    EventActivateSingle = 0x51,
    EventActivateContinuous = 0x52,
    EventDeactivate = 0x53,
    ChannelOpen = 0x61,
    ChannelClose = 0x62,
    ChannelReject = 0x63,
    ProviderGone = 0x64,
    ControlState = 0x70,
    ControlConnect = 0x71,
    ControlDisconnect = 0x72,
    ControlParam = 0x73,
    ControlResult = 0x74,
};

enum class Kind : std::uint8_t { Request = 1, Answer = 2, Update = 3, Event = 4, Ack = 5, Control = 6 };

std::optional<Op> op_from_byte(std::uint8_t b);
std::optional<Kind> kind_from_byte(std::uint8_t b);
std::string_view to_string(Op op);

/// One unit exchanged between a required and a provided port. An empty
/// payload type name means the message carries no payload.
struct Message {
    Op op = Op::Send;
    Kind kind = Kind::Request;
    std::uint64_t correlation = 0;
    CommObject payload;

    friend bool operator==(const Message&, const Message&) = default;
};

Message make_reject(Op op, std::uint64_t correlation, ErrorCode code, const std::string& reason = {});
/// Error carried by a reject payload.
Error reject_error(const Message& reject);

}  // namespace smartmars::patterns
