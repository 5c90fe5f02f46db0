#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "smartmars/patterns/comm_object.hpp"
#include "smartmars/patterns/message.hpp"

namespace smartmars::patterns {

using ByteBuffer = std::vector<std::uint8_t>;

/// Canonical payload encoding: fields in declared order, fixed-width
/// little-endian primitives, u32 length prefixes for strings, bytes and lists,
/// nested objects inline. Throws Error(TypeMismatch) if `obj` does not conform.
ByteBuffer encode_payload(const CommObject& obj, const TypeTable& table);
/// Throws Error(ProtocolError) on truncated or trailing input.
CommObject decode_payload(std::string_view type_name, std::span<const std::uint8_t> bytes, const TypeTable& table);

inline constexpr std::size_t kFrameHeaderSize = 4 + 1 + 1 + 8 + 2;
inline constexpr std::uint32_t kMaxFrameSize = 16u << 20;

ByteBuffer encode_frame(const Message& msg, const TypeTable& table);

/// Incremental frame reader for a byte stream.
class FrameDecoder {
public:
    explicit FrameDecoder(const TypeTable& table) : table_(table) {}

    void feed(std::span<const std::uint8_t> bytes);
    /// Next complete frame, if buffered. Throws Error(ProtocolError) on a
    /// malformed frame; the decoder is unusable afterwards.
    std::optional<Message> next();
    std::size_t buffered() const { return buf_.size() - pos_; }

private:
    const TypeTable& table_;
    ByteBuffer buf_;
    std::size_t pos_ = 0;
};

}  // namespace smartmars::patterns
