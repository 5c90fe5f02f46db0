#include "smartmars/patterns/codec.hpp"

#include <bit>
#include <cstring>

#include "smartmars/error.hpp"

namespace smartmars::patterns {

using model::FieldType;
using Kind_ = FieldType::Kind;

namespace {

void put_le(ByteBuffer& out, std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_be(ByteBuffer& out, std::uint64_t v, int width) {
    for (int i = width - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_len(ByteBuffer& out, std::size_t n) {
    if (n > 0xffffffffu) throw Error(ErrorCode::InvalidArgument, "field too long");
    put_le(out, n, 4);
}

void encode_value(ByteBuffer& out, const Value& v, const FieldType& t, const TypeTable& table);

void encode_fields(ByteBuffer& out, const CommObject& obj, const TypeTable& table) {
    const model::CommObjectType* type = table.find(obj.type_name());
    if (!type) throw Error(ErrorCode::TypeMismatch, "unknown type '" + obj.type_name() + "'");
    for (const auto& decl : type->fields) encode_value(out, obj.at(decl.name), decl.type, table);
}

void encode_value(ByteBuffer& out, const Value& v, const FieldType& t, const TypeTable& table) {
    switch (t.kind) {
        case Kind_::Bool: out.push_back(std::get<bool>(v.data) ? 1 : 0); break;
        case Kind_::Int64: put_le(out, static_cast<std::uint64_t>(std::get<std::int64_t>(v.data)), 8); break;
        case Kind_::Float64: put_le(out, std::bit_cast<std::uint64_t>(std::get<double>(v.data)), 8); break;
        case Kind_::String: {
            const auto& s = std::get<std::string>(v.data);
            put_len(out, s.size());
            out.insert(out.end(), s.begin(), s.end());
            break;
        }
        case Kind_::Bytes: {
            const auto& b = std::get<Bytes>(v.data).data;
            put_len(out, b.size());
            out.insert(out.end(), b.begin(), b.end());
            break;
        }
        case Kind_::Object: encode_fields(out, std::get<CommObject>(v.data), table); break;
        case Kind_::List: {
            const auto& items = std::get<ListValue>(v.data).items;
            put_len(out, items.size());
            for (const auto& item : items) encode_value(out, item, *t.element, table);
            break;
        }
    }
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint64_t le(int width) {
        need(width);
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= std::uint64_t{in_[pos_ + i]} << (8 * i);
        pos_ += width;
        return v;
    }
    std::span<const std::uint8_t> take(std::size_t n) {
        need(n);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) {
        if (in_.size() - pos_ < n) throw Error(ErrorCode::ProtocolError, "truncated payload");
    }
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

CommObject decode_fields(Reader& r, std::string_view type_name, const TypeTable& table, int depth);

Value decode_value(Reader& r, const FieldType& t, const TypeTable& table, int depth) {
    switch (t.kind) {
        case Kind_::Bool: {
            auto b = r.le(1);
            if (b > 1) throw Error(ErrorCode::ProtocolError, "bad bool");
            return Value(b == 1);
        }
        case Kind_::Int64: return Value(static_cast<std::int64_t>(r.le(8)));
        case Kind_::Float64: return Value(std::bit_cast<double>(r.le(8)));
        case Kind_::String: {
            auto s = r.take(r.le(4));
            return Value(std::string(s.begin(), s.end()));
        }
        case Kind_::Bytes: {
            auto s = r.take(r.le(4));
            return Value(Bytes{{s.begin(), s.end()}});
        }
        case Kind_::Object: return Value(decode_fields(r, t.object_name, table, depth + 1));
        case Kind_::List: {
            auto n = r.le(4);
            ListValue list;
            for (std::uint64_t i = 0; i < n; ++i) list.items.push_back(decode_value(r, *t.element, table, depth));
            return Value(std::move(list));
        }
    }
    throw Error(ErrorCode::ProtocolError, "bad field kind");
}

CommObject decode_fields(Reader& r, std::string_view type_name, const TypeTable& table, int depth) {
    if (depth > 64) throw Error(ErrorCode::ProtocolError, "nesting too deep");
    const model::CommObjectType* type = table.find(type_name);
    if (!type) throw Error(ErrorCode::ProtocolError, "unknown type '" + std::string(type_name) + "'");
    CommObject obj{std::string(type_name)};
    for (const auto& decl : type->fields) obj.set(decl.name, decode_value(r, decl.type, table, depth));
    return obj;
}

}  // namespace

ByteBuffer encode_payload(const CommObject& obj, const TypeTable& table) {
    ByteBuffer out;
    if (obj.type_name().empty()) return out;
    if (auto why = object_mismatch(obj, table)) throw Error(ErrorCode::TypeMismatch, *why);
    encode_fields(out, obj, table);
    return out;
}

CommObject decode_payload(std::string_view type_name, std::span<const std::uint8_t> bytes, const TypeTable& table) {
    if (type_name.empty()) {
        if (!bytes.empty()) throw Error(ErrorCode::ProtocolError, "payload without type");
        return CommObject{};
    }
    Reader r(bytes);
    CommObject obj = decode_fields(r, type_name, table, 0);
    if (!r.at_end()) throw Error(ErrorCode::ProtocolError, "trailing payload bytes");
    return obj;
}

ByteBuffer encode_frame(const Message& msg, const TypeTable& table) {
    const std::string& name = msg.payload.type_name();
    if (name.size() > 0xffff) throw Error(ErrorCode::InvalidArgument, "type name too long");
    ByteBuffer payload = encode_payload(msg.payload, table);
    std::size_t body = kFrameHeaderSize - 4 + name.size() + payload.size();
    if (body > kMaxFrameSize) throw Error(ErrorCode::InvalidArgument, "frame too large");

    ByteBuffer out;
    out.reserve(4 + body);
    put_be(out, body, 4);
    out.push_back(static_cast<std::uint8_t>(msg.op));
    out.push_back(static_cast<std::uint8_t>(msg.kind));
    put_be(out, msg.correlation, 8);
    put_be(out, name.size(), 2);
    out.insert(out.end(), name.begin(), name.end());
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

void FrameDecoder::feed(std::span<const std::uint8_t> bytes) {
    if (pos_ > 0 && pos_ == buf_.size()) {
        buf_.clear();
        pos_ = 0;
    }
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Message> FrameDecoder::next() {
    std::span<const std::uint8_t> avail(buf_.data() + pos_, buf_.size() - pos_);
    if (avail.size() < 4) return std::nullopt;
    std::uint32_t body = 0;
    for (int i = 0; i < 4; ++i) body = (body << 8) | avail[i];
    if (body < kFrameHeaderSize - 4) throw Error(ErrorCode::ProtocolError, "frame shorter than header");
    if (body > kMaxFrameSize) throw Error(ErrorCode::ProtocolError, "frame too large");
    if (avail.size() < 4 + std::size_t{body}) return std::nullopt;

    auto frame = avail.subspan(4, body);
    auto op = op_from_byte(frame[0]);
    auto kind = kind_from_byte(frame[1]);
    if (!op) throw Error(ErrorCode::ProtocolError, "unknown opcode");
    if (!kind) throw Error(ErrorCode::ProtocolError, "unknown message kind");
    std::uint64_t corr = 0;
    for (int i = 0; i < 8; ++i) corr = (corr << 8) | frame[2 + i];
    std::size_t name_len = (std::size_t{frame[10]} << 8) | frame[11];
    if (12 + name_len > frame.size()) throw Error(ErrorCode::ProtocolError, "type name overruns frame");
    std::string name(reinterpret_cast<const char*>(frame.data() + 12), name_len);

    Message msg{*op, *kind, corr, decode_payload(name, frame.subspan(12 + name_len), table_)};
    pos_ += 4 + body;
    return msg;
}

}  // namespace smartmars::patterns
