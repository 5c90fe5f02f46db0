#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "smartmars/model/types.hpp"

namespace smartmars::patterns {

struct Value;
struct Field;

struct Bytes {
    std::vector<std::uint8_t> data;
    friend bool operator==(const Bytes&, const Bytes&) = default;
};

/// Typed payload transmitted by a pattern. Fields are kept sorted by name,
/// so equality does not depend on assignment order.
class CommObject {
public:
    CommObject() = default;
    explicit CommObject(std::string type_name) : type_(std::move(type_name)) {}

    const std::string& type_name() const { return type_; }
    const std::vector<Field>& fields() const { return fields_; }

    CommObject& set(std::string_view name, Value value);
    const Value* find(std::string_view name) const;
    /// Throws Error(TypeMismatch) when the field is missing or of another kind.
    const Value& at(std::string_view name) const;

    bool get_bool(std::string_view name) const;
    std::int64_t get_int(std::string_view name) const;
    double get_float(std::string_view name) const;
    const std::string& get_string(std::string_view name) const;
    const CommObject& get_object(std::string_view name) const;
    const std::vector<Value>& get_list(std::string_view name) const;

    friend bool operator==(const CommObject& a, const CommObject& b);

private:
    std::string type_;
    std::vector<Field> fields_;
};

struct ListValue {
    std::vector<Value> items;
    friend bool operator==(const ListValue& a, const ListValue& b);
};

struct Value {
    using Data = std::variant<bool, std::int64_t, double, std::string, Bytes, CommObject, ListValue>;
    Data data;

    Value() : data(std::int64_t{0}) {}
    Value(bool b) : data(b) {}
    template <class I>
        requires(std::is_integral_v<I> && !std::is_same_v<I, bool>)
    Value(I i) : data(static_cast<std::int64_t>(i)) {}
    Value(double d) : data(d) {}
    Value(std::string s) : data(std::move(s)) {}
    Value(const char* s) : data(std::string(s)) {}
    Value(Bytes b) : data(std::move(b)) {}
    Value(CommObject o) : data(std::move(o)) {}
    Value(ListValue l) : data(std::move(l)) {}
    Value(std::vector<Value> items) : data(ListValue{std::move(items)}) {}

    model::FieldType::Kind kind() const;

    friend bool operator==(const Value& a, const Value& b) { return a.data == b.data; }
};

struct Field {
    std::string name;
    Value value;
    friend bool operator==(const Field&, const Field&) = default;
};

inline bool operator==(const CommObject& a, const CommObject& b) {
    return a.type_ == b.type_ && a.fields_ == b.fields_;
}
inline bool operator==(const ListValue& a, const ListValue& b) { return a.items == b.items; }

/// Immutable table of communication object types shared by all ports of a
/// system, including the builtin control message types.
class TypeTable {
public:
    TypeTable();
    explicit TypeTable(const std::vector<model::CommObjectType>& types);

    const model::CommObjectType* find(std::string_view name) const;
    void add(model::CommObjectType type);

private:
    std::map<std::string, model::CommObjectType, std::less<>> types_;
};

/// Names of the builtin control object types.
namespace builtin {
inline constexpr std::string_view kReject = "smartmars.Reject";
inline constexpr std::string_view kOpen = "smartmars.Open";
inline constexpr std::string_view kControl = "smartmars.Control";
inline constexpr std::string_view kControlResult = "smartmars.ControlResult";
}  // namespace builtin

/// First conformance problem of `value` against `type`, if any.
std::optional<std::string> value_mismatch(const Value& value, const model::FieldType& type, const TypeTable& table);
std::optional<std::string> object_mismatch(const CommObject& object, const TypeTable& table);

/// Throws Error(TypeMismatch) unless `object` is an instance of `expected_type`.
void require_conforms(const CommObject& object, std::string_view expected_type, const TypeTable& table);

/// Object of the given type with every field set to its zero value.
CommObject make_default(std::string_view type_name, const TypeTable& table);

}  // namespace smartmars::patterns
