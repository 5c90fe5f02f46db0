#include "smartmars/patterns/comm_object.hpp"

#include <algorithm>

#include "smartmars/error.hpp"

namespace smartmars::patterns {

using model::FieldType;
using Kind = FieldType::Kind;

CommObject& CommObject::set(std::string_view name, Value value) {
    auto it = std::lower_bound(fields_.begin(), fields_.end(), name,
                               [](const Field& f, std::string_view n) { return f.name < n; });
    if (it != fields_.end() && it->name == name)
        it->value = std::move(value);
    else
        fields_.insert(it, Field{std::string(name), std::move(value)});
    return *this;
}

const Value* CommObject::find(std::string_view name) const {
    auto it = std::lower_bound(fields_.begin(), fields_.end(), name,
                               [](const Field& f, std::string_view n) { return f.name < n; });
    return (it != fields_.end() && it->name == name) ? &it->value : nullptr;
}

const Value& CommObject::at(std::string_view name) const {
    const Value* v = find(name);
    if (!v) throw Error(ErrorCode::TypeMismatch, type_ + " has no field '" + std::string(name) + "'");
    return *v;
}

namespace {
template <class T>
const T& get_as(const CommObject& o, std::string_view name) {
    const T* p = std::get_if<T>(&o.at(name).data);
    if (!p) throw Error(ErrorCode::TypeMismatch, o.type_name() + "." + std::string(name) + " has another kind");
    return *p;
}
}  // namespace

bool CommObject::get_bool(std::string_view name) const { return get_as<bool>(*this, name); }
std::int64_t CommObject::get_int(std::string_view name) const { return get_as<std::int64_t>(*this, name); }
double CommObject::get_float(std::string_view name) const { return get_as<double>(*this, name); }
const std::string& CommObject::get_string(std::string_view name) const { return get_as<std::string>(*this, name); }
const CommObject& CommObject::get_object(std::string_view name) const { return get_as<CommObject>(*this, name); }
const std::vector<Value>& CommObject::get_list(std::string_view name) const {
    return get_as<ListValue>(*this, name).items;
}

model::FieldType::Kind Value::kind() const {
    switch (data.index()) {
        case 0: return Kind::Bool;
        case 1: return Kind::Int64;
        case 2: return Kind::Float64;
        case 3: return Kind::String;
        case 4: return Kind::Bytes;
        case 5: return Kind::Object;
        default: return Kind::List;
    }
}

TypeTable::TypeTable() {
    auto prim = FieldType::primitive;
    add({std::string(builtin::kReject), {{"code", prim(Kind::Int64)}, {"reason", prim(Kind::String)}}});
    add({std::string(builtin::kOpen),
         {{"provider", prim(Kind::String)},
          {"pattern", prim(Kind::String)},
          {"request", prim(Kind::String)},
          {"answer", prim(Kind::String)}}});
    add({std::string(builtin::kControl),
         {{"command", prim(Kind::String)},
          {"target", prim(Kind::String)},
          {"argument", prim(Kind::String)},
          {"value", prim(Kind::Bytes)}}});
    add({std::string(builtin::kControlResult), {{"code", prim(Kind::Int64)}, {"message", prim(Kind::String)}}});
}

TypeTable::TypeTable(const std::vector<model::CommObjectType>& types) : TypeTable() {
    for (const auto& t : types) add(t);
}

const model::CommObjectType* TypeTable::find(std::string_view name) const {
    auto it = types_.find(name);
    return it == types_.end() ? nullptr : &it->second;
}

void TypeTable::add(model::CommObjectType type) {
    std::string name = type.name;
    types_.insert_or_assign(std::move(name), std::move(type));
}

std::optional<std::string> value_mismatch(const Value& value, const FieldType& type, const TypeTable& table) {
    if (value.kind() != type.kind) return "expected " + type.to_string();
    if (type.kind == Kind::Object) {
        const auto& obj = std::get<CommObject>(value.data);
        if (obj.type_name() != type.object_name)
            return "expected " + type.object_name + ", got " + obj.type_name();
        return object_mismatch(obj, table);
    }
    if (type.kind == Kind::List) {
        for (const auto& item : std::get<ListValue>(value.data).items)
            if (auto why = value_mismatch(item, *type.element, table)) return "list item: " + *why;
    }
    return std::nullopt;
}

std::optional<std::string> object_mismatch(const CommObject& object, const TypeTable& table) {
    const model::CommObjectType* type = table.find(object.type_name());
    if (!type) return "unknown type '" + object.type_name() + "'";
    if (object.fields().size() != type->fields.size())
        return object.type_name() + " expects " + std::to_string(type->fields.size()) + " fields";
    for (const auto& decl : type->fields) {
        const Value* v = object.find(decl.name);
        if (!v) return object.type_name() + "." + decl.name + " missing";
        if (auto why = value_mismatch(*v, decl.type, table)) return object.type_name() + "." + decl.name + ": " + *why;
    }
    return std::nullopt;
}

void require_conforms(const CommObject& object, std::string_view expected_type, const TypeTable& table) {
    if (object.type_name() != expected_type)
        throw Error(ErrorCode::TypeMismatch,
                    "expected " + std::string(expected_type) + ", got " + (object.type_name().empty() ? "<untyped>" : object.type_name()));
    if (auto why = object_mismatch(object, table)) throw Error(ErrorCode::TypeMismatch, *why);
}

namespace {
Value default_value(const FieldType& t, const TypeTable& table) {
    switch (t.kind) {
        case Kind::Bool: return Value(false);
        case Kind::Int64: return Value(std::int64_t{0});
        case Kind::Float64: return Value(0.0);
        case Kind::String: return Value(std::string());
        case Kind::Bytes: return Value(Bytes{});
        case Kind::Object: return Value(make_default(t.object_name, table));
        case Kind::List: return Value(ListValue{});
    }
    return Value();
}
}  // namespace

CommObject make_default(std::string_view type_name, const TypeTable& table) {
    const model::CommObjectType* type = table.find(type_name);
    if (!type) throw Error(ErrorCode::TypeMismatch, "unknown type '" + std::string(type_name) + "'");
    CommObject obj{std::string(type_name)};
    for (const auto& f : type->fields) obj.set(f.name, default_value(f.type, table));
    return obj;
}

}  // namespace smartmars::patterns
