#include "smartmars/model/types.hpp"

#include <algorithm>

namespace smartmars::model {

FieldType FieldType::primitive(Kind k) {
    FieldType t;
    t.kind = k;
    return t;
}

FieldType FieldType::object(std::string name) {
    FieldType t;
    t.kind = Kind::Object;
    t.object_name = std::move(name);
    return t;
}

FieldType FieldType::list(FieldType element) {
    FieldType t;
    t.kind = Kind::List;
    t.element = std::make_shared<const FieldType>(std::move(element));
    return t;
}

std::string FieldType::to_string() const {
    switch (kind) {
        case Kind::Bool: return "bool";
        case Kind::Int64: return "int64";
        case Kind::Float64: return "float64";
        case Kind::String: return "string";
        case Kind::Bytes: return "bytes";
        case Kind::Object: return object_name;
        case Kind::List: return "list<" + (element ? element->to_string() : std::string("?")) + ">";
    }
    return "?";
}

bool operator==(const FieldType& a, const FieldType& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case FieldType::Kind::Object: return a.object_name == b.object_name;
        case FieldType::Kind::List:
            if (!a.element || !b.element) return a.element == b.element;
            return *a.element == *b.element;
        default: return true;
    }
}

std::optional<FieldType> parse_field_type(std::string_view text) {
    using K = FieldType::Kind;
    if (text == "bool") return FieldType::primitive(K::Bool);
    if (text == "int64") return FieldType::primitive(K::Int64);
    if (text == "float64") return FieldType::primitive(K::Float64);
    if (text == "string") return FieldType::primitive(K::String);
    if (text == "bytes") return FieldType::primitive(K::Bytes);
    constexpr std::string_view list_open = "list<";
    if (text.starts_with(list_open) && text.ends_with(">")) {
        auto inner = parse_field_type(text.substr(list_open.size(), text.size() - list_open.size() - 1));
        if (!inner) return std::nullopt;
        return FieldType::list(std::move(*inner));
    }
    if (text.empty()) return std::nullopt;
    auto ident_char = [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
               c == '.';
    };
    if (!std::all_of(text.begin(), text.end(), ident_char)) return std::nullopt;
    return FieldType::object(std::string(text));
}

const FieldDecl* CommObjectType::find(std::string_view field) const {
    for (const auto& f : fields)
        if (f.name == field) return &f;
    return nullptr;
}

std::string_view to_string(Pattern p) {
    switch (p) {
        case Pattern::Send: return "send";
        case Pattern::Query: return "query";
        case Pattern::PushNewest: return "pushnewest";
        case Pattern::PushTimed: return "pushtimed";
        case Pattern::Event: return "event";
    }
    return "?";
}

std::string_view to_string(Direction d) { return d == Direction::Provided ? "provided" : "required"; }

std::optional<Pattern> parse_pattern(std::string_view text) {
    for (auto p : {Pattern::Send, Pattern::Query, Pattern::PushNewest, Pattern::PushTimed, Pattern::Event})
        if (to_string(p) == text) return p;
    return std::nullopt;
}

namespace {
template <class Range>
auto find_named(const Range& range, std::string_view name) -> decltype(&*std::begin(range)) {
    for (const auto& item : range)
        if (item.name == name) return &item;
    return nullptr;
}
}  // namespace

const ServicePortSpec* ComponentModel::find_port(std::string_view port) const { return find_named(ports, port); }
const TaskSpec* ComponentModel::find_task(std::string_view task) const { return find_named(tasks, task); }

const ParamDecl* ComponentModel::find_param(std::string_view key) const {
    for (const auto& p : params)
        if (p.key == key) return &p;
    return nullptr;
}

std::int64_t PlatformDescription::device_count(std::string_view device_class) const {
    std::int64_t total = 0;
    for (const auto& d : devices)
        if (d.device_class == device_class) total += d.count;
    return total;
}

const Instance* DeploymentModel::find_instance(std::string_view name) const { return find_named(instances, name); }

const CommObjectType* ModelDocument::find_type(std::string_view name) const { return find_named(types, name); }
const ComponentModel* ModelDocument::find_component(std::string_view name) const {
    return find_named(components, name);
}
const PlatformDescription* ModelDocument::find_platform(std::string_view name) const {
    return find_named(platforms, name);
}

}  // namespace smartmars::model
