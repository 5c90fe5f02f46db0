#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace smartmars::model {

/// Field type of a communication object member.
///
/// Primitive kinds carry no payload. `Object` names another communication
/// object type of the same model; `List` carries its element type.
struct FieldType {
    enum class Kind : std::uint8_t { Bool, Int64, Float64, String, Bytes, Object, List };

    Kind kind = Kind::Int64;
    std::string object_name;
    std::shared_ptr<const FieldType> element;

    static FieldType primitive(Kind k);
    static FieldType object(std::string name);
    static FieldType list(FieldType element);

    bool is_primitive() const { return kind != Kind::Object && kind != Kind::List; }
    std::string to_string() const;

    friend bool operator==(const FieldType& a, const FieldType& b);
};

/// Parses `bool`, `int64`, `float64`, `string`, `bytes`, `list<...>` or an object name.
std::optional<FieldType> parse_field_type(std::string_view text);

struct FieldDecl {
    std::string name;
    FieldType type;
    friend bool operator==(const FieldDecl&, const FieldDecl&) = default;
};

struct CommObjectType {
    std::string name;
    std::vector<FieldDecl> fields;

    const FieldDecl* find(std::string_view field) const;
    friend bool operator==(const CommObjectType&, const CommObjectType&) = default;
};

enum class Pattern : std::uint8_t { Send, Query, PushNewest, PushTimed, Event };
enum class Direction : std::uint8_t { Provided, Required };

std::string_view to_string(Pattern p);
std::string_view to_string(Direction d);
std::optional<Pattern> parse_pattern(std::string_view text);

/// A timeout that is either bounded (milliseconds) or unbounded.
struct TimeoutMs {
    std::optional<std::int64_t> bound;

    static TimeoutMs unbounded() { return {}; }
    static TimeoutMs millis(std::int64_t ms) { return {ms}; }
    bool is_unbounded() const { return !bound.has_value(); }
    friend bool operator==(const TimeoutMs&, const TimeoutMs&) = default;
};

struct QosParams {
    std::optional<std::int64_t> cycle_ms;   // push timed only
    std::optional<TimeoutMs> timeout;       // query and event only
    std::optional<std::int64_t> min_handling_ms;  // provided query: declared minimum handling time
    std::optional<std::int64_t> cycle_cost_ms;    // provided push timed: per-cycle execution cost
    friend bool operator==(const QosParams&, const QosParams&) = default;
};

struct ServicePortSpec {
    std::string name;
    Pattern pattern = Pattern::Send;
    Direction direction = Direction::Provided;
    std::optional<std::string> request_type;
    std::optional<std::string> answer_type;
    QosParams qos;
    friend bool operator==(const ServicePortSpec&, const ServicePortSpec&) = default;
};

struct TaskSpec {
    std::string name;
    bool is_realtime = false;
    bool is_periodic = false;
    std::optional<std::int64_t> period_ms;
    std::optional<std::int64_t> wcet_ms;
    std::int64_t priority = 0;  // larger is more urgent
    friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct ParamDecl {
    std::string key;
    FieldType type;
    friend bool operator==(const ParamDecl&, const ParamDecl&) = default;
};

struct RequiresRealtime {
    friend bool operator==(const RequiresRealtime&, const RequiresRealtime&) = default;
};
struct RequiresDevice {
    std::string device_class;
    std::int64_t count = 1;
    friend bool operator==(const RequiresDevice&, const RequiresDevice&) = default;
};
struct RequiresMemory {
    std::int64_t mb = 0;
    friend bool operator==(const RequiresMemory&, const RequiresMemory&) = default;
};
using Constraint = std::variant<RequiresRealtime, RequiresDevice, RequiresMemory>;

struct ComponentModel {
    std::string name;
    std::vector<ServicePortSpec> ports;
    std::vector<TaskSpec> tasks;
    std::vector<ParamDecl> params;
    std::vector<Constraint> constraints;

    const ServicePortSpec* find_port(std::string_view port) const;
    const TaskSpec* find_task(std::string_view task) const;
    const ParamDecl* find_param(std::string_view key) const;
    friend bool operator==(const ComponentModel&, const ComponentModel&) = default;
};

struct DeviceCount {
    std::string device_class;
    std::int64_t count = 1;
    friend bool operator==(const DeviceCount&, const DeviceCount&) = default;
};

struct PlatformDescription {
    std::string name;
    bool supports_realtime = false;
    std::int64_t memory_mb = 0;
    std::vector<DeviceCount> devices;
    std::int64_t cpu_count = 1;  // analysis treats every platform as one processor

    std::int64_t device_count(std::string_view device_class) const;
    friend bool operator==(const PlatformDescription&, const PlatformDescription&) = default;
};

struct Instance {
    std::string name;
    std::string component;
    std::string platform;
    friend bool operator==(const Instance&, const Instance&) = default;
};

/// `from_instance.from_port` is a required port, `to_instance.to_port` a provided one.
struct Wire {
    std::string from_instance;
    std::string from_port;
    std::string to_instance;
    std::string to_port;
    friend bool operator==(const Wire&, const Wire&) = default;
};

/// Deployment-time override; only the timeout of a required port can be reassigned.
struct QosOverride {
    std::string instance;
    std::string port;
    TimeoutMs timeout;
    friend bool operator==(const QosOverride&, const QosOverride&) = default;
};

struct DeploymentModel {
    std::vector<Instance> instances;
    std::vector<Wire> wires;
    std::vector<QosOverride> overrides;

    const Instance* find_instance(std::string_view name) const;
    friend bool operator==(const DeploymentModel&, const DeploymentModel&) = default;
};

/// Everything one model file can declare.
struct ModelDocument {
    std::vector<CommObjectType> types;
    std::vector<ComponentModel> components;
    std::vector<PlatformDescription> platforms;
    std::optional<DeploymentModel> deployment;

    const CommObjectType* find_type(std::string_view name) const;
    const ComponentModel* find_component(std::string_view name) const;
    const PlatformDescription* find_platform(std::string_view name) const;
    friend bool operator==(const ModelDocument&, const ModelDocument&) = default;
};

}  // namespace smartmars::model
