#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "smartmars/model/types.hpp"
#include "smartmars/patterns/comm_object.hpp"

namespace smartmars::component {

/// Typed key/value configuration of one component, checked against the
/// declared parameter schema.
class ParamSet {
public:
    using Hook = std::function<void(const std::string& key, const patterns::Value& value)>;

    ParamSet(std::vector<model::ParamDecl> schema, std::shared_ptr<const patterns::TypeTable> types);

    /// Throws UnknownKey or TypeMismatch; on success notifies every hook
    /// on the calling thread.
    void set(const std::string& key, patterns::Value value);
    std::optional<patterns::Value> get(const std::string& key) const;
    const model::ParamDecl* decl(const std::string& key) const;
    const std::vector<model::ParamDecl>& schema() const { return schema_; }
    void on_change(Hook hook);

private:
    std::vector<model::ParamDecl> schema_;
    std::shared_ptr<const patterns::TypeTable> types_;
    mutable std::mutex mu_;
    std::map<std::string, patterns::Value> values_;
    std::vector<Hook> hooks_;
};

/// Wire form of a parameter value: the payload of a one-field object whose
/// field has the declared type.
std::vector<std::uint8_t> encode_param(const patterns::Value& value, const model::FieldType& type,
                                       const patterns::TypeTable& table);
patterns::Value decode_param(const std::vector<std::uint8_t>& bytes, const model::FieldType& type,
                             const patterns::TypeTable& table);

}  // namespace smartmars::component
