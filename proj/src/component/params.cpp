#include "smartmars/component/params.hpp"

#include "smartmars/error.hpp"
#include "smartmars/patterns/codec.hpp"

namespace smartmars::component {

using patterns::Value;

namespace {

constexpr std::string_view kParamValue = "smartmars.ParamValue";

patterns::TypeTable with_param_type(const patterns::TypeTable& table, const model::FieldType& type) {
    patterns::TypeTable t = table;
    t.add({std::string(kParamValue), {{"value", type}}});
    return t;
}

}  // namespace

ParamSet::ParamSet(std::vector<model::ParamDecl> schema, std::shared_ptr<const patterns::TypeTable> types)
    : schema_(std::move(schema)), types_(std::move(types)) {
    if (!types_) types_ = std::make_shared<patterns::TypeTable>();
}

const model::ParamDecl* ParamSet::decl(const std::string& key) const {
    for (const auto& d : schema_)
        if (d.key == key) return &d;
    return nullptr;
}

void ParamSet::set(const std::string& key, Value value) {
    const auto* d = decl(key);
    if (!d) throw Error(ErrorCode::UnknownKey, key);
    if (auto why = patterns::value_mismatch(value, d->type, *types_))
        throw Error(ErrorCode::TypeMismatch, key + ": " + *why);
    std::vector<Hook> hooks;
    {
        std::lock_guard lk(mu_);
        values_[key] = value;
        hooks = hooks_;
    }
    for (auto& h : hooks) h(key, value);
}

std::optional<Value> ParamSet::get(const std::string& key) const {
    std::lock_guard lk(mu_);
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

void ParamSet::on_change(Hook hook) {
    std::lock_guard lk(mu_);
    hooks_.push_back(std::move(hook));
}

std::vector<std::uint8_t> encode_param(const Value& value, const model::FieldType& type,
                                       const patterns::TypeTable& table) {
    auto t = with_param_type(table, type);
    patterns::CommObject obj{std::string(kParamValue)};
    obj.set("value", value);
    return patterns::encode_payload(obj, t);
}

Value decode_param(const std::vector<std::uint8_t>& bytes, const model::FieldType& type,
                   const patterns::TypeTable& table) {
    auto t = with_param_type(table, type);
    auto obj = patterns::decode_payload(kParamValue, bytes, t);
    return obj.at("value");
}

}  // namespace smartmars::component
