#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "smartmars/model/types.hpp"

namespace smartmars::model {

/// Raised by `parse_model` for malformed text. Line and column are 1-based.
class ModelError : public std::runtime_error {
public:
    enum class Kind { Syntax, UnresolvedReference, DuplicateName };

    ModelError(Kind kind, int line, int column, std::string name, const std::string& message);

    Kind kind() const noexcept { return kind_; }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }
    /// Offending name for reference/duplicate errors, offending token for syntax errors.
    const std::string& name() const noexcept { return name_; }

private:
    Kind kind_;
    int line_;
    int column_;
    std::string name_;
};

std::string_view to_string(ModelError::Kind kind);

/// Parses the canonical block format and resolves every cross reference
/// (object types, component and platform names, wire endpoints).
ModelDocument parse_model(std::string_view text);

/// Reads a file and parses it; I/O failures raise std::runtime_error.
ModelDocument load_model_file(const std::string& path);

/// Canonical text; `parse_model(serialize_model(d)) == d` for every parseable document.
std::string serialize_model(const ModelDocument& doc);

}  // namespace smartmars::model
