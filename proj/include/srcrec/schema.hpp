#pragma once

#include <json.hpp>

#include <string>

namespace srcrec {

// Validates `doc` against a small JSON-schema subset: type (single name or
// list), properties, required, items, enum, minimum, and boolean
// additionalProperties. Returns true when valid; otherwise false with the
// offending path and reason in *err.
bool schema_validate(const nlohmann::json& schema, const nlohmann::json& doc,
                     std::string* err);

}  // namespace srcrec
