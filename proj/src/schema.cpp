#include "srcrec/schema.hpp"

namespace srcrec {

namespace {

using nlohmann::json;

bool fail(std::string* err, const std::string& path, const std::string& why) {
    if (err) *err = path + ": " + why;
    return false;
}

bool type_matches(const std::string& name, const json& doc) {
    if (name == "object") return doc.is_object();
    if (name == "array") return doc.is_array();
    if (name == "string") return doc.is_string();
    if (name == "integer") return doc.is_number_integer() || doc.is_number_unsigned();
    if (name == "number") return doc.is_number();
    if (name == "boolean") return doc.is_boolean();
    if (name == "null") return doc.is_null();
    return false;
}

bool check(const json& schema, const json& doc, const std::string& path, std::string* err) {
    if (!schema.is_object()) return fail(err, path, "schema node is not an object");

    if (auto it = schema.find("type"); it != schema.end()) {
        bool ok = false;
        if (it->is_string()) {
            ok = type_matches(it->get<std::string>(), doc);
        } else if (it->is_array()) {
            for (const auto& t : *it) ok = ok || type_matches(t.get<std::string>(), doc);
        }
        if (!ok) return fail(err, path, "type mismatch");
    }

    if (auto it = schema.find("enum"); it != schema.end()) {
        bool ok = false;
        for (const auto& v : *it) ok = ok || (v == doc);
        if (!ok) return fail(err, path, "value not in enum");
    }

    if (auto it = schema.find("minimum"); it != schema.end()) {
        if (doc.is_number() && doc.get<double>() < it->get<double>())
            return fail(err, path, "below minimum");
    }

    if (auto it = schema.find("required"); it != schema.end()) {
        for (const auto& k : *it) {
            std::string key = k.get<std::string>();
            if (!doc.is_object() || !doc.contains(key))
                return fail(err, path, "missing required key '" + key + "'");
        }
    }

    if (auto props = schema.find("properties"); props != schema.end() && doc.is_object()) {
        for (auto it = props->begin(); it != props->end(); ++it) {
            if (!doc.contains(it.key())) continue;
            if (!check(it.value(), doc.at(it.key()), path + "." + it.key(), err)) return false;
        }
        if (auto ap = schema.find("additionalProperties");
            ap != schema.end() && ap->is_boolean() && !ap->get<bool>()) {
            for (auto it = doc.begin(); it != doc.end(); ++it)
                if (!props->contains(it.key()))
                    return fail(err, path, "unexpected key '" + it.key() + "'");
        }
    }

    if (auto items = schema.find("items"); items != schema.end() && doc.is_array()) {
        for (size_t i = 0; i < doc.size(); ++i)
            if (!check(*items, doc[i], path + "[" + std::to_string(i) + "]", err)) return false;
    }

    return true;
}

}  // namespace

bool schema_validate(const nlohmann::json& schema, const nlohmann::json& doc,
                     std::string* err) {
    return check(schema, doc, "$", err);
}

}  // namespace srcrec
