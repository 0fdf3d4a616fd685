#pragma once

#include <string>

#include "riflex/errors.hpp"

#include <json.hpp>

namespace riflex {

/// Structural validator for the subset of JSON Schema the bundled schemas
/// use: type, properties, required, additionalProperties (boolean), items,
/// enum, minimum, exclusiveMinimum, maximum, minItems.
class SchemaValidator {
 public:
  explicit SchemaValidator(nlohmann::json schema) : schema_(std::move(schema)) {}

  /// Returns true when the instance conforms; otherwise false with the first
  /// violation in `error`.
  bool validate(const nlohmann::json& instance, std::string& error) const {
    error.clear();
    return check(schema_, instance, "$", error);
  }

 private:
  static bool type_matches(const std::string& type, const nlohmann::json& v) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "number") return v.is_number();
    if (type == "integer") return v.is_number_integer() || v.is_number_unsigned();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    throw ValueError("schema uses unsupported type '" + type + "'");
  }

  static bool check(const nlohmann::json& schema, const nlohmann::json& v, const std::string& path,
                    std::string& error) {
    if (schema.contains("type")) {
      const auto& type = schema.at("type");
      bool ok = false;
      if (type.is_string()) {
        ok = type_matches(type.get<std::string>(), v);
      } else {
        for (const auto& t : type)
          if (type_matches(t.get<std::string>(), v)) {
            ok = true;
            break;
          }
      }
      if (!ok) {
        error = path + ": type mismatch (expected " + type.dump() + ")";
        return false;
      }
    }
    if (schema.contains("enum")) {
      bool ok = false;
      for (const auto& candidate : schema.at("enum"))
        if (candidate == v) {
          ok = true;
          break;
        }
      if (!ok) {
        error = path + ": value not in enum " + schema.at("enum").dump();
        return false;
      }
    }
    if (v.is_number()) {
      const double x = v.get<double>();
      if (schema.contains("minimum") && x < schema.at("minimum").get<double>()) {
        error = path + ": below minimum";
        return false;
      }
      if (schema.contains("exclusiveMinimum") && x <= schema.at("exclusiveMinimum").get<double>()) {
        error = path + ": at or below exclusiveMinimum";
        return false;
      }
      if (schema.contains("maximum") && x > schema.at("maximum").get<double>()) {
        error = path + ": above maximum";
        return false;
      }
    }
    if (v.is_object()) {
      if (schema.contains("required"))
        for (const auto& key : schema.at("required"))
          if (!v.contains(key.get<std::string>())) {
            error = path + ": missing required key '" + key.get<std::string>() + "'";
            return false;
          }
      const bool allow_extra =
          !schema.contains("additionalProperties") || schema.at("additionalProperties") != false;
      const auto props =
          schema.contains("properties") ? schema.at("properties") : nlohmann::json::object();
      for (const auto& [key, child] : v.items()) {
        if (props.contains(key)) {
          if (!check(props.at(key), child, path + "." + key, error)) return false;
        } else if (!allow_extra) {
          error = path + ": unexpected key '" + key + "'";
          return false;
        }
      }
    }
    if (v.is_array()) {
      if (schema.contains("minItems") && v.size() < schema.at("minItems").get<std::size_t>()) {
        error = path + ": fewer than minItems entries";
        return false;
      }
      if (schema.contains("items")) {
        for (std::size_t i = 0; i < v.size(); ++i)
          if (!check(schema.at("items"), v[i], path + "[" + std::to_string(i) + "]", error))
            return false;
      }
    }
    return true;
  }

  nlohmann::json schema_;
};

}  // namespace riflex
