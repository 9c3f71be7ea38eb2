// SPDX-License-Identifier: Apache-2.0
// Minimal JSON-schema checker for the shipped OCPP payload schemas. Supports
// the keywords those files use: type, required, properties,
// additionalProperties, enum, maxLength, items and format "date-time".
#include <map>
#include <regex>

#include "evsim/ocpp.hpp"

namespace evsim {

namespace detail {
const std::map<std::string, std::string>& embedded_schemas();
}

namespace {

const std::map<OcppAction, Json>& schema_table() {
  static const std::map<OcppAction, Json> table = [] {
    std::map<OcppAction, Json> t;
    const auto& raw = detail::embedded_schemas();
    for (OcppAction a : kAllActions) {
      const auto it = raw.find(std::string(wire_action(a)));
      if (it == raw.end()) {
        throw std::logic_error("no schema shipped for " + std::string(wire_action(a)));
      }
      t.emplace(a, Json::parse(it->second));
    }
    return t;
  }();
  return table;
}

bool is_date_time(const std::string& s) {
  static const std::regex re(
      R"(\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:\d{2}))");
  return std::regex_match(s, re);
}

bool type_matches(const std::string& type, const Json& v) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "integer") return v.is_number_integer();
  if (type == "number") return v.is_number();
  if (type == "boolean") return v.is_boolean();
  return false;
}

ValidationResult check(const Json& schema, const Json& v, const std::string& path) {
  if (schema.contains("type") && !type_matches(schema["type"].get<std::string>(), v)) {
    return ValidationResult::violation(path, "type");
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const Json& e : schema["enum"]) found = found || e == v;
    if (!found) return ValidationResult::violation(path, "enum");
  }
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (schema.contains("maxLength") && s.size() > schema["maxLength"].get<std::size_t>()) {
      return ValidationResult::violation(path, "maxLength");
    }
    if (schema.value("format", "") == "date-time" && !is_date_time(s)) {
      return ValidationResult::violation(path, "format");
    }
  }
  if (v.is_array() && schema.contains("items")) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      ValidationResult r = check(schema["items"], v[i], path + "[" + std::to_string(i) + "]");
      if (!r.valid()) return r;
    }
  }
  if (v.is_object()) {
    const Json props = schema.value("properties", Json::object());
    if (schema.contains("required")) {
      for (const Json& req : schema["required"]) {
        const auto key = req.get<std::string>();
        if (!v.contains(key)) return ValidationResult::violation(path + "." + key, "required");
      }
    }
    const bool closed = schema.contains("additionalProperties") &&
                        schema["additionalProperties"].is_boolean() &&
                        !schema["additionalProperties"].get<bool>();
    for (const auto& [key, child] : v.items()) {
      if (!props.contains(key)) {
        if (closed) return ValidationResult::violation(path + "." + key, "additionalProperties");
        continue;
      }
      ValidationResult r = check(props[key], child, path + "." + key);
      if (!r.valid()) return r;
    }
  }
  return ValidationResult::ok();
}

}  // namespace

const Json& action_schema(OcppAction a) { return schema_table().at(a); }

ValidationResult validate_payload(OcppAction action, const Json& payload) {
  return check(action_schema(action), payload, "");
}

ValidationResult validate_message(std::string_view bytes) {
  OcppFrame f;
  try {
    f = decode_frame(bytes);
  } catch (const UnknownAction& e) {
    return {ValidationResult::Kind::UnknownAction, "", e.action()};
  } catch (const MalformedJson& e) {
    return {ValidationResult::Kind::MalformedJson, "", e.what()};
  }
  if (const Call* c = std::get_if<Call>(&f)) return validate_payload(c->action, c->payload);
  return ValidationResult::ok();
}

}  // namespace evsim
