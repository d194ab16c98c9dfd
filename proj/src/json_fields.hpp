#pragma once

// Field readers for the JSON input files. Every failure throws `Error` with
// a message "where: what", where `where` is the dotted path of the field.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace diamond::detail {

template <class Error>
struct JsonFields {
  using json = nlohmann::json;

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw Error(where + ": " + what);
  }

  static void check_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> required,
                         std::initializer_list<const char*> optional = {}) {
    if (!obj.is_object()) fail(where, "expected an object");
    std::set<std::string> allowed;
    for (const char* k : required) {
      allowed.insert(k);
      if (!obj.contains(k)) fail(where, std::string("missing field '") + k + "'");
    }
    for (const char* k : optional) allowed.insert(k);
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!allowed.count(it.key())) fail(where, "unknown field '" + it.key() + "'");
  }

  static double number(const json& v, const std::string& where) {
    if (!v.is_number()) fail(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(where, "expected a finite number");
    return x;
  }

  static double positive(const json& v, const std::string& where) {
    const double x = number(v, where);
    if (!(x > 0.0)) fail(where, "must be positive");
    return x;
  }

  static std::int64_t integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) fail(where, "expected an integer");
    return v.get<std::int64_t>();
  }

  static bool boolean(const json& v, const std::string& where) {
    if (!v.is_boolean()) fail(where, "expected true or false");
    return v.get<bool>();
  }

  static std::string text(const json& v, const std::string& where) {
    if (!v.is_string()) fail(where, "expected a string");
    return v.get<std::string>();
  }

  static std::vector<double> numbers(const json& v, const std::string& where) {
    if (!v.is_array()) fail(where, "expected an array of numbers");
    if (v.empty()) fail(where, "must not be empty");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(number(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
  }
};

}  // namespace diamond::detail
