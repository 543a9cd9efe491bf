#pragma once

#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "tessperc/errors.hpp"

namespace tessperc {

/// Reads a JSON object while recording which keys were consumed; finish() rejects the rest.
/// Errors carry the key path relative to this object.
class StrictObject {
 public:
  explicit StrictObject(const nlohmann::json& j) : j_(j) {
    if (!j.is_object()) throw ConfigKeyError({}, "expected a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const nlohmann::json& at(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigKeyError({key}, "missing required key '" + key + "'");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_number()) throw ConfigKeyError({key}, "'" + key + "' must be a number");
    return v.get<double>();
  }
  double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }
  double positive(const std::string& key) {
    double v = number(key);
    if (!(v > 0.0)) throw ConfigKeyError({key}, "'" + key + "' must be strictly positive");
    return v;
  }
  double positive_or(const std::string& key, double fallback) { return has(key) ? positive(key) : fallback; }

  std::int64_t integer(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_number_integer()) throw ConfigKeyError({key}, "'" + key + "' must be an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t integer_or(const std::string& key, std::int64_t fallback) {
    return has(key) ? integer(key) : fallback;
  }

  bool boolean_or(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    if (!v.is_boolean()) throw ConfigKeyError({key}, "'" + key + "' must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_string()) throw ConfigKeyError({key}, "'" + key + "' must be a string");
    return v.get<std::string>();
  }
  std::string string_or(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  std::vector<double> numbers(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_array()) throw ConfigKeyError({key}, "'" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigKeyError({key}, "'" + key + "' must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  //! Throws for the first key (in sorted order) that was never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigKeyError({it.key()}, "unknown key '" + it.key() + "'");
  }

 private:
  const nlohmann::json& j_;
  std::set<std::string> used_;
};

//! Rethrows a ConfigKeyError from a nested object with `prefix` prepended.
template <class Fn>
auto nested(const std::string& prefix, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigKeyError& e) {
    throw e.nested_in(prefix);
  }
}

}  // namespace tessperc
