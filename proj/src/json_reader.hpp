#pragma once

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "condot/errors.hpp"

namespace condot {

// Reads known keys of one JSON object and rejects everything else.
class ObjectReader {
  using json = nlohmann::json;

 public:
  ObjectReader(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw Error(Errc::ConfigError, where("") + "expected an object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw Error(Errc::ConfigError, where(key) + "wrong type");
    }
  }

  template <typename E>
  void get_enum(const std::string& key, E& out, E (*parse)(const std::string&)) {
    std::string s;
    get(key, s);
    if (s.empty()) return;
    try {
      out = parse(s);
    } catch (const Error& e) {
      throw Error(Errc::ConfigError, where(key) + e.what());
    }
  }

  void require(const std::string& key) const {
    if (!j_.contains(key)) throw Error(Errc::ConfigError, where(key) + "missing required key");
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw Error(Errc::ConfigError, where(item.key()) + "unknown key");
    }
  }

 private:
  std::string where(const std::string& key) const {
    return prefix_ + key + (key.empty() ? "" : ": ");
  }

  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};


}  // namespace condot
