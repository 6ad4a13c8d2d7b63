#pragma once

// Internal helpers shared by config and checkpoint serialization. Emission is
// hand-rolled so files are deterministic byte-for-byte, with doubles printed
// at 17 significant digits for exact round trips.

#include <cstdint>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddimlab/config.hpp"
#include "ddimlab/csv.hpp"

namespace ddimlab {

class StrictReader {
 public:
  /// Owns the document; child readers share that ownership, so any reader
  /// stays valid wherever it is moved.
  StrictReader(nlohmann::json j, std::string where)
      : root_(std::make_shared<const nlohmann::json>(std::move(j))), j_(root_.get()), where_(std::move(where)) {
    if (!j_->is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  bool has(const char* key) const { return j_->contains(key); }

  double num(const char* key, double def) {
    if (!take(key)) return def;
    const auto& v = j_->at(key);
    if (!v.is_number()) throw ConfigError(where_ + "." + key + ": expected a number");
    return v.get<double>();
  }

  int integer(const char* key, int def) {
    if (!take(key)) return def;
    const auto& v = j_->at(key);
    if (!v.is_number_integer()) throw ConfigError(where_ + "." + key + ": expected an integer");
    return v.get<int>();
  }

  std::uint64_t uinteger(const char* key, std::uint64_t def) {
    if (!take(key)) return def;
    const auto& v = j_->at(key);
    if (!v.is_number_unsigned() && !v.is_number_integer()) {
      throw ConfigError(where_ + "." + key + ": expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const char* key, bool def) {
    if (!take(key)) return def;
    const auto& v = j_->at(key);
    if (!v.is_boolean()) throw ConfigError(where_ + "." + key + ": expected a boolean");
    return v.get<bool>();
  }

  std::string str(const char* key, const std::string& def) {
    if (!take(key)) return def;
    const auto& v = j_->at(key);
    if (!v.is_string()) throw ConfigError(where_ + "." + key + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<double> vec_double(const char* key, std::vector<double> def) {
    if (!take(key)) return def;
    const auto& v = j_->at(key);
    if (!v.is_array()) throw ConfigError(where_ + "." + key + ": expected an array");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(where_ + "." + key + ": expected numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<int> vec_int(const char* key, std::vector<int> def) {
    if (!take(key)) return def;
    const auto& v = j_->at(key);
    if (!v.is_array()) throw ConfigError(where_ + "." + key + ": expected an array");
    std::vector<int> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) throw ConfigError(where_ + "." + key + ": expected integers");
      out.push_back(e.get<int>());
    }
    return out;
  }

  std::vector<std::vector<double>> vec_vec_double(const char* key, std::vector<std::vector<double>> def) {
    if (!take(key)) return def;
    const auto& v = j_->at(key);
    if (!v.is_array()) throw ConfigError(where_ + "." + key + ": expected an array of arrays");
    std::vector<std::vector<double>> out;
    for (const auto& row : v) {
      if (!row.is_array()) throw ConfigError(where_ + "." + key + ": expected an array of arrays");
      std::vector<double> r;
      for (const auto& e : row) {
        if (!e.is_number()) throw ConfigError(where_ + "." + key + ": expected numbers");
        r.push_back(e.get<double>());
      }
      out.push_back(std::move(r));
    }
    return out;
  }

  /// Child object reader; absent key yields a reader over an empty object.
  StrictReader child(const char* key) {
    static const auto empty = std::make_shared<const nlohmann::json>(nlohmann::json::object());
    if (!take(key)) return StrictReader(empty, empty.get(), where_ + "." + key);
    const nlohmann::json& v = j_->at(key);
    if (!v.is_object()) throw ConfigError(where_ + "." + key + ": expected an object");
    return StrictReader(root_, &v, where_ + "." + key);
  }

  /// Rejects any key that was never consumed.
  void finish() const {
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (consumed_.find(it.key()) == consumed_.end()) {
        throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
      }
    }
  }

 private:
  StrictReader(std::shared_ptr<const nlohmann::json> root, const nlohmann::json* node, std::string where)
      : root_(std::move(root)), j_(node), where_(std::move(where)) {
    if (!j_->is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool take(const char* key) {
    consumed_.insert(key);
    return j_->contains(key);
  }
  std::shared_ptr<const nlohmann::json> root_;
  const nlohmann::json* j_;
  std::string where_;
  std::set<std::string> consumed_;
};

nlohmann::json parse_json(const std::string& text, const std::string& where);

// -- deterministic emission --------------------------------------------------

inline std::string jstr(const std::string& s) {
  return nlohmann::json(s).dump();
}

inline std::string jarr(const std::vector<double>& v) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << format_value(v[i]);
  os << "]";
  return os.str();
}

inline std::string jarr(const std::vector<int>& v) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << "]";
  return os.str();
}

inline std::string jarr2(const std::vector<std::vector<double>>& v) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << jarr(v[i]);
  os << "]";
  return os.str();
}

/// Tiny object builder with insertion-ordered keys.
class JsonObj {
 public:
  JsonObj& field(const std::string& key, const std::string& raw) {
    parts_.push_back(jstr(key) + ":" + raw);
    return *this;
  }
  JsonObj& num(const std::string& key, double v) { return field(key, format_value(v)); }
  JsonObj& num(const std::string& key, int v) { return field(key, std::to_string(v)); }
  JsonObj& num(const std::string& key, std::uint64_t v) { return field(key, std::to_string(v)); }
  JsonObj& boolean(const std::string& key, bool v) { return field(key, v ? "true" : "false"); }
  JsonObj& str(const std::string& key, const std::string& v) { return field(key, jstr(v)); }

  std::string str() const {
    std::ostringstream os;
    os << "{";
    for (std::size_t i = 0; i < parts_.size(); ++i) os << (i ? "," : "") << parts_[i];
    os << "}";
    return os.str();
  }

 private:
  std::vector<std::string> parts_;
};

}  // namespace ddimlab
