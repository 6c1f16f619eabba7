#pragma once

// Collects every schema violation in a JSON document instead of stopping at
// the first one. Paths look like "grid.steps" or "init.mean[1]".

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mkv/error.hpp"

namespace mkv::cfg {

using nlohmann::json;

class Diagnostics {
 public:
  void error(const std::string& path, const std::string& message) {
    messages_.push_back(path.empty() ? message : path + ": " + message);
  }
  bool ok() const noexcept { return messages_.empty(); }
  const std::vector<std::string>& messages() const noexcept { return messages_; }

  void throw_if_failed() const {
    if (ok()) return;
    std::string all;
    for (const auto& m : messages_) all += (all.empty() ? "" : "\n") + m;
    throw ConfigError(all);
  }

 private:
  std::vector<std::string> messages_;
};

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
inline std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

// Reports keys of obj outside allowed.
inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& path,
                           Diagnostics& diag) {
  if (!obj.is_object()) return;
  for (const auto& [key, value] : obj.items())
    if (!allowed.contains(key)) diag.error(join(path, key), "unknown key '" + key + "'");
}

inline bool expect_object(const json& j, const std::string& path, Diagnostics& diag) {
  if (j.is_object()) return true;
  diag.error(path, "expected an object");
  return false;
}

inline std::optional<double> number(const json& j, const std::string& path, Diagnostics& diag) {
  if (!j.is_number()) {
    diag.error(path, "expected a number");
    return std::nullopt;
  }
  return j.get<double>();
}

inline std::optional<std::uint64_t> unsigned_integer(const json& j, const std::string& path, Diagnostics& diag) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
    diag.error(path, "expected a non-negative integer");
    return std::nullopt;
  }
  return j.get<std::uint64_t>();
}

inline std::optional<std::string> string(const json& j, const std::string& path, Diagnostics& diag) {
  if (!j.is_string()) {
    diag.error(path, "expected a string");
    return std::nullopt;
  }
  return j.get<std::string>();
}

inline std::optional<std::vector<double>> vector(const json& j, const std::string& path, Diagnostics& diag,
                                                 std::optional<std::size_t> size = std::nullopt) {
  if (!j.is_array()) {
    diag.error(path, "expected an array of numbers");
    return std::nullopt;
  }
  std::vector<double> out;
  bool good = true;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      diag.error(index(path, i), "expected a number");
      good = false;
    } else {
      out.push_back(j[i].get<double>());
    }
  }
  if (good && size && out.size() != *size) {
    diag.error(path, "expected " + std::to_string(*size) + " entries, got " + std::to_string(out.size()));
    return std::nullopt;
  }
  if (!good) return std::nullopt;
  return out;
}

inline std::optional<std::vector<std::vector<double>>> matrix(const json& j, const std::string& path,
                                                              Diagnostics& diag,
                                                              std::optional<std::size_t> cols = std::nullopt) {
  if (!j.is_array() || j.empty()) {
    diag.error(path, "expected a non-empty array of arrays");
    return std::nullopt;
  }
  std::vector<std::vector<double>> out;
  bool good = true;
  for (std::size_t i = 0; i < j.size(); ++i) {
    auto row = vector(j[i], index(path, i), diag, cols);
    if (row) out.push_back(std::move(*row));
    else good = false;
  }
  if (!good) return std::nullopt;
  return out;
}

// 1-based line of a byte offset, for parse diagnostics.
inline std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace mkv::cfg
