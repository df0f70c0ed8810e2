#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pwsync/errors.hpp"
#include "pwsync/matrix.hpp"

namespace pwsync::cli {

/// Malformed config text, unknown keys, wrong value types.
class ConfigError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

struct KeyDoc {
  std::string_view section;
  std::string_view key;
  std::string_view help;
};

/// Every accepted `section.key`, in help order.
std::span<const KeyDoc> config_keys();

/// Help text listing every key, grouped by section.
std::string config_reference();

/// INI-style experiment config:
///
///   [section]
///   key = value      # value is JSON if it parses, else a bare string
///
/// Lines starting with '#' or ';' are comments.
class Config {
 public:
  static Config parse(std::string_view text, std::string_view origin = "<config>");
  static Config load(const std::string& path);

  /// Applies `section.key=value`, replacing any file value.
  void set(std::string_view assignment);

  bool has(std::string_view section, std::string_view key) const;
  bool has_section(std::string_view section) const;

  std::optional<double> number(std::string_view section, std::string_view key) const;
  double number(std::string_view section, std::string_view key, double fallback) const;
  std::optional<std::uint64_t> count(std::string_view section, std::string_view key) const;
  std::uint64_t count(std::string_view section, std::string_view key, std::uint64_t fallback) const;
  std::optional<std::string> text(std::string_view section, std::string_view key) const;
  std::string text(std::string_view section, std::string_view key, std::string_view fallback) const;
  bool flag(std::string_view section, std::string_view key, bool fallback) const;
  std::optional<Vector> vector(std::string_view section, std::string_view key) const;
  std::optional<std::vector<Vector>> rows(std::string_view section, std::string_view key) const;
  /// Scalar s -> s·I_n, flat list -> diagonal, nested list -> full n×n.
  std::optional<Matrix> matrix(std::string_view section, std::string_view key, std::size_t n) const;
  const nlohmann::json* raw(std::string_view section, std::string_view key) const;

 private:
  void put(std::string section, std::string key, std::string_view value, std::string_view where);

  std::map<std::string, std::map<std::string, nlohmann::json, std::less<>>, std::less<>> values_;
};

}  // namespace pwsync::cli
