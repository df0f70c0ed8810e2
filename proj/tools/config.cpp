#include "config.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

namespace pwsync::cli {

namespace {

constexpr std::array kKeys = {
    KeyDoc{"system", "name", "relay | pws_oscillator | sprott | bistable | affine_relay"},
    KeyDoc{"system", "A", "affine_relay: n×n matrix rows"},
    KeyDoc{"system", "b", "affine_relay: constant term, length n (default 0)"},
    KeyDoc{"system", "relays", "affine_relay: list of {\"gain\": [..], \"switching\": [..]}"},

    KeyDoc{"graph", "kind", "er | ring | path | complete | edges (diffusive layer L)"},
    KeyDoc{"graph", "N", "node count"},
    KeyDoc{"graph", "p", "er: edge probability"},
    KeyDoc{"graph", "k", "ring: neighbours on each side"},
    KeyDoc{"graph", "seed", "er: graph seed (default 0)"},
    KeyDoc{"graph", "edges", "edges: list of [i, j] pairs, 0-indexed"},
    KeyDoc{"graph", "d_kind", "second layer L_d: same (default) | er | ring | path | complete | edges"},
    KeyDoc{"graph", "d_p", "L_d er: edge probability"},
    KeyDoc{"graph", "d_k", "L_d ring: neighbours on each side"},
    KeyDoc{"graph", "d_seed", "L_d er: graph seed (default 0)"},
    KeyDoc{"graph", "d_edges", "L_d edges: list of [i, j] pairs"},

    KeyDoc{"coupling", "c", "diffusive gain (default 0)"},
    KeyDoc{"coupling", "cd", "discontinuous gain (default 0)"},
    KeyDoc{"coupling", "c_factor", "set c = c_factor·c* from [certify] instead of c"},
    KeyDoc{"coupling", "cd_factor", "set cd = cd_factor·c_d* from [certify] instead of cd"},
    KeyDoc{"coupling", "Gamma", "inner coupling matrix: scalar, diagonal list or rows (default I)"},
    KeyDoc{"coupling", "Gamma_d", "discontinuous inner matrix, same forms (default I)"},

    KeyDoc{"certify", "theorem", "t1 | t2 | c1 | t3 | t4"},
    KeyDoc{"certify", "Q", "QUAD matrix: scalar, diagonal list or rows"},
    KeyDoc{"certify", "Q_minus", "t2/t4: Q- (default Q - Q_prime)"},
    KeyDoc{"certify", "Q_prime", "t2/t4: symmetric Q'"},
    KeyDoc{"certify", "P", "QUAD weight matrix (default I)"},
    KeyDoc{"certify", "G", "t1/t2: coupling bound matrix (default sym(P·Gamma))"},
    KeyDoc{"certify", "m", "t3/t4: relaxed QUAD vector"},
    KeyDoc{"certify", "q", "c1: diagonal of Q'"},
    KeyDoc{"certify", "gamma", "c1: diagonal of Gamma (default diag of coupling.Gamma)"},
    KeyDoc{"certify", "lambda2", "override lambda_2(L) instead of building [graph]"},
    KeyDoc{"certify", "check_samples", "also falsify QUAD(P, Q) with this many samples (default 0 = off)"},
    KeyDoc{"certify", "check_radius", "sampling box [-r, r]^n (default 3)"},
    KeyDoc{"certify", "check_seed", "sampling seed (default 0)"},
    KeyDoc{"certify", "t_min", "sampled time range start (default 0)"},
    KeyDoc{"certify", "t_max", "sampled time range end (default 2·pi)"},

    KeyDoc{"integrate", "dt", "step size (default 1e-3)"},
    KeyDoc{"integrate", "t_end", "horizon (default 100 for simulate, 200 for sweep)"},
    KeyDoc{"integrate", "scheme", "rk4 (default) | euler"},
    KeyDoc{"integrate", "record_stride", "record every k-th step (default 10)"},
    KeyDoc{"integrate", "sign_at_zero", "value of sign(0) in [-1, 1] (default 0)"},
    KeyDoc{"integrate", "hysteresis", "hysteresis band for sign latches (default 0 = off)"},
    KeyDoc{"integrate", "window", "trailing fraction of the horizon for steady-state e_s (default 0.1)"},
    KeyDoc{"integrate", "write_states", "simulate: include node states in the CSV (default true)"},

    KeyDoc{"ics", "states", "explicit initial states: N lists of n values"},
    KeyDoc{"ics", "lo", "random box lower corner per coordinate (length n)"},
    KeyDoc{"ics", "hi", "random box upper corner per coordinate (length n)"},
    KeyDoc{"ics", "seed", "simulate: seed for the random box draw (default 0)"},

    KeyDoc{"sweep", "c_grid", "explicit ascending c values"},
    KeyDoc{"sweep", "cd_grid", "explicit ascending c_d values"},
    KeyDoc{"sweep", "c_range", "[lo, hi, count] evenly spaced (default [0, 2, 21])"},
    KeyDoc{"sweep", "cd_range", "[lo, hi, count] evenly spaced (default [0, 2, 21])"},
    KeyDoc{"sweep", "n_ic", "random initial conditions per cell (default 5)"},
    KeyDoc{"sweep", "seed", "master seed for per-run initial conditions (default 0)"},
    KeyDoc{"sweep", "sync_tol", "summary only: e_s below this counts as synchronized (default 1e-2)"},
};

bool known(std::string_view section, std::string_view key) {
  return std::any_of(kKeys.begin(), kKeys.end(), [&](const KeyDoc& d) { return d.section == section && d.key == key; });
}

bool known_section(std::string_view section) {
  return std::any_of(kKeys.begin(), kKeys.end(), [&](const KeyDoc& d) { return d.section == section; });
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// Drops a trailing `# comment` outside of quotes.
std::string strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    if (!quoted && s[i] == '#') return std::string(s.substr(0, i));
  }
  return std::string(s);
}

std::string name(std::string_view section, std::string_view key) { return fmt::format("{}.{}", section, key); }

[[noreturn]] void type_error(std::string_view section, std::string_view key, std::string_view expected,
                             const nlohmann::json& got) {
  throw ConfigError(fmt::format("{}: expected {}, got {}", name(section, key), expected, got.dump()));
}

double as_number(const nlohmann::json& j, std::string_view section, std::string_view key) {
  if (!j.is_number()) type_error(section, key, "a number", j);
  return j.get<double>();
}

Vector as_vector(const nlohmann::json& j, std::string_view section, std::string_view key) {
  if (!j.is_array()) type_error(section, key, "a list of numbers", j);
  Vector v;
  for (const auto& e : j) v.push_back(as_number(e, section, key));
  return v;
}

}  // namespace

std::span<const KeyDoc> config_keys() { return kKeys; }

std::string config_reference() {
  std::string out = "Config keys (INI sections; values are JSON or bare strings):\n";
  std::string_view current;
  for (const KeyDoc& d : kKeys) {
    if (d.section != current) {
      current = d.section;
      out += fmt::format("  [{}]\n", current);
    }
    out += fmt::format("    {:<14} {}\n", d.key, d.help);
  }
  return out;
}

void Config::put(std::string section, std::string key, std::string_view value, std::string_view where) {
  if (!known_section(section)) throw ConfigError(fmt::format("{}: unknown section [{}]", where, section));
  if (!known(section, key)) throw ConfigError(fmt::format("{}: unknown key {}", where, name(section, key)));
  nlohmann::json j = nlohmann::json::parse(value, nullptr, false);
  if (j.is_discarded()) j = std::string(value);
  values_[std::move(section)][std::move(key)] = std::move(j);
}

Config Config::parse(std::string_view text, std::string_view origin) {
  Config cfg;
  std::string section;
  std::istringstream in{std::string(text)};
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    const std::string where = fmt::format("{}:{}", origin, lineno);
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    s = trim(strip_comment(s));
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(fmt::format("{}: unterminated section header", where));
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      if (!known_section(section)) throw ConfigError(fmt::format("{}: unknown section [{}]", where, section));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("{}: expected 'key = value'", where));
    if (section.empty()) throw ConfigError(fmt::format("{}: key outside of any [section]", where));
    std::string key = trim(std::string_view(s).substr(0, eq));
    std::string value = trim(std::string_view(s).substr(eq + 1));
    if (cfg.has(section, key)) throw ConfigError(fmt::format("{}: duplicate key {}", where, name(section, key)));
    cfg.put(section, std::move(key), value, where);
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

void Config::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq)
    throw ConfigError(fmt::format("override '{}' is not of the form section.key=value", assignment));
  put(trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
      trim(assignment.substr(eq + 1)), "--set");
}

const nlohmann::json* Config::raw(std::string_view section, std::string_view key) const {
  const auto s = values_.find(section);
  if (s == values_.end()) return nullptr;
  const auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

bool Config::has(std::string_view section, std::string_view key) const { return raw(section, key) != nullptr; }

bool Config::has_section(std::string_view section) const { return values_.find(section) != values_.end(); }

std::optional<double> Config::number(std::string_view section, std::string_view key) const {
  const auto* j = raw(section, key);
  if (!j) return std::nullopt;
  return as_number(*j, section, key);
}

double Config::number(std::string_view section, std::string_view key, double fallback) const {
  return number(section, key).value_or(fallback);
}

std::optional<std::uint64_t> Config::count(std::string_view section, std::string_view key) const {
  const auto* j = raw(section, key);
  if (!j) return std::nullopt;
  if (!j->is_number_unsigned() && !(j->is_number_integer() && j->get<std::int64_t>() >= 0))
    type_error(section, key, "a nonnegative integer", *j);
  return j->get<std::uint64_t>();
}

std::uint64_t Config::count(std::string_view section, std::string_view key, std::uint64_t fallback) const {
  return count(section, key).value_or(fallback);
}

std::optional<std::string> Config::text(std::string_view section, std::string_view key) const {
  const auto* j = raw(section, key);
  if (!j) return std::nullopt;
  if (!j->is_string()) type_error(section, key, "a string", *j);
  return j->get<std::string>();
}

std::string Config::text(std::string_view section, std::string_view key, std::string_view fallback) const {
  return text(section, key).value_or(std::string(fallback));
}

bool Config::flag(std::string_view section, std::string_view key, bool fallback) const {
  const auto* j = raw(section, key);
  if (!j) return fallback;
  if (!j->is_boolean()) type_error(section, key, "true or false", *j);
  return j->get<bool>();
}

std::optional<Vector> Config::vector(std::string_view section, std::string_view key) const {
  const auto* j = raw(section, key);
  if (!j) return std::nullopt;
  return as_vector(*j, section, key);
}

std::optional<std::vector<Vector>> Config::rows(std::string_view section, std::string_view key) const {
  const auto* j = raw(section, key);
  if (!j) return std::nullopt;
  if (!j->is_array()) type_error(section, key, "a list of lists", *j);
  std::vector<Vector> out;
  for (const auto& r : *j) out.push_back(as_vector(r, section, key));
  return out;
}

std::optional<Matrix> Config::matrix(std::string_view section, std::string_view key, std::size_t n) const {
  const auto* j = raw(section, key);
  if (!j) return std::nullopt;
  if (j->is_number()) return j->get<double>() * Matrix::identity(n);
  if (!j->is_array()) type_error(section, key, "a scalar, a diagonal list or a list of rows", *j);
  if (!j->empty() && (*j)[0].is_number()) {
    const Vector d = as_vector(*j, section, key);
    if (d.size() != n) throw ConfigError(fmt::format("{}: diagonal has {} entries, expected {}", name(section, key), d.size(), n));
    return Matrix::diagonal(d);
  }
  const auto r = *rows(section, key);
  if (r.size() != n) throw ConfigError(fmt::format("{}: {} rows, expected {}", name(section, key), r.size(), n));
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (r[i].size() != n) throw ConfigError(fmt::format("{}: row {} has {} entries, expected {}", name(section, key), i, r[i].size(), n));
    for (std::size_t k = 0; k < n; ++k) m(i, k) = r[i][k];
  }
  return m;
}

}  // namespace pwsync::cli
