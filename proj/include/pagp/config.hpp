#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pagp/algorithms.hpp"

namespace pagp {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r'))
    --e;
  return s.substr(b, e - b);
}

inline bool parse_bool_field(const std::string& v, std::size_t row) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ParseError("config: expected a boolean, got '" + v + "'", row);
}

inline int parse_int_field(const std::string& v, std::size_t row) {
  const double d = parse_double_field(v, "config value", row);
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d)
    throw ParseError("config: expected an integer, got '" + v + "'", row);
  return i;
}

}  // namespace detail

// One key=value assignment from a config file; `row` is the 1-based line.
struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t row = 0;
};

// Parses the key=value config text: one assignment per line, blank lines and
// lines starting with '#' ignored. Duplicate keys are an error.
inline std::vector<ConfigEntry> parse_config_text(const std::string& text) {
  std::vector<ConfigEntry> entries;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError("config: expected key=value, got '" + t + "'", row);
    ConfigEntry e;
    e.key = detail::trim(t.substr(0, eq));
    e.value = detail::trim(t.substr(eq + 1));
    e.row = row;
    if (e.key.empty())
      throw ParseError("config: empty key", row);
    if (!seen.insert(e.key).second)
      throw ParseError("config: duplicate key '" + e.key + "'", row);
    entries.push_back(std::move(e));
  }
  return entries;
}

// Applies one assignment to the run configuration. Key names mirror the
// RunConfig fields, flattened for nested structures. Unknown keys are an
// error by contract. `rho = auto` switches on empirical coupling estimation.
inline void apply_config_entry(RunConfig& cfg, const ConfigEntry& e) {
  const auto num = [&] {
    return detail::parse_double_field(e.value, e.key.c_str(), e.row);
  };
  const auto integer = [&] { return detail::parse_int_field(e.value, e.row); };
  const auto boolean = [&] { return detail::parse_bool_field(e.value, e.row); };
  const auto ensure_net = [&]() -> NetPlan& {
    if (!cfg.net) cfg.net = NetPlan{};
    return *cfg.net;
  };

  if (e.key == "env_kind") {
    if (e.value == "synthetic") cfg.env.kind = EnvKind::synthetic;
    else if (e.value == "finite_arm") cfg.env.kind = EnvKind::finite_arm;
    else if (e.value == "embedded_grid") cfg.env.kind = EnvKind::embedded_grid;
    else
      throw ParseError("config: unknown env_kind '" + e.value + "'", e.row);
  } else if (e.key == "dim") {
    cfg.env.domain.dim = integer();
  } else if (e.key == "side") {
    cfg.env.domain.side = num();
  } else if (e.key == "eta_sq") {
    cfg.env.noise.eta_sq = num();
  } else if (e.key == "eta_ml_sq") {
    cfg.env.noise.eta_ml_sq = num();
  } else if (e.key == "flip_lo" || e.key == "flip_hi") {
    // Comma-separated coordinates, one per dimension.
    std::vector<double> coords;
    std::string field;
    std::istringstream vs(e.value);
    while (std::getline(vs, field, ','))
      coords.push_back(
          detail::parse_double_field(detail::trim(field), e.key.c_str(), e.row));
    if (coords.empty())
      throw ParseError("config: empty point for '" + e.key + "'", e.row);
    Point p(static_cast<Eigen::Index>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i)
      p[static_cast<Eigen::Index>(i)] = coords[i];
    if (!cfg.env.sign_flip) cfg.env.sign_flip = FlipBox{};
    (e.key == "flip_lo" ? cfg.env.sign_flip->lo : cfg.env.sign_flip->hi) =
        std::move(p);
  } else if (e.key == "arm_table") {
    cfg.env.arm_table_path = e.value;
  } else if (e.key == "planted_corr") {
    cfg.env.planted_corr = num();
  } else if (e.key == "length_scale") {
    cfg.kernel.length_scale = num();
  } else if (e.key == "signal_var") {
    cfg.kernel.signal_var = num();
  } else if (e.key == "rho") {
    if (e.value == "auto") {
      cfg.rho_auto = true;
    } else {
      cfg.rho_auto = false;
      cfg.coupling.rho = num();
    }
  } else if (e.key == "env_rho") {
    cfg.env_rho = num();
  } else if (e.key == "horizon") {
    cfg.horizon = integer();
  } else if (e.key == "net_epsilon") {
    ensure_net().epsilon = num();
  } else if (e.key == "net_replicates") {
    ensure_net().replicates = integer();
  } else if (e.key == "net_cover_support") {
    ensure_net().cover_support = boolean();
  } else if (e.key == "beta_mode") {
    if (e.value == "theoretical") cfg.beta.mode = BetaConfig::Mode::theoretical;
    else if (e.value == "fixed") cfg.beta.mode = BetaConfig::Mode::fixed;
    else
      throw ParseError("config: unknown beta_mode '" + e.value + "'", e.row);
  } else if (e.key == "delta") {
    cfg.beta.delta = num();
  } else if (e.key == "a") {
    cfg.beta.a = num();
  } else if (e.key == "b") {
    cfg.beta.b = num();
  } else if (e.key == "fixed_beta") {
    cfg.beta.fixed_beta = num();
  } else if (e.key == "algorithm") {
    cfg.algorithm = algorithm_from_name(e.value);
  } else if (e.key == "seed") {
    const double v = num();
    if (v < 0 || v != std::floor(v))
      throw ParseError("config: seed must be a nonnegative integer", e.row);
    cfg.seed = static_cast<std::uint64_t>(v);
  } else if (e.key == "random_init") {
    cfg.random_init = boolean();
  } else if (e.key == "grid_per_dim") {
    cfg.grid_per_dim = integer();
  } else {
    throw InputError("config: unknown key '" + e.key + "'");
  }
}

inline RunConfig config_from_text(const std::string& text) {
  RunConfig cfg;
  for (const auto& e : parse_config_text(text)) apply_config_entry(cfg, e);
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_text(buf.str());
}

}  // namespace pagp
