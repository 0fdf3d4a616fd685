#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "riflex/diagnostics.hpp"
#include "riflex/errors.hpp"
#include "riflex/norepeat.hpp"
#include "riflex/rope.hpp"
#include "riflex/serialize.hpp"
#include "riflex/strategies.hpp"

#include <json.hpp>

namespace riflex {

/// Everything the CLI needs: the model's rope axes, optional per-axis
/// strategy blocks, and defaults for the simulator and the NoRepeat metric.
struct ToolConfig {
  std::string name;
  std::string description;
  ModelRopeConfig model;
  std::map<AxisId, int> intrinsic_k;
  std::map<AxisId, StrategyInvocation> strategies;

  std::optional<std::size_t> positions;
  double alias_threshold = 0.999;
  std::optional<std::size_t> min_separation;
  std::optional<std::vector<int>> component_subset;

  std::optional<NoRepeatConfig> norepeat;

  std::optional<int> intrinsic_for(AxisId id) const {
    auto it = intrinsic_k.find(id);
    if (it == intrinsic_k.end()) return std::nullopt;
    return it->second;
  }
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void config_fail(const std::string& path, const std::string& what) {
  throw ConfigError("config field '" + path + "': " + what);
}

inline void reject_unknown_keys(const json& obj, const std::string& path,
                                const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) config_fail(path + "." + key, "unknown key");
}

inline const json& require(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) config_fail(path + "." + key, "missing required field");
  return obj.at(key);
}

inline std::int64_t get_int(const json& v, const std::string& path) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) config_fail(path, "expected an integer");
  return v.get<std::int64_t>();
}

inline double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) config_fail(path, "expected a number");
  return v.get<double>();
}

inline std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) config_fail(path, "expected a string");
  return v.get<std::string>();
}

inline bool get_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) config_fail(path, "expected a boolean");
  return v.get<bool>();
}

inline RopeAxis parse_axis(const json& node, const std::string& path,
                           std::map<AxisId, int>& intrinsic_out) {
  if (!node.is_object()) config_fail(path, "expected an object");
  reject_unknown_keys(node, path, {"axis", "d_prime", "base", "thetas", "train_len", "intrinsic_k"});
  RopeAxis axis;
  axis.id = [&] {
    try {
      return axis_from_string(get_string(require(node, path, "axis"), path + ".axis"));
    } catch (const ValueError& e) {
      config_fail(path + ".axis", e.what());
    }
  }();
  const std::int64_t d_prime = get_int(require(node, path, "d_prime"), path + ".d_prime");
  if (d_prime < 2 || d_prime % 2 != 0) config_fail(path + ".d_prime", "must be even and >= 2");
  axis.train_len = get_int(require(node, path, "train_len"), path + ".train_len");
  if (axis.train_len < 2) config_fail(path + ".train_len", "must be >= 2");

  const bool has_base = node.contains("base");
  const bool has_thetas = node.contains("thetas");
  if (has_base == has_thetas)
    config_fail(path, "exactly one of 'base' and 'thetas' must be given");
  if (has_base) {
    const double base = get_number(node.at("base"), path + ".base");
    if (!(base > 0.0)) config_fail(path + ".base", "must be positive");
    axis.spec = make_frequencies(base, static_cast<int>(d_prime));
  } else {
    const json& arr = node.at("thetas");
    if (!arr.is_array()) config_fail(path + ".thetas", "expected an array");
    if (arr.size() != static_cast<std::size_t>(d_prime / 2))
      config_fail(path + ".thetas",
                  "expected " + std::to_string(d_prime / 2) + " entries, got " +
                      std::to_string(arr.size()));
    std::vector<double> thetas;
    thetas.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const double t = get_number(arr[i], path + ".thetas[" + std::to_string(i) + "]");
      if (!(t > 0.0)) config_fail(path + ".thetas[" + std::to_string(i) + "]", "must be positive");
      thetas.push_back(t);
    }
    axis.spec = FrequencySpec::from_thetas(std::move(thetas));
  }

  if (node.contains("intrinsic_k")) {
    const std::int64_t k = get_int(node.at("intrinsic_k"), path + ".intrinsic_k");
    if (k < 1 || k > d_prime / 2)
      config_fail(path + ".intrinsic_k", "must lie in [1, " + std::to_string(d_prime / 2) + "]");
    intrinsic_out[axis.id] = static_cast<int>(k);
  }
  return axis;
}

inline StrategyInvocation parse_strategy(const json& node, const std::string& path,
                                         std::int64_t train_len) {
  if (!node.is_object()) config_fail(path, "expected an object");
  reject_unknown_keys(node, path,
                      {"name", "scale", "target_len", "alpha", "beta", "total_timesteps",
                       "switch_timestep", "timestep", "k"});
  StrategyInvocation inv;
  try {
    inv.kind = strategy_from_string(get_string(require(node, path, "name"), path + ".name"));
  } catch (const ValueError& e) {
    config_fail(path + ".name", e.what());
  }

  const bool has_scale = node.contains("scale");
  const bool has_target = node.contains("target_len");
  if (has_scale && has_target)
    config_fail(path, "give either 'scale' or 'target_len', not both");
  if (has_scale) {
    inv.scale = get_number(node.at("scale"), path + ".scale");
    if (!(inv.scale >= 1.0)) config_fail(path + ".scale", "must be >= 1");
  } else if (has_target) {
    const std::int64_t target = get_int(node.at("target_len"), path + ".target_len");
    if (target < train_len) config_fail(path + ".target_len", "must be >= train_len");
    inv.scale = static_cast<double>(target) / static_cast<double>(train_len);
  }

  if (node.contains("alpha")) inv.yarn_params.alpha = get_number(node.at("alpha"), path + ".alpha");
  if (node.contains("beta")) inv.yarn_params.beta = get_number(node.at("beta"), path + ".beta");
  if (!(inv.yarn_params.alpha < inv.yarn_params.beta))
    config_fail(path + ".alpha", "yarn thresholds require alpha < beta");

  if (node.contains("total_timesteps")) {
    const std::int64_t total =
        get_int(node.at("total_timesteps"), path + ".total_timesteps");
    if (total < 1) config_fail(path + ".total_timesteps", "must be >= 1");
    TasrParams tp = TasrParams::with_default_switch(total);
    if (node.contains("switch_timestep")) {
      tp.switch_timestep = get_int(node.at("switch_timestep"), path + ".switch_timestep");
      if (tp.switch_timestep < 0 || tp.switch_timestep > total)
        config_fail(path + ".switch_timestep", "must lie in [0, total_timesteps]");
    }
    inv.tasr_params = tp;
  } else if (node.contains("switch_timestep")) {
    config_fail(path + ".switch_timestep", "requires total_timesteps");
  }
  if (node.contains("timestep"))
    inv.timestep = get_int(node.at("timestep"), path + ".timestep");

  if (node.contains("k")) {
    const std::int64_t k = get_int(node.at("k"), path + ".k");
    if (k < 1) config_fail(path + ".k", "must be >= 1");
    inv.k = static_cast<int>(k);
  }
  return inv;
}

}  // namespace detail

inline ToolConfig parse_config(const std::string& text, const std::string& origin = "<string>") {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports a byte offset; turn it into line and column.
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(column) +
                      ": JSON parse error: " + e.what());
  }
  if (!root.is_object()) throw ConfigError(origin + ": top level must be an object");
  detail::reject_unknown_keys(root, "$",
                              {"name", "description", "model", "strategy", "simulate", "norepeat"});

  ToolConfig cfg;
  if (root.contains("name")) cfg.name = detail::get_string(root.at("name"), "$.name");
  if (root.contains("description"))
    cfg.description = detail::get_string(root.at("description"), "$.description");

  const auto& model = detail::require(root, "$", "model");
  if (!model.is_object()) detail::config_fail("$.model", "expected an object");
  detail::reject_unknown_keys(model, "$.model", {"axes"});
  const auto& axes = detail::require(model, "$.model", "axes");
  if (!axes.is_array() || axes.empty()) detail::config_fail("$.model.axes", "expected a non-empty array");
  for (std::size_t i = 0; i < axes.size(); ++i)
    cfg.model.axes.push_back(detail::parse_axis(
        axes[i], "$.model.axes[" + std::to_string(i) + "]", cfg.intrinsic_k));
  try {
    cfg.model.validate();
  } catch (const Error& e) {
    detail::config_fail("$.model.axes", e.what());
  }

  if (root.contains("strategy")) {
    const auto& strategy = root.at("strategy");
    if (!strategy.is_object()) detail::config_fail("$.strategy", "expected an object");
    for (const auto& [axis_name, block] : strategy.items()) {
      AxisId id;
      try {
        id = axis_from_string(axis_name);
      } catch (const ValueError& e) {
        detail::config_fail("$.strategy." + axis_name, e.what());
      }
      if (!cfg.model.has_axis(id))
        detail::config_fail("$.strategy." + axis_name, "config has no such axis");
      cfg.strategies[id] = detail::parse_strategy(block, "$.strategy." + axis_name,
                                                  cfg.model.axis(id).train_len);
    }
  }

  if (root.contains("simulate")) {
    const auto& sim = root.at("simulate");
    if (!sim.is_object()) detail::config_fail("$.simulate", "expected an object");
    detail::reject_unknown_keys(
        sim, "$.simulate", {"positions", "alias_threshold", "min_separation", "component_subset"});
    if (sim.contains("positions")) {
      const std::int64_t p = detail::get_int(sim.at("positions"), "$.simulate.positions");
      if (p < 1) detail::config_fail("$.simulate.positions", "must be >= 1");
      cfg.positions = static_cast<std::size_t>(p);
    }
    if (sim.contains("alias_threshold")) {
      cfg.alias_threshold = detail::get_number(sim.at("alias_threshold"), "$.simulate.alias_threshold");
      if (!(cfg.alias_threshold > 0.0) || cfg.alias_threshold > 1.0)
        detail::config_fail("$.simulate.alias_threshold", "must lie in (0, 1]");
    }
    if (sim.contains("min_separation")) {
      const std::int64_t m = detail::get_int(sim.at("min_separation"), "$.simulate.min_separation");
      if (m < 1) detail::config_fail("$.simulate.min_separation", "must be >= 1");
      cfg.min_separation = static_cast<std::size_t>(m);
    }
    if (sim.contains("component_subset")) {
      const auto& arr = sim.at("component_subset");
      if (!arr.is_array() || arr.empty())
        detail::config_fail("$.simulate.component_subset", "expected a non-empty array");
      std::vector<int> subset;
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::int64_t j =
            detail::get_int(arr[i], "$.simulate.component_subset[" + std::to_string(i) + "]");
        if (j < 1)
          detail::config_fail("$.simulate.component_subset[" + std::to_string(i) + "]",
                              "must be >= 1");
        subset.push_back(static_cast<int>(j));
      }
      cfg.component_subset = std::move(subset);
    }
  }

  if (root.contains("norepeat")) {
    const auto& nr = root.at("norepeat");
    if (!nr.is_object()) detail::config_fail("$.norepeat", "expected an object");
    detail::reject_unknown_keys(nr, "$.norepeat",
                                {"expected_period", "threshold", "search_window", "normalize"});
    NoRepeatConfig nrc;
    nrc.expected_period =
        detail::get_int(detail::require(nr, "$.norepeat", "expected_period"),
                        "$.norepeat.expected_period");
    if (nrc.expected_period < 1) detail::config_fail("$.norepeat.expected_period", "must be >= 1");
    if (nr.contains("threshold")) {
      nrc.threshold = detail::get_number(nr.at("threshold"), "$.norepeat.threshold");
      if (!(nrc.threshold > 0.0)) detail::config_fail("$.norepeat.threshold", "must be positive");
    }
    if (nr.contains("search_window")) {
      const std::int64_t w = detail::get_int(nr.at("search_window"), "$.norepeat.search_window");
      if (w < 0) detail::config_fail("$.norepeat.search_window", "must be non-negative");
      nrc.search_window = w;
    }
    if (nr.contains("normalize"))
      nrc.normalize_per_pixel = detail::get_bool(nr.at("normalize"), "$.norepeat.normalize");
    cfg.norepeat = nrc;
  }
  return cfg;
}

inline ToolConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

/// The fully-validated configuration with every default materialized, in the
/// fixed deterministic format.
inline std::string effective_config_json(const ToolConfig& cfg) {
  JsonWriter w;
  w.begin_object();
  w.key("name").value(cfg.name);
  w.key("description").value(cfg.description);
  w.key("model").begin_object();
  w.key("axes").begin_array();
  for (const auto& axis : cfg.model.axes) {
    w.begin_object();
    w.key("axis").value(to_string(axis.id));
    w.key("d_prime").value(axis.spec.d_prime);
    w.key("base");
    if (axis.spec.base)
      w.value(*axis.spec.base);
    else
      w.null();
    w.key("thetas");
    detail::write_thetas(w, axis.spec.thetas);
    w.key("train_len").value(axis.train_len);
    const auto k = cfg.intrinsic_for(axis.id);
    w.key("intrinsic_k");
    if (k)
      w.value(*k);
    else
      w.null();
    w.key("intrinsic_period");
    if (k)
      w.value(period(axis.spec.theta(*k)));
    else
      w.null();
    w.end_object();
  }
  w.end_array();
  w.end_object();

  w.key("strategy").begin_object();
  for (const auto& [id, inv] : cfg.strategies) {
    w.key(to_string(id)).begin_object();
    w.key("name").value(to_string(inv.kind));
    w.key("scale").value(inv.scale);
    if (inv.kind == StrategyKind::Yarn) {
      w.key("alpha").value(inv.yarn_params.alpha);
      w.key("beta").value(inv.yarn_params.beta);
    }
    if (inv.tasr_params) {
      w.key("total_timesteps").value(inv.tasr_params->total_timesteps);
      w.key("switch_timestep").value(inv.tasr_params->switch_timestep);
      w.key("timestep").value(inv.timestep);
    }
    w.key("k");
    if (inv.k)
      w.value(*inv.k);
    else
      w.null();
    w.end_object();
  }
  w.end_object();

  w.key("simulate").begin_object();
  w.key("positions");
  if (cfg.positions)
    w.value(*cfg.positions);
  else
    w.null();  // derived per run: ceil(scale * train_len)
  w.key("alias_threshold").value(cfg.alias_threshold);
  w.key("min_separation");
  if (cfg.min_separation)
    w.value(*cfg.min_separation);
  else
    w.null();  // derived per run: ceil(train_len / 4)
  w.key("component_subset");
  if (cfg.component_subset) {
    w.begin_array();
    for (int j : *cfg.component_subset) w.value(j);
    w.end_array();
  } else {
    w.null();
  }
  w.end_object();

  w.key("norepeat");
  if (cfg.norepeat) {
    w.begin_object();
    w.key("expected_period").value(cfg.norepeat->expected_period);
    w.key("threshold").value(cfg.norepeat->threshold);
    w.key("search_window").value(cfg.norepeat->window());
    w.key("normalize").value(cfg.norepeat->normalize_per_pixel);
    w.end_object();
  } else {
    w.null();
  }
  w.end_object();
  return w.str();
}

}  // namespace riflex
