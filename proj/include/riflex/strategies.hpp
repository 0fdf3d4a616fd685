#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "riflex/diagnostics.hpp"
#include "riflex/errors.hpp"
#include "riflex/rope.hpp"

namespace riflex {

/// Extrapolation from a training length L to s*L. The scale may be
/// non-integer (2.3x runs are common), so the target length is kept as a
/// derived real rather than a stored integer.
struct ExtrapolationParams {
  std::int64_t train_len = 0;
  double scale = 1.0;

  double target_len() const { return scale * static_cast<double>(train_len); }

  void validate() const {
    if (train_len < 1) throw ValueError("train_len must be >= 1");
    if (!(scale >= 1.0)) throw ValueError("scale must be >= 1");
  }

  static ExtrapolationParams from_lengths(std::int64_t train_len, std::int64_t target_len) {
    if (train_len < 1) throw ValueError("train_len must be >= 1");
    if (target_len < train_len) throw ValueError("target_len must be >= train_len");
    return {train_len, static_cast<double>(target_len) / static_cast<double>(train_len)};
  }

  static ExtrapolationParams from_scale(std::int64_t train_len, double scale) {
    if (train_len < 1) throw ValueError("train_len must be >= 1");
    if (!(scale >= 1.0)) throw ValueError("scale must be >= 1");
    return {train_len, scale};
  }
};

/// Ramp thresholds on the cycle count r_j. gamma is 0 below alpha (full
/// interpolation), 1 above beta (keep), linear in between.
struct YarnParams {
  double alpha = 1.0;
  double beta = 32.0;

  void validate() const {
    if (!(alpha < beta)) throw ValueError("yarn thresholds require alpha < beta");
  }
};

/// Timestep-switched scheme: PI above the switch timestep, NTK at or below it.
struct TasrParams {
  std::int64_t total_timesteps = 0;
  std::int64_t switch_timestep = 0;

  void validate() const {
    if (total_timesteps < 1) throw ValueError("tasr total_timesteps must be >= 1");
    if (switch_timestep < 0 || switch_timestep > total_timesteps)
      throw ValueError("tasr switch_timestep must lie in [0, total_timesteps]");
  }

  static TasrParams with_default_switch(std::int64_t total_timesteps) {
    TasrParams p{total_timesteps, total_timesteps / 2};
    p.validate();
    return p;
  }
};

/// Outcome of applying one strategy to one spectrum. `modified_indices` holds
/// exactly the 1-based j where thetas_new differs from the input.
/// `result_base` is set when thetas_new is itself base-generated (pe keeps the
/// input base, ntk produces lambda*b); blended or per-component edits leave it
/// empty.
struct StrategyResult {
  std::string strategy_name;
  std::vector<double> thetas_before;
  std::vector<double> thetas_new;
  std::set<int> modified_indices;
  bool no_op = false;
  std::optional<double> result_base;
  std::vector<std::string> warnings;

  FrequencySpec to_spec() const {
    return FrequencySpec::from_thetas(thetas_new, result_base);
  }
};

namespace detail {

inline StrategyResult make_result(std::string name, const FrequencySpec& spec,
                                  std::vector<double> thetas_new) {
  StrategyResult r;
  r.strategy_name = std::move(name);
  r.thetas_before = spec.thetas;
  r.thetas_new = std::move(thetas_new);
  for (std::size_t i = 0; i < r.thetas_new.size(); ++i)
    if (r.thetas_new[i] != r.thetas_before[i]) r.modified_indices.insert(static_cast<int>(i + 1));
  return r;
}

}  // namespace detail

/// Position extrapolation: the spectrum is left untouched.
inline StrategyResult pe(const FrequencySpec& spec, const ExtrapolationParams&) {
  spec.validate();
  StrategyResult r = detail::make_result("pe", spec, spec.thetas);
  r.result_base = spec.base;
  return r;
}

/// Position interpolation: every frequency divided by s.
inline StrategyResult pi(const FrequencySpec& spec, const ExtrapolationParams& params) {
  spec.validate();
  params.validate();
  std::vector<double> scaled(spec.thetas);
  for (double& t : scaled) t /= params.scale;
  return detail::make_result("pi", spec, std::move(scaled));
}

/// Base rescaling: theta_j = (lambda*b)^(-2(j-1)/d') with
/// lambda = s^(d'/(d'-2)). Keeps theta_1 and interpolates the tail, with the
/// last component landing exactly on theta/s in algebra.
inline StrategyResult ntk(const FrequencySpec& spec, const ExtrapolationParams& params) {
  spec.validate();
  params.validate();
  if (spec.d_prime == 2)
    throw DimensionError("ntk: undefined for d_prime = 2 (exponent d'/(d'-2) degenerates)");
  if (!spec.base)
    throw ValueError("ntk: spectrum has no recorded base to rescale");
  const double lambda =
      std::pow(params.scale, static_cast<double>(spec.d_prime) / (spec.d_prime - 2.0));
  const FrequencySpec rescaled = make_frequencies(lambda * *spec.base, spec.d_prime);
  StrategyResult r = detail::make_result("ntk", spec, rescaled.thetas);
  r.result_base = lambda * *spec.base;
  return r;
}

/// Per-component blend gamma*theta + (1-gamma)*theta/s with gamma ramped on
/// the cycle count r_j over the training length.
inline StrategyResult yarn(const FrequencySpec& spec, const ExtrapolationParams& params,
                           const YarnParams& yp) {
  spec.validate();
  params.validate();
  yp.validate();
  std::vector<double> blended(spec.thetas.size());
  for (std::size_t i = 0; i < spec.thetas.size(); ++i) {
    const double theta = spec.thetas[i];
    const double r = repeat_count(theta, static_cast<double>(params.train_len));
    double gamma;
    if (r > yp.beta)
      gamma = 1.0;
    else if (r < yp.alpha)
      gamma = 0.0;
    else
      gamma = (r - yp.alpha) / (yp.beta - yp.alpha);
    if (gamma == 1.0)
      blended[i] = theta;
    else if (gamma == 0.0)
      blended[i] = theta / params.scale;
    else
      blended[i] = gamma * theta + (1.0 - gamma) * (theta / params.scale);
  }
  StrategyResult r = detail::make_result("yarn", spec, std::move(blended));
  // Admissibility r_{d'/2} <= alpha < beta <= r_1 is advisory: published runs
  // use alpha=1, beta=32 regardless of the spectrum.
  const double r_first = repeat_count(spec.thetas.front(), static_cast<double>(params.train_len));
  const double r_last = repeat_count(spec.thetas.back(), static_cast<double>(params.train_len));
  if (r_last > yp.alpha)
    r.warnings.push_back("yarn: r_{d'/2} = " + std::to_string(r_last) +
                         " exceeds alpha; ramp never reaches full interpolation");
  if (r_first < yp.beta)
    r.warnings.push_back("yarn: r_1 = " + std::to_string(r_first) +
                         " is below beta; ramp never reaches full extrapolation");
  return r;
}

/// Hard switch over diffusion timesteps: PI for t > switch, NTK for t <= switch.
inline StrategyResult tasr(const FrequencySpec& spec, const ExtrapolationParams& params,
                           const TasrParams& tp, std::int64_t timestep) {
  tp.validate();
  if (timestep < 0 || timestep > tp.total_timesteps)
    throw ValueError("tasr: timestep " + std::to_string(timestep) + " out of [0, " +
                     std::to_string(tp.total_timesteps) + "]");
  StrategyResult r =
      timestep > tp.switch_timestep ? pi(spec, params) : ntk(spec, params);
  r.strategy_name = "tasr(" + r.strategy_name + ")";
  return r;
}

/// Lowers component k to exactly 2*pi/(L*s) so it stays within one cycle over
/// the extrapolated length. All other components are untouched. If the
/// component already satisfies the condition the result is a flagged no-op so
/// pipelines can compose strategies without special-casing.
inline StrategyResult riflex(const FrequencySpec& spec, const ExtrapolationParams& params,
                             int k) {
  spec.validate();
  params.validate();
  const double theta_k = spec.theta(k);
  const double target = two_pi / (static_cast<double>(params.train_len) * params.scale);
  if (theta_k <= target) {
    StrategyResult r = detail::make_result("riflex", spec, spec.thetas);
    r.no_op = true;
    r.result_base = spec.base;
    r.warnings.push_back("riflex: theta_" + std::to_string(k) +
                         " already satisfies the non-repetition condition; nothing to do");
    return r;
  }
  std::vector<double> adjusted(spec.thetas);
  adjusted[static_cast<std::size_t>(k - 1)] = target;
  return detail::make_result("riflex", spec, std::move(adjusted));
}

struct RiflexBaseForm {
  double new_base = 0.0;  // base whose j=k component equals 2*pi/(L*s)
  StrategyResult result;
};

/// Solves theta_k(b') = 2*pi/(L*s) for the base:
/// b' = (L*s/(2*pi))^(d'/(2(k-1))). The returned result still modifies only
/// component k (base form is reported for checkpoint-config compatibility,
/// not applied to the other components). k = 1 is impossible: theta_1 = 1 for
/// every base.
inline RiflexBaseForm riflex_base_form(const FrequencySpec& spec,
                                       const ExtrapolationParams& params, int k) {
  spec.validate();
  params.validate();
  if (k == 1)
    throw ValueError(
        "riflex_base_form: theta_1 = 1 independent of base; use riflex (direct theta override)");
  spec.theta(k);  // range check
  const double extended = static_cast<double>(params.train_len) * params.scale;
  RiflexBaseForm bf;
  bf.new_base = std::pow(extended / two_pi,
                         static_cast<double>(spec.d_prime) / (2.0 * (k - 1)));
  bf.result = riflex(spec, params, k);
  bf.result.strategy_name = "riflex-base";
  return bf;
}

/// Broader variant: every component at or below the intrinsic frequency
/// (j >= k) is recomputed from the base-form base, slowing the whole low end
/// of the spectrum. Components above it are untouched.
inline StrategyResult riflex_all_low(const FrequencySpec& spec,
                                     const ExtrapolationParams& params, int k) {
  spec.validate();
  params.validate();
  if (k == 1)
    throw ValueError(
        "riflex_all_low: theta_1 = 1 independent of base; use riflex (direct theta override)");
  const double theta_k = spec.theta(k);
  const double target = two_pi / (static_cast<double>(params.train_len) * params.scale);
  if (theta_k <= target) {
    StrategyResult r = detail::make_result("riflex-all-low", spec, spec.thetas);
    r.no_op = true;
    r.result_base = spec.base;
    r.warnings.push_back("riflex-all-low: theta_" + std::to_string(k) +
                         " already satisfies the non-repetition condition; nothing to do");
    return r;
  }
  const double new_base = riflex_base_form(spec, params, k).new_base;
  std::vector<double> adjusted(spec.thetas);
  adjusted[static_cast<std::size_t>(k - 1)] = target;
  for (int j = k + 1; j <= spec.components(); ++j)
    adjusted[static_cast<std::size_t>(j - 1)] =
        std::pow(new_base, -2.0 * (j - 1) / static_cast<double>(spec.d_prime));
  return detail::make_result("riflex-all-low", spec, std::move(adjusted));
}

/// Applies riflex at each supplied index, for models whose observed
/// repetition frame is inconsistent across samples. Experimental.
inline StrategyResult riflex_multi(const FrequencySpec& spec, const ExtrapolationParams& params,
                                   const std::vector<int>& ks) {
  spec.validate();
  params.validate();
  if (ks.empty()) throw ValueError("riflex_multi: need at least one index");
  const double target = two_pi / (static_cast<double>(params.train_len) * params.scale);
  std::vector<double> adjusted(spec.thetas);
  for (int k : ks) {
    spec.theta(k);  // range check
    if (adjusted[static_cast<std::size_t>(k - 1)] > target)
      adjusted[static_cast<std::size_t>(k - 1)] = target;
  }
  StrategyResult r = detail::make_result("riflex-multi", spec, std::move(adjusted));
  r.no_op = r.modified_indices.empty();
  r.warnings.push_back("riflex-multi: experimental multi-intrinsic adjustment");
  return r;
}

enum class StrategyKind { Pe, Pi, Ntk, Yarn, Tasr, Riflex, RiflexBase, RiflexAllLow };

inline std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Pe: return "pe";
    case StrategyKind::Pi: return "pi";
    case StrategyKind::Ntk: return "ntk";
    case StrategyKind::Yarn: return "yarn";
    case StrategyKind::Tasr: return "tasr";
    case StrategyKind::Riflex: return "riflex";
    case StrategyKind::RiflexBase: return "riflex-base";
    case StrategyKind::RiflexAllLow: return "riflex-all-low";
  }
  throw ValueError("unknown strategy kind");
}

inline StrategyKind strategy_from_string(const std::string& name) {
  if (name == "pe") return StrategyKind::Pe;
  if (name == "pi") return StrategyKind::Pi;
  if (name == "ntk") return StrategyKind::Ntk;
  if (name == "yarn") return StrategyKind::Yarn;
  if (name == "tasr") return StrategyKind::Tasr;
  if (name == "riflex") return StrategyKind::Riflex;
  if (name == "riflex-base") return StrategyKind::RiflexBase;
  if (name == "riflex-all-low") return StrategyKind::RiflexAllLow;
  throw ValueError("unknown strategy '" + name +
                   "' (expected pe, pi, ntk, yarn, tasr, riflex, riflex-base or riflex-all-low)");
}

/// One strategy application, bundled for dispatch from configs and the CLI.
/// The training length comes from the axis the invocation is applied to.
struct StrategyInvocation {
  StrategyKind kind = StrategyKind::Pe;
  double scale = 1.0;
  YarnParams yarn_params{};
  std::optional<TasrParams> tasr_params;
  std::int64_t timestep = 0;
  std::optional<int> k;
};

struct AppliedStrategy {
  StrategyResult result;
  std::optional<double> new_base;  // set by riflex-base only
};

inline AppliedStrategy apply_strategy(const FrequencySpec& spec, std::int64_t train_len,
                                      const StrategyInvocation& inv) {
  const auto params = ExtrapolationParams::from_scale(train_len, inv.scale);
  auto need_k = [&]() -> int {
    if (!inv.k) throw ValueError(to_string(inv.kind) + " requires an intrinsic index k");
    return *inv.k;
  };
  switch (inv.kind) {
    case StrategyKind::Pe: return {pe(spec, params), std::nullopt};
    case StrategyKind::Pi: return {pi(spec, params), std::nullopt};
    case StrategyKind::Ntk: return {ntk(spec, params), std::nullopt};
    case StrategyKind::Yarn: return {yarn(spec, params, inv.yarn_params), std::nullopt};
    case StrategyKind::Tasr: {
      if (!inv.tasr_params) throw ValueError("tasr requires total/switch timesteps");
      return {tasr(spec, params, *inv.tasr_params, inv.timestep), std::nullopt};
    }
    case StrategyKind::Riflex: return {riflex(spec, params, need_k()), std::nullopt};
    case StrategyKind::RiflexBase: {
      auto bf = riflex_base_form(spec, params, need_k());
      return {std::move(bf.result), bf.new_base};
    }
    case StrategyKind::RiflexAllLow:
      return {riflex_all_low(spec, params, need_k()), std::nullopt};
  }
  throw ValueError("unknown strategy kind");
}

/// Transforms each referenced axis independently; untouched axes are copied
/// verbatim. This is how Vision NTK / Vision YaRN style per-axis adjustment
/// and joint temporal-spatial extension are expressed.
inline ModelRopeConfig apply_strategy_multi(const ModelRopeConfig& config,
                                            const std::map<AxisId, StrategyInvocation>& per_axis) {
  config.validate();
  for (const auto& [id, inv] : per_axis)
    if (!config.has_axis(id)) throw ValueError("config has no axis '" + to_string(id) + "'");
  ModelRopeConfig out;
  out.axes.reserve(config.axes.size());
  for (const auto& axis : config.axes) {
    auto it = per_axis.find(axis.id);
    if (it == per_axis.end()) {
      out.axes.push_back(axis);
      continue;
    }
    const auto applied = apply_strategy(axis.spec, axis.train_len, it->second);
    out.axes.push_back({axis.id, applied.result.to_spec(), axis.train_len});
  }
  return out;
}

/// Published fine-tuning base overrides and reported NoRepeat scores, kept as
/// documentation constants. The checkpoints' rotary dimensions and latent
/// lengths are external facts, so these values are recorded, not derived, and
/// the scores need model outputs to reproduce.
struct FineTuneSetting {
  const char* name;
  const char* base_model;
  double scale;
  std::optional<double> base_time;
  std::optional<double> base_height;
  std::optional<double> base_width;
  std::optional<double> norepeat_score_x100;
};

inline const std::array<FineTuneSetting, 5>& published_finetune_settings() {
  static const std::array<FineTuneSetting, 5> settings{{
      {"2x-temporal-cogvideox", "CogVideoX-5B", 2.0, 1e5, std::nullopt, std::nullopt, 61.3},
      {"2x-temporal-hunyuanvideo", "HunyuanVideo", 2.0, 560.0, std::nullopt, std::nullopt, 89.0},
      {"3x-temporal-cogvideox", "CogVideoX-5B", 3.0, 1e6, std::nullopt, std::nullopt, std::nullopt},
      {"2x-spatial-cogvideox", "CogVideoX-5B", 2.0, std::nullopt, 1e6, 5e4, std::nullopt},
      {"2x-both-cogvideox", "CogVideoX-5B", 2.0, 1e5, 1e6, 5e4, std::nullopt},
  }};
  return settings;
}

}  // namespace riflex
