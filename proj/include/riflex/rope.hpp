#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riflex/errors.hpp"

namespace riflex {

/// One axis worth of rotary frequencies.
///
/// A spectrum generated from a base b has theta_j = b^(-2(j-1)/d') for
/// j = 1..d'/2, which is strictly decreasing with theta_1 = 1. `base` is
/// recorded only when the spectrum came from one; spectra produced by
/// extrapolation strategies generally have no single generating base.
struct FrequencySpec {
  int d_prime = 0;
  std::optional<double> base;
  std::vector<double> thetas;

  int components() const { return d_prime / 2; }

  /// 1-based accessor matching the j = 1..d'/2 indexing used in all reports.
  double theta(int j) const {
    if (j < 1 || j > components())
      throw ValueError("frequency index j=" + std::to_string(j) +
                       " out of range [1, " + std::to_string(components()) + "]");
    return thetas[static_cast<std::size_t>(j - 1)];
  }

  void validate() const {
    if (d_prime < 2 || d_prime % 2 != 0)
      throw DimensionError("d_prime must be even and >= 2, got " + std::to_string(d_prime));
    if (thetas.size() != static_cast<std::size_t>(d_prime / 2))
      throw DimensionError("expected " + std::to_string(d_prime / 2) + " frequencies, got " +
                           std::to_string(thetas.size()));
    for (std::size_t i = 0; i < thetas.size(); ++i)
      if (!(thetas[i] > 0.0) || !std::isfinite(thetas[i]))
        throw ValueError("theta_" + std::to_string(i + 1) + " must be a positive finite real");
    if (base && !(*base > 0.0))
      throw ValueError("base must be positive");
  }

  static FrequencySpec from_thetas(std::vector<double> thetas,
                                   std::optional<double> base = std::nullopt) {
    FrequencySpec spec;
    spec.d_prime = static_cast<int>(thetas.size()) * 2;
    spec.base = base;
    spec.thetas = std::move(thetas);
    spec.validate();
    return spec;
  }
};

/// theta_j = base^(-2(j-1)/d'), 1-indexed. theta_1 is exactly 1.
inline FrequencySpec make_frequencies(double base, int d_prime) {
  if (d_prime < 2 || d_prime % 2 != 0)
    throw DimensionError("d_prime must be even and >= 2, got " + std::to_string(d_prime));
  if (!(base > 0.0) || !std::isfinite(base))
    throw ValueError("base must be a positive finite real");
  FrequencySpec spec;
  spec.d_prime = d_prime;
  spec.base = base;
  spec.thetas.resize(static_cast<std::size_t>(d_prime / 2));
  for (int j = 1; j <= d_prime / 2; ++j)
    spec.thetas[static_cast<std::size_t>(j - 1)] =
        std::pow(base, -2.0 * (j - 1) / static_cast<double>(d_prime));
  return spec;
}

enum class AxisId { Time, Height, Width };

inline std::string to_string(AxisId id) {
  switch (id) {
    case AxisId::Time: return "time";
    case AxisId::Height: return "height";
    case AxisId::Width: return "width";
  }
  throw ValueError("unknown axis id");
}

inline AxisId axis_from_string(const std::string& name) {
  if (name == "time") return AxisId::Time;
  if (name == "height") return AxisId::Height;
  if (name == "width") return AxisId::Width;
  throw ValueError("unknown axis '" + name + "' (expected time, height or width)");
}

struct RopeAxis {
  AxisId id = AxisId::Time;
  FrequencySpec spec;
  std::int64_t train_len = 0;
};

/// Per-axis frequency specs plus training lengths for a model's axes,
/// in the order the feature slices are concatenated.
struct ModelRopeConfig {
  std::vector<RopeAxis> axes;

  void validate() const {
    if (axes.empty() || axes.size() > 3)
      throw DimensionError("config must have between 1 and 3 axes");
    for (std::size_t i = 0; i < axes.size(); ++i) {
      axes[i].spec.validate();
      if (axes[i].train_len < 2)
        throw ValueError("axis '" + to_string(axes[i].id) + "' train_len must be >= 2");
      for (std::size_t j = i + 1; j < axes.size(); ++j)
        if (axes[i].id == axes[j].id)
          throw ValueError("duplicate axis '" + to_string(axes[i].id) + "'");
    }
  }

  bool has_axis(AxisId id) const {
    for (const auto& a : axes)
      if (a.id == id) return true;
    return false;
  }

  const RopeAxis& axis(AxisId id) const {
    for (const auto& a : axes)
      if (a.id == id) return a;
    throw ValueError("config has no axis '" + to_string(id) + "'");
  }

  int total_dim() const {
    int d = 0;
    for (const auto& a : axes) d += a.spec.d_prime;
    return d;
  }
};

/// A position along 1 to 3 axes; coordinates are latent indices, never fractional.
struct PositionVector {
  std::vector<std::int64_t> coords;

  void validate() const {
    if (coords.empty() || coords.size() > 3)
      throw DimensionError("position vector must have between 1 and 3 coordinates");
    for (auto c : coords)
      if (c < 0) throw ValueError("position coordinates must be non-negative");
  }
};

namespace detail {

// Rotates interleaved pairs (x[2i], x[2i+1]) in place by angle p * theta_(i+1).
// Angles are evaluated directly at p * theta in double precision so the error
// does not grow with p.
inline void rotate_pairs(std::span<const double> in, std::span<double> out, std::int64_t p,
                         std::span<const double> thetas) {
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const double angle = static_cast<double>(p) * thetas[i];
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double x = in[2 * i];
    const double y = in[2 * i + 1];
    out[2 * i] = x * c - y * s;
    out[2 * i + 1] = x * s + y * c;
  }
}

inline void check_position(std::int64_t p) {
  if (p < 0) throw ValueError("position must be non-negative, got " + std::to_string(p));
}

}  // namespace detail

/// Rotary-encodes x at position p: pair (x_{2j-1}, x_{2j}) rotated by p * theta_j.
inline std::vector<double> apply_rope(std::span<const double> x, std::int64_t p,
                                      const FrequencySpec& spec) {
  spec.validate();
  if (x.size() != static_cast<std::size_t>(spec.d_prime))
    throw DimensionError("apply_rope: vector length " + std::to_string(x.size()) +
                         " does not match d_prime " + std::to_string(spec.d_prime));
  detail::check_position(p);
  std::vector<double> out(x.size());
  detail::rotate_pairs(x, out, p, spec.thetas);
  return out;
}

/// Dot product of the two embedded vectors; depends on p - q only.
inline double rope_dot(std::span<const double> x, std::int64_t p, std::span<const double> y,
                       std::int64_t q, const FrequencySpec& spec) {
  if (y.size() != static_cast<std::size_t>(spec.d_prime))
    throw DimensionError("rope_dot: vector length " + std::to_string(y.size()) +
                         " does not match d_prime " + std::to_string(spec.d_prime));
  const std::vector<double> ex = apply_rope(x, p, spec);
  const std::vector<double> ey = apply_rope(y, q, spec);
  double dot = 0.0;
  for (std::size_t i = 0; i < ex.size(); ++i) dot += ex[i] * ey[i];
  return dot;
}

/// Multi-axis RoPE: the i-th contiguous slice of x (length d' of axis i) is
/// encoded with that axis's spec at coordinate p.coords[i].
inline std::vector<double> apply_rope_multi(std::span<const double> x, const PositionVector& p,
                                            const ModelRopeConfig& config) {
  config.validate();
  p.validate();
  if (p.coords.size() != config.axes.size())
    throw DimensionError("apply_rope_multi: " + std::to_string(p.coords.size()) +
                         " coordinates for " + std::to_string(config.axes.size()) + " axes");
  if (x.size() != static_cast<std::size_t>(config.total_dim()))
    throw DimensionError("apply_rope_multi: vector length " + std::to_string(x.size()) +
                         " does not match total dim " + std::to_string(config.total_dim()));
  std::vector<double> out(x.size());
  std::size_t offset = 0;
  for (std::size_t i = 0; i < config.axes.size(); ++i) {
    const auto& spec = config.axes[i].spec;
    const auto width = static_cast<std::size_t>(spec.d_prime);
    detail::rotate_pairs(x.subspan(offset, width), std::span<double>(out).subspan(offset, width),
                         p.coords[i], spec.thetas);
    offset += width;
  }
  return out;
}

/// The canonical all-ones-pairs embedding at position p: pairs
/// (cos p*theta_j, sin p*theta_j). Its norm is sqrt(d'/2).
inline std::vector<double> positional_signature(std::int64_t p, const FrequencySpec& spec) {
  spec.validate();
  detail::check_position(p);
  std::vector<double> sig(static_cast<std::size_t>(spec.d_prime));
  for (std::size_t i = 0; i < spec.thetas.size(); ++i) {
    const double angle = static_cast<double>(p) * spec.thetas[i];
    sig[2 * i] = std::cos(angle);
    sig[2 * i + 1] = std::sin(angle);
  }
  return sig;
}

}  // namespace riflex
