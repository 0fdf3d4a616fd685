#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "riflex/errors.hpp"
#include "riflex/rope.hpp"

namespace riflex {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// N = 2*pi / theta, the number of positions per full rotation.
inline double period(double theta) {
  if (!(theta > 0.0)) throw ValueError("period: theta must be positive");
  return two_pi / theta;
}

/// r = L * theta / (2*pi), the number of cycles elapsed over length L.
inline double repeat_count(double theta, double length) {
  if (!(theta > 0.0)) throw ValueError("repeat_count: theta must be positive");
  if (!(length >= 1.0)) throw ValueError("repeat_count: length must be >= 1");
  return length * theta / two_pi;
}

/// Signed encoding change between consecutive positions:
/// cos((p+1)*theta) - cos(p*theta).
inline double adjacent_delta(double theta, std::int64_t p) {
  if (!(theta > 0.0)) throw ValueError("adjacent_delta: theta must be positive");
  if (p < 0) throw ValueError("adjacent_delta: p must be non-negative");
  return std::cos(static_cast<double>(p + 1) * theta) - std::cos(static_cast<double>(p) * theta);
}

/// Position-free envelope of |adjacent_delta|: 2*sin(theta/2) for theta <= pi,
/// clamped to the trivial bound 2 above that.
inline double delta_envelope(double theta) {
  if (!(theta > 0.0)) throw ValueError("delta_envelope: theta must be positive");
  if (theta >= std::numbers::pi) return 2.0;
  return 2.0 * std::sin(theta / 2.0);
}

struct DiagnosticsRow {
  int j = 0;
  double theta = 0.0;
  double period = 0.0;
  double repeat_count = 0.0;
  double max_adjacent_delta = 0.0;
};

/// One row per frequency component, sorted by j.
inline std::vector<DiagnosticsRow> diagnostics_table(const FrequencySpec& spec,
                                                     std::int64_t train_len) {
  spec.validate();
  if (train_len < 1) throw ValueError("diagnostics_table: train_len must be >= 1");
  std::vector<DiagnosticsRow> rows;
  rows.reserve(spec.thetas.size());
  for (int j = 1; j <= spec.components(); ++j) {
    const double theta = spec.theta(j);
    rows.push_back({j, theta, period(theta), repeat_count(theta, static_cast<double>(train_len)),
                    delta_envelope(theta)});
  }
  return rows;
}

struct IntrinsicResult {
  int k = 0;
  std::int64_t observed_first_repetition = 0;
  double matched_period = 0.0;
  double gap = 0.0;
};

/// k = argmin_j |N_j - N|. Ties are broken toward smaller j (higher frequency).
inline IntrinsicResult identify_intrinsic(const FrequencySpec& spec, std::int64_t observed_n) {
  spec.validate();
  if (observed_n < 1) throw ValueError("identify_intrinsic: observed N must be >= 1");
  IntrinsicResult best;
  best.observed_first_repetition = observed_n;
  for (int j = 1; j <= spec.components(); ++j) {
    const double n_j = period(spec.theta(j));
    const double gap = std::abs(n_j - static_cast<double>(observed_n));
    if (best.k == 0 || gap < best.gap) {
      best.k = j;
      best.matched_period = n_j;
      best.gap = gap;
    }
  }
  return best;
}

struct NonRepetitionCheck {
  bool satisfied = false;
  double margin = 0.0;  // 2*pi/(L*s) - theta_k; negative when violated
};

/// True iff component k stays within a single cycle over the extrapolated
/// length: theta_k <= 2*pi/(L*s). The boundary counts as satisfied.
inline NonRepetitionCheck check_non_repetition(const FrequencySpec& spec, std::int64_t train_len,
                                               double scale, int k) {
  spec.validate();
  if (train_len < 1) throw ValueError("check_non_repetition: train_len must be >= 1");
  if (!(scale > 0.0)) throw ValueError("check_non_repetition: scale must be positive");
  const double theta_k = spec.theta(k);
  const double limit = two_pi / (static_cast<double>(train_len) * scale);
  return {theta_k <= limit, limit - theta_k};
}

}  // namespace riflex
