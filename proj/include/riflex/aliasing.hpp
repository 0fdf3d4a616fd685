#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "riflex/diagnostics.hpp"
#include "riflex/errors.hpp"
#include "riflex/rope.hpp"
#include "riflex/strategies.hpp"

namespace riflex {

/// Dense symmetric similarity matrix over positions 0..size-1.
struct SimilarityMatrix {
  std::size_t size = 0;
  std::vector<double> values;  // row-major, size*size

  double at(std::size_t p, std::size_t q) const { return values[p * size + q]; }
  double& at(std::size_t p, std::size_t q) { return values[p * size + q]; }
};

struct AliasScanParams {
  double alias_threshold = 0.999;
  std::size_t min_separation = 1;

  void validate() const {
    if (!(alias_threshold > 0.0) || alias_threshold > 1.0)
      throw ValueError("alias_threshold must lie in (0, 1]");
    if (min_separation < 1) throw ValueError("min_separation must be >= 1");
  }

  /// Defaults used throughout: threshold 0.999, separation ceil(L/4) so that
  /// trivially-near positions never count as repetitions.
  static AliasScanParams defaults_for(std::int64_t train_len) {
    if (train_len < 1) throw ValueError("train_len must be >= 1");
    AliasScanParams p;
    p.min_separation = static_cast<std::size_t>((train_len + 3) / 4);
    return p;
  }
};

struct AliasHit {
  std::size_t p = 0;
  std::size_t p_prime = 0;
  double similarity = 0.0;
};

namespace detail {

// Components selected for a restricted signature: all of them when subset is
// empty, otherwise the listed 1-based indices.
inline std::vector<int> resolve_subset(const FrequencySpec& spec,
                                       const std::optional<std::vector<int>>& subset) {
  if (!subset) {
    std::vector<int> all(static_cast<std::size_t>(spec.components()));
    for (int j = 1; j <= spec.components(); ++j) all[static_cast<std::size_t>(j - 1)] = j;
    return all;
  }
  if (subset->empty()) throw ValueError("component subset must not be empty");
  std::vector<int> sorted(*subset);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (int j : sorted) spec.theta(j);  // range check
  return sorted;
}

}  // namespace detail

/// Pairwise cosine similarity of positional signatures over positions
/// 0..P-1, optionally restricted to a component subset. Row blocks may be
/// computed on several threads; every entry is a pure function of (p, q), so
/// the result is identical under any schedule.
inline SimilarityMatrix signature_matrix(const FrequencySpec& spec, std::size_t positions,
                                         const std::optional<std::vector<int>>& subset = std::nullopt,
                                         unsigned threads = 1) {
  spec.validate();
  if (positions < 1) throw ValueError("signature_matrix: need at least one position");
  const std::vector<int> components = detail::resolve_subset(spec, subset);

  // Signatures restricted to the chosen pairs, one row per position.
  const std::size_t width = components.size() * 2;
  std::vector<double> sigs(positions * width);
  for (std::size_t p = 0; p < positions; ++p)
    for (std::size_t c = 0; c < components.size(); ++c) {
      const double angle = static_cast<double>(p) * spec.theta(components[c]);
      sigs[p * width + 2 * c] = std::cos(angle);
      sigs[p * width + 2 * c + 1] = std::sin(angle);
    }

  SimilarityMatrix matrix;
  matrix.size = positions;
  matrix.values.assign(positions * positions, 0.0);
  const double inv_norm_sq = 1.0 / static_cast<double>(components.size());

  auto fill_rows = [&](std::size_t row_begin, std::size_t row_end) {
    for (std::size_t p = row_begin; p < row_end; ++p)
      for (std::size_t q = 0; q <= p; ++q) {
        double dot = 0.0;
        for (std::size_t i = 0; i < width; ++i) dot += sigs[p * width + i] * sigs[q * width + i];
        const double sim = dot * inv_norm_sq;  // both norms are sqrt(#components)
        matrix.at(p, q) = sim;
        matrix.at(q, p) = sim;
      }
  };

  if (threads <= 1 || positions < 64) {
    fill_rows(0, positions);
  } else {
    const unsigned n = std::min<unsigned>(threads, std::thread::hardware_concurrency()
                                                       ? std::thread::hardware_concurrency()
                                                       : 1u);
    std::vector<std::thread> pool;
    const std::size_t chunk = (positions + n - 1) / n;
    for (unsigned t = 0; t < n; ++t) {
      const std::size_t begin = std::min<std::size_t>(t * chunk, positions);
      const std::size_t end = std::min<std::size_t>(begin + chunk, positions);
      if (begin < end) pool.emplace_back(fill_rows, begin, end);
    }
    for (auto& worker : pool) worker.join();
  }
  return matrix;
}

/// First aliased pair: the smallest p for which some p' <= p - min_separation
/// reaches the threshold, together with the p' of highest similarity.
inline std::optional<AliasHit> scan_first_alias(const SimilarityMatrix& matrix,
                                                const AliasScanParams& params) {
  params.validate();
  for (std::size_t p = 0; p < matrix.size; ++p) {
    if (p < params.min_separation) continue;
    std::optional<AliasHit> best;
    for (std::size_t q = 0; q + params.min_separation <= p; ++q) {
      const double sim = matrix.at(p, q);
      if (sim >= params.alias_threshold && (!best || sim > best->similarity))
        best = AliasHit{p, q, sim};
    }
    if (best) return best;
  }
  return std::nullopt;
}

/// Estimates the first repetition position from the encodings alone: the p of
/// the first full-spectrum alias over positions 0..probe_len-1.
inline std::int64_t propose_observed_n(const FrequencySpec& spec, std::int64_t probe_len,
                                       std::optional<AliasScanParams> params = std::nullopt,
                                       unsigned threads = 1) {
  if (probe_len < 4) throw ValueError("propose_observed_n: probe range must be >= 4");
  const AliasScanParams scan = params ? *params : AliasScanParams::defaults_for(probe_len);
  const SimilarityMatrix matrix =
      signature_matrix(spec, static_cast<std::size_t>(probe_len), std::nullopt, threads);
  const auto hit = scan_first_alias(matrix, scan);
  if (!hit)
    throw NoAliasError("no repetition found within " + std::to_string(probe_len) +
                       " positions at threshold " + std::to_string(scan.alias_threshold));
  return static_cast<std::int64_t>(hit->p);
}

/// Mean over components of the adjacent-position delta envelope. Smaller
/// values mean adjacent positions are encoded more alike.
inline double motion_proxy(const std::vector<double>& thetas) {
  if (thetas.empty()) throw ValueError("motion_proxy: empty spectrum");
  double sum = 0.0;
  for (double t : thetas) sum += delta_envelope(t);
  return sum / static_cast<double>(thetas.size());
}

inline double motion_proxy(const FrequencySpec& spec) {
  spec.validate();
  return motion_proxy(spec.thetas);
}

inline double motion_proxy(const StrategyResult& result) { return motion_proxy(result.thetas_new); }

/// One similarity matrix plus its scan results.
struct SimilarityReport {
  std::string strategy_name;
  std::size_t positions = 0;
  std::vector<int> component_subset;  // empty means full spectrum
  SimilarityMatrix matrix;
  std::optional<AliasHit> first_alias;
  double motion_proxy = 0.0;
};

/// Full output of one simulated strategy run. The full-spectrum scan can
/// saturate through many slow components, so when an intrinsic index is known
/// the report also carries the scan restricted to that component.
struct StrategyReport {
  StrategyResult strategy;
  std::optional<double> new_base;
  SimilarityReport full;
  std::optional<SimilarityReport> intrinsic;
  std::optional<int> intrinsic_k;
  std::optional<NonRepetitionCheck> non_repetition;
};

inline SimilarityReport build_similarity_report(const FrequencySpec& spec,
                                                const std::string& strategy_name,
                                                std::size_t positions,
                                                const std::optional<std::vector<int>>& subset,
                                                const AliasScanParams& scan, unsigned threads = 1) {
  SimilarityReport report;
  report.strategy_name = strategy_name;
  report.positions = positions;
  if (subset) report.component_subset = detail::resolve_subset(spec, subset);
  report.matrix = signature_matrix(spec, positions, subset, threads);
  report.first_alias = scan_first_alias(report.matrix, scan);
  report.motion_proxy = motion_proxy(spec);
  return report;
}

/// Applies a strategy to one axis and measures the outcome: similarity
/// matrices, first-alias scans, motion proxy, and the non-repetition check at
/// the intrinsic component when one is supplied. P defaults to ceil(s*L).
inline StrategyReport strategy_report(const ModelRopeConfig& config, AxisId axis_id,
                                      const StrategyInvocation& inv, std::size_t positions = 0,
                                      std::optional<int> intrinsic_k = std::nullopt,
                                      std::optional<AliasScanParams> scan = std::nullopt,
                                      unsigned threads = 1) {
  config.validate();
  const RopeAxis& axis = config.axis(axis_id);
  if (!intrinsic_k) intrinsic_k = inv.k;
  if (positions == 0)
    positions = static_cast<std::size_t>(
        std::ceil(inv.scale * static_cast<double>(axis.train_len)));
  const AliasScanParams scan_params =
      scan ? *scan : AliasScanParams::defaults_for(axis.train_len);

  StrategyReport report;
  auto applied = apply_strategy(axis.spec, axis.train_len, inv);
  report.strategy = std::move(applied.result);
  report.new_base = applied.new_base;
  report.intrinsic_k = intrinsic_k;

  const FrequencySpec transformed = report.strategy.to_spec();
  report.full = build_similarity_report(transformed, report.strategy.strategy_name, positions,
                                        std::nullopt, scan_params, threads);
  if (intrinsic_k) {
    report.intrinsic =
        build_similarity_report(transformed, report.strategy.strategy_name, positions,
                                std::vector<int>{*intrinsic_k}, scan_params, threads);
    report.non_repetition =
        check_non_repetition(transformed, axis.train_len, inv.scale, *intrinsic_k);
  }
  return report;
}

}  // namespace riflex
