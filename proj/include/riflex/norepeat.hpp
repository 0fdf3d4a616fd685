#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "riflex/errors.hpp"

namespace riflex {

/// Decoded frames with uniform dimensions. Pixel values are whatever the
/// decoder produced (0-255 for PGM/PPM input, raw floats for containers), so
/// the score threshold is resolution- and scale-dependent by design.
struct FrameSequence {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<std::vector<float>> frames;  // each height*width*channels

  std::size_t frame_count() const { return frames.size(); }
  std::size_t frame_size() const { return height * width * channels; }

  void validate() const {
    if (height < 1 || width < 1 || channels < 1)
      throw DataError("frame sequence has empty dimensions");
    if (frames.size() < 2) throw DataError("frame sequence needs at least 2 frames");
    for (std::size_t t = 0; t < frames.size(); ++t) {
      if (frames[t].size() != frame_size())
        throw DataError("frame " + std::to_string(t) + " has " +
                        std::to_string(frames[t].size()) + " values, expected " +
                        std::to_string(frame_size()));
      for (float v : frames[t])
        if (!std::isfinite(v)) throw DataError("frame " + std::to_string(t) + " has non-finite pixels");
    }
  }
};

struct NoRepeatConfig {
  std::int64_t expected_period = 0;        // N_k, in frames
  double threshold = 100.0;                 // on the mean raw L2 distance
  std::optional<std::int64_t> search_window;  // defaults to ceil(0.1 * N_k)
  bool normalize_per_pixel = false;         // divide distances by sqrt(H*W*C)

  std::int64_t window() const {
    if (search_window) return *search_window;
    return (expected_period + 9) / 10;  // ceil(0.1 * N_k)
  }

  void validate() const {
    if (expected_period < 1) throw ValueError("expected_period must be >= 1");
    if (!(threshold > 0.0)) throw ValueError("threshold must be positive");
    if (search_window && *search_window < 0)
      throw ValueError("search_window must be non-negative");
  }
};

/// Raw Euclidean distance between two frames.
inline double frame_l2(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size())
    throw DataError("frame_l2: mismatched frame sizes " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

/// The frame around N_k most similar to the first frame: argmin over
/// t in [N_k - W, N_k + W] clipped to [1, frame_count - 1] of the distance to
/// frame 0. Ties go to the smallest t.
inline std::int64_t find_anchor(const FrameSequence& seq, const NoRepeatConfig& cfg) {
  seq.validate();
  cfg.validate();
  const auto last = static_cast<std::int64_t>(seq.frame_count()) - 1;
  const std::int64_t lo = std::max<std::int64_t>(1, cfg.expected_period - cfg.window());
  const std::int64_t hi = std::min<std::int64_t>(last, cfg.expected_period + cfg.window());
  if (lo > hi)
    throw DataError("anchor window [" + std::to_string(cfg.expected_period - cfg.window()) + ", " +
                    std::to_string(cfg.expected_period + cfg.window()) +
                    "] is empty after clipping to [1, " + std::to_string(last) + "]");
  std::int64_t best_t = lo;
  double best_d = frame_l2(seq.frames[static_cast<std::size_t>(lo)], seq.frames[0]);
  for (std::int64_t t = lo + 1; t <= hi; ++t) {
    const double d = frame_l2(seq.frames[static_cast<std::size_t>(t)], seq.frames[0]);
    if (d < best_d) {
      best_d = d;
      best_t = t;
    }
  }
  return best_t;
}

struct NoRepeatReport {
  std::int64_t anchor_index = 0;
  double mean_distance = 0.0;
  bool is_nonrepetitive = false;
  std::vector<double> per_frame_distances;
};

/// Compares the candidate repeated stretch against the head of the sequence:
/// distance i pairs frames[anchor+i] with frames[i]. Non-repetitive iff the
/// mean distance strictly exceeds the threshold.
inline NoRepeatReport norepeat_score(const FrameSequence& seq, const NoRepeatConfig& cfg) {
  const std::int64_t anchor = find_anchor(seq, cfg);
  const double scale =
      cfg.normalize_per_pixel ? 1.0 / std::sqrt(static_cast<double>(seq.frame_size())) : 1.0;
  NoRepeatReport report;
  report.anchor_index = anchor;
  const std::size_t pairs = seq.frame_count() - static_cast<std::size_t>(anchor);
  report.per_frame_distances.reserve(pairs);
  double sum = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const double d =
        frame_l2(seq.frames[static_cast<std::size_t>(anchor) + i], seq.frames[i]) * scale;
    report.per_frame_distances.push_back(d);
    sum += d;
  }
  report.mean_distance = sum / static_cast<double>(pairs);
  report.is_nonrepetitive = report.mean_distance > cfg.threshold;
  return report;
}

/// Fraction of videos classified non-repetitive.
inline double aggregate(const std::vector<NoRepeatReport>& reports) {
  if (reports.empty()) throw ValueError("aggregate: no reports");
  std::size_t hits = 0;
  for (const auto& r : reports)
    if (r.is_nonrepetitive) ++hits;
  return static_cast<double>(hits) / static_cast<double>(reports.size());
}

}  // namespace riflex
