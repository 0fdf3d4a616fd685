#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <random>

#include "oracles.hpp"
#include "riflex/norepeat.hpp"

using namespace riflex;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

FrameSequence make_sequence(std::size_t h, std::size_t w, std::size_t c, std::size_t count,
                            const std::function<float(std::size_t t, std::size_t i)>& pixel) {
  FrameSequence seq;
  seq.height = h;
  seq.width = w;
  seq.channels = c;
  for (std::size_t t = 0; t < count; ++t) {
    std::vector<float> frame(h * w * c);
    for (std::size_t i = 0; i < frame.size(); ++i) frame[i] = pixel(t, i);
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

FrameSequence random_sequence(std::mt19937& rng, std::size_t h, std::size_t w, std::size_t c,
                              std::size_t count) {
  std::uniform_real_distribution<float> dist(0.0f, 255.0f);
  return make_sequence(h, w, c, count, [&](std::size_t, std::size_t) { return dist(rng); });
}

}  // namespace

TEST_CASE("frame_l2 is the Euclidean distance between frames") {
  const std::vector<float> zeros(4, 0.0f);
  const std::vector<float> ones(4, 1.0f);
  CHECK(frame_l2(zeros, zeros) == 0.0);
  CHECK(frame_l2(zeros, ones) == 2.0);  // sqrt(4)

  SECTION("matches an element-loop oracle on random frames") {
    std::mt19937 rng(47);
    std::uniform_real_distribution<float> dist(-100.0f, 100.0f);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<float> a(96), b(96);
      for (auto& v : a) v = dist(rng);
      for (auto& v : b) v = dist(rng);
      double sum = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i)
        sum += (static_cast<double>(a[i]) - b[i]) * (static_cast<double>(a[i]) - b[i]);
      CHECK_THAT(frame_l2(a, b), WithinAbs(std::sqrt(sum), 1e-9));
    }
  }
  SECTION("mismatched sizes are rejected") {
    CHECK_THROWS_AS(frame_l2(zeros, std::vector<float>(5, 0.0f)), DataError);
  }
}

TEST_CASE("find_anchor locates the best match around the expected period") {
  SECTION("an exact loop anchors on its period") {
    const auto seq = make_sequence(2, 2, 1, 24, [](std::size_t t, std::size_t i) {
      return static_cast<float>((t % 10) * 4 + i);
    });
    NoRepeatConfig cfg;
    cfg.expected_period = 10;
    cfg.search_window = 2;
    CHECK(find_anchor(seq, cfg) == 10);
  }
  SECTION("drifting frames anchor at the window's start") {
    const auto seq = make_sequence(2, 2, 1, 24,
                                   [](std::size_t t, std::size_t) { return static_cast<float>(t); });
    NoRepeatConfig cfg;
    cfg.expected_period = 10;
    cfg.search_window = 2;
    CHECK(find_anchor(seq, cfg) == 8);  // distances grow with t
  }
  SECTION("a zero window pins the anchor to N_k") {
    const auto seq = make_sequence(2, 2, 1, 24,
                                   [](std::size_t t, std::size_t) { return static_cast<float>(t); });
    NoRepeatConfig cfg;
    cfg.expected_period = 7;
    cfg.search_window = 0;
    CHECK(find_anchor(seq, cfg) == 7);
  }
  SECTION("a window entirely past the sequence is an error") {
    const auto seq = make_sequence(2, 2, 1, 8,
                                   [](std::size_t t, std::size_t) { return static_cast<float>(t); });
    NoRepeatConfig cfg;
    cfg.expected_period = 100;
    cfg.search_window = 3;
    CHECK_THROWS_AS(find_anchor(seq, cfg), DataError);
  }
}

TEST_CASE("norepeat_score classifies repetition against the threshold") {
  SECTION("an exact loop scores zero and is repetitive") {
    const auto seq = make_sequence(4, 4, 3, 40, [](std::size_t t, std::size_t i) {
      return static_cast<float>(((t % 8) * 31 + i * 7) % 199);
    });
    NoRepeatConfig cfg;
    cfg.expected_period = 8;
    const auto report = norepeat_score(seq, cfg);
    CHECK(report.anchor_index == 8);
    CHECK(report.mean_distance == 0.0);
    CHECK_FALSE(report.is_nonrepetitive);
  }
  SECTION("constant-increment drift has a closed-form mean") {
    // frame t is constant t*c; distances are anchor*c*sqrt(H*W*C)
    const double c = 3.0;
    const std::size_t h = 4, w = 4, ch = 3;
    const auto seq = make_sequence(h, w, ch, 30, [&](std::size_t t, std::size_t) {
      return static_cast<float>(static_cast<double>(t) * c);
    });
    NoRepeatConfig cfg;
    cfg.expected_period = 10;
    cfg.search_window = 1;
    const auto report = norepeat_score(seq, cfg);
    CHECK(report.anchor_index == 9);
    const double expected = 9.0 * c * std::sqrt(static_cast<double>(h * w * ch));
    CHECK_THAT(report.mean_distance, WithinRel(expected, 1e-12));
    CHECK(report.is_nonrepetitive);  // 187.06 > 100
  }
  SECTION("a mean exactly at the threshold counts as repetitive") {
    FrameSequence seq;
    seq.height = seq.width = seq.channels = 1;
    seq.frames = {{0.0f}, {100.0f}};
    NoRepeatConfig cfg;
    cfg.expected_period = 1;
    cfg.search_window = 0;
    const auto report = norepeat_score(seq, cfg);
    CHECK(report.mean_distance == 100.0);
    CHECK_FALSE(report.is_nonrepetitive);
  }
  SECTION("degenerate sequences are rejected") {
    FrameSequence seq;
    seq.height = seq.width = seq.channels = 1;
    seq.frames = {{1.0f}};
    NoRepeatConfig cfg;
    cfg.expected_period = 1;
    CHECK_THROWS_AS(norepeat_score(seq, cfg), DataError);
  }
}

TEST_CASE("norepeat_score properties") {
  std::mt19937 rng(53);

  SECTION("adding a constant to every pixel changes nothing") {
    const auto base = random_sequence(rng, 4, 4, 3, 20);
    auto shifted = base;
    for (auto& frame : shifted.frames)
      for (auto& v : frame) v += 40.0f;
    NoRepeatConfig cfg;
    cfg.expected_period = 9;
    const auto a = norepeat_score(base, cfg);
    const auto b = norepeat_score(shifted, cfg);
    CHECK(a.anchor_index == b.anchor_index);
    // exact in real arithmetic; float32 storage rounds the shifted pixels
    CHECK_THAT(a.mean_distance, WithinRel(b.mean_distance, 1e-6));
  }
  SECTION("scaling every pixel scales the mean distance") {
    const auto base = random_sequence(rng, 4, 4, 1, 20);
    auto doubled = base;
    for (auto& frame : doubled.frames)
      for (auto& v : frame) v *= 2.0f;
    NoRepeatConfig cfg;
    cfg.expected_period = 9;
    CHECK_THAT(norepeat_score(doubled, cfg).mean_distance,
               WithinRel(2.0 * norepeat_score(base, cfg).mean_distance, 1e-6));
  }
  SECTION("exact loops are caught for any period") {
    std::uniform_int_distribution<std::size_t> period_dist(1, 12);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t p = period_dist(rng);
      auto motif = random_sequence(rng, 3, 3, 1, p);
      const auto seq = make_sequence(3, 3, 1, 2 * p + 4, [&](std::size_t t, std::size_t i) {
        return motif.frames[t % p][i];
      });
      NoRepeatConfig cfg;
      cfg.expected_period = static_cast<std::int64_t>(p);
      const auto report = norepeat_score(seq, cfg);
      CHECK(report.mean_distance == 0.0);
      CHECK_FALSE(report.is_nonrepetitive);
    }
  }
  SECTION("raising the threshold never flips toward non-repetitive") {
    const auto seq = random_sequence(rng, 4, 4, 3, 24);
    NoRepeatConfig low;
    low.expected_period = 10;
    NoRepeatConfig high = low;
    high.threshold = low.threshold * 8.0;
    const bool was = norepeat_score(seq, low).is_nonrepetitive;
    const bool now = norepeat_score(seq, high).is_nonrepetitive;
    if (!was) CHECK_FALSE(now);
  }
  SECTION("matches the nested-loop oracle on random videos") {
    std::uniform_int_distribution<std::size_t> dim_dist(1, 16);
    std::uniform_int_distribution<std::size_t> count_dist(6, 32);
    for (int trial = 0; trial < 25; ++trial) {
      const auto seq = random_sequence(rng, dim_dist(rng), dim_dist(rng), 3, count_dist(rng));
      NoRepeatConfig cfg;
      cfg.expected_period = static_cast<std::int64_t>(seq.frame_count() / 2);
      const auto report = norepeat_score(seq, cfg);
      const auto want = oracle::norepeat_bruteforce(seq.frames, cfg.expected_period, cfg.window(),
                                                    cfg.threshold);
      CHECK(report.anchor_index == want.anchor);
      CHECK_THAT(report.mean_distance, WithinAbs(want.mean_distance, 1e-9));
      CHECK(report.is_nonrepetitive == want.nonrepetitive);
    }
  }
  SECTION("per-pixel normalization divides by sqrt(H*W*C)") {
    const auto seq = random_sequence(rng, 4, 4, 3, 20);
    NoRepeatConfig raw;
    raw.expected_period = 9;
    NoRepeatConfig normalized = raw;
    normalized.normalize_per_pixel = true;
    CHECK_THAT(norepeat_score(seq, normalized).mean_distance,
               WithinRel(norepeat_score(seq, raw).mean_distance / std::sqrt(48.0), 1e-12));
  }
}

TEST_CASE("aggregate reports the non-repetitive fraction") {
  NoRepeatReport repetitive;
  repetitive.is_nonrepetitive = false;
  NoRepeatReport fresh;
  fresh.is_nonrepetitive = true;

  CHECK(aggregate({repetitive, repetitive}) == 0.0);
  CHECK(aggregate({fresh, fresh, fresh, repetitive}) == 0.75);
  CHECK_THROWS_AS(aggregate({}), ValueError);
}
