#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "riflex/aliasing.hpp"
#include "riflex/diagnostics.hpp"
#include "riflex/errors.hpp"
#include "riflex/norepeat.hpp"
#include "riflex/rope.hpp"
#include "riflex/strategies.hpp"

namespace riflex {

/// All emitted floating-point text goes through this, fixed at 17 significant
/// digits, so identical inputs always serialize to identical bytes.
inline std::string fmt_double(double v) {
  if (!std::isfinite(v)) throw ValueError("refusing to serialize a non-finite number");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::string json_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  return out;
}

}  // namespace detail

/// Streaming JSON writer with insertion-ordered keys and fixed number
/// formatting. nlohmann::json re-renders doubles with its own algorithm, so
/// reports are written through this instead.
class JsonWriter {
 public:
  JsonWriter& begin_object() { return open('{', '}'); }
  JsonWriter& end_object() { return close('}'); }
  JsonWriter& begin_array() { return open('[', ']'); }
  JsonWriter& end_array() { return close(']'); }

  JsonWriter& key(std::string_view name) {
    separate();
    out_ << '"' << detail::json_escape(name) << "\": ";
    pending_key_ = true;
    return *this;
  }

  JsonWriter& value(double v) { return atom(fmt_double(v)); }
  JsonWriter& value(std::int64_t v) { return atom(std::to_string(v)); }
  JsonWriter& value(int v) { return atom(std::to_string(v)); }
  JsonWriter& value(std::size_t v) { return atom(std::to_string(v)); }
  JsonWriter& value(bool v) { return atom(v ? "true" : "false"); }
  JsonWriter& value(std::string_view v) {
    return atom("\"" + detail::json_escape(v) + "\"");
  }
  JsonWriter& value(const char* v) { return value(std::string_view(v)); }
  JsonWriter& null() { return atom("null"); }

  std::string str() const { return out_.str() + "\n"; }

 private:
  struct Frame {
    char closer;
    bool has_items = false;
  };

  JsonWriter& open(char opener, char closer) {
    separate();
    pending_key_ = false;
    out_ << opener;
    stack_.push_back({closer});
    return *this;
  }

  JsonWriter& close(char closer) {
    const bool had_items = stack_.back().has_items;
    stack_.pop_back();
    if (had_items) {
      out_ << '\n';
      indent();
    }
    out_ << closer;
    return *this;
  }

  JsonWriter& atom(const std::string& text) {
    separate();
    pending_key_ = false;
    out_ << text;
    return *this;
  }

  void separate() {
    if (pending_key_) return;  // value directly after its key
    if (!stack_.empty()) {
      if (stack_.back().has_items) out_ << ',';
      stack_.back().has_items = true;
      out_ << '\n';
      indent();
    }
  }

  void indent() {
    for (std::size_t i = 0; i < stack_.size(); ++i) out_ << "  ";
  }

  std::ostringstream out_;
  std::vector<Frame> stack_;
  bool pending_key_ = false;
};

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string diagnostics_to_csv(const std::vector<DiagnosticsRow>& rows) {
  std::string out = "j,theta,period,repeat_count,max_adjacent_delta\n";
  for (const auto& r : rows) {
    out += std::to_string(r.j) + ',' + fmt_double(r.theta) + ',' + fmt_double(r.period) + ',' +
           fmt_double(r.repeat_count) + ',' + fmt_double(r.max_adjacent_delta) + '\n';
  }
  return out;
}

/// Dense row-major matrix CSV; the header row lists the positions.
inline std::string matrix_to_csv(const SimilarityMatrix& matrix) {
  std::string out;
  for (std::size_t q = 0; q < matrix.size; ++q) {
    if (q) out += ',';
    out += std::to_string(q);
  }
  out += '\n';
  for (std::size_t p = 0; p < matrix.size; ++p) {
    for (std::size_t q = 0; q < matrix.size; ++q) {
      if (q) out += ',';
      out += fmt_double(matrix.at(p, q));
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

/// Grayscale heatmap; the documented mapping is
/// shade = clamp(round(255 * (1 - sim)), 0, 255), so identical positions are
/// black and orthogonal ones mid-gray. Runs of equal shade within a row merge
/// into one rect.
inline std::string svg_heatmap(const SimilarityMatrix& matrix, const std::string& title) {
  auto shade_of = [](double sim) {
    const double s = std::round(255.0 * (1.0 - sim));
    return static_cast<int>(std::min(255.0, std::max(0.0, s)));
  };
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(matrix.size) +
         "\" height=\"" + std::to_string(matrix.size) + "\" viewBox=\"0 0 " +
         std::to_string(matrix.size) + " " + std::to_string(matrix.size) +
         "\" shape-rendering=\"crispEdges\">\n";
  out += "<title>" + detail::json_escape(title) + "</title>\n";
  for (std::size_t p = 0; p < matrix.size; ++p) {
    std::size_t run_start = 0;
    int run_shade = shade_of(matrix.at(p, 0));
    auto flush = [&](std::size_t end) {
      const std::string v = std::to_string(run_shade);
      out += "<rect x=\"" + std::to_string(run_start) + "\" y=\"" + std::to_string(p) +
             "\" width=\"" + std::to_string(end - run_start) +
             "\" height=\"1\" fill=\"rgb(" + v + "," + v + "," + v + ")\"/>\n";
    };
    for (std::size_t q = 1; q < matrix.size; ++q) {
      const int s = shade_of(matrix.at(p, q));
      if (s != run_shade) {
        flush(q);
        run_start = q;
        run_shade = s;
      }
    }
    flush(matrix.size);
  }
  out += "</svg>\n";
  return out;
}

// ---------------------------------------------------------------------------
// JSON reports
// ---------------------------------------------------------------------------

namespace detail {

inline void write_thetas(JsonWriter& w, const std::vector<double>& thetas) {
  w.begin_array();
  for (double t : thetas) w.value(t);
  w.end_array();
}

inline void write_alias(JsonWriter& w, const std::optional<AliasHit>& hit) {
  if (!hit) {
    w.null();
    return;
  }
  w.begin_object();
  w.key("p").value(hit->p);
  w.key("p_prime").value(hit->p_prime);
  w.key("similarity").value(hit->similarity);
  w.end_object();
}

inline void write_similarity_summary(JsonWriter& w, const SimilarityReport& report) {
  w.begin_object();
  w.key("positions").value(report.positions);
  w.key("component_subset");
  if (report.component_subset.empty()) {
    w.null();
  } else {
    w.begin_array();
    for (int j : report.component_subset) w.value(j);
    w.end_array();
  }
  w.key("first_alias");
  write_alias(w, report.first_alias);
  w.key("motion_proxy").value(report.motion_proxy);
  w.end_object();
}

inline void write_warnings(JsonWriter& w, const std::vector<std::string>& warnings) {
  w.begin_array();
  for (const auto& msg : warnings) w.value(msg);
  w.end_array();
}

}  // namespace detail

inline std::string diagnostics_report_json(const std::string& axis, std::int64_t train_len,
                                           const std::vector<DiagnosticsRow>& rows) {
  JsonWriter w;
  w.begin_object();
  w.key("report").value("diagnostics");
  w.key("axis").value(axis);
  w.key("train_len").value(train_len);
  w.key("rows").begin_array();
  for (const auto& r : rows) {
    w.begin_object();
    w.key("j").value(r.j);
    w.key("theta").value(r.theta);
    w.key("period").value(r.period);
    w.key("repeat_count").value(r.repeat_count);
    w.key("max_adjacent_delta").value(r.max_adjacent_delta);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

/// Old and new frequencies side by side. This doubles as a theta-override
/// document that an external inference stack can consume.
inline std::string strategy_result_json(const std::string& axis, std::int64_t train_len,
                                        double scale, const StrategyResult& result,
                                        std::optional<double> new_base) {
  JsonWriter w;
  w.begin_object();
  w.key("report").value("strategy");
  w.key("strategy").value(result.strategy_name);
  w.key("axis").value(axis);
  w.key("train_len").value(train_len);
  w.key("scale").value(scale);
  w.key("no_op").value(result.no_op);
  w.key("components").begin_array();
  for (std::size_t i = 0; i < result.thetas_new.size(); ++i) {
    w.begin_object();
    w.key("j").value(i + 1);
    w.key("theta_before").value(result.thetas_before[i]);
    w.key("theta_after").value(result.thetas_new[i]);
    w.key("modified").value(result.modified_indices.count(static_cast<int>(i + 1)) > 0);
    w.end_object();
  }
  w.end_array();
  w.key("modified_indices").begin_array();
  for (int j : result.modified_indices) w.value(j);
  w.end_array();
  w.key("new_base");
  if (new_base)
    w.value(*new_base);
  else
    w.null();
  w.key("warnings");
  detail::write_warnings(w, result.warnings);
  w.end_object();
  return w.str();
}

inline std::string intrinsic_report_json(const std::string& axis, const IntrinsicResult& result) {
  JsonWriter w;
  w.begin_object();
  w.key("report").value("intrinsic");
  w.key("axis").value(axis);
  w.key("observed_first_repetition").value(result.observed_first_repetition);
  w.key("k").value(result.k);
  w.key("matched_period").value(result.matched_period);
  w.key("gap").value(result.gap);
  w.end_object();
  return w.str();
}

namespace detail {

inline void write_strategy_report_body(JsonWriter& w, const std::string& axis,
                                       std::int64_t train_len, double scale,
                                       const StrategyReport& report) {
  w.begin_object();
  w.key("report").value("simulation");
  w.key("strategy").value(report.strategy.strategy_name);
  w.key("axis").value(axis);
  w.key("train_len").value(train_len);
  w.key("scale").value(scale);
  w.key("no_op").value(report.strategy.no_op);
  w.key("modified_indices").begin_array();
  for (int j : report.strategy.modified_indices) w.value(j);
  w.end_array();
  w.key("new_base");
  if (report.new_base)
    w.value(*report.new_base);
  else
    w.null();
  w.key("full_spectrum");
  detail::write_similarity_summary(w, report.full);
  w.key("intrinsic_component");
  if (report.intrinsic)
    detail::write_similarity_summary(w, *report.intrinsic);
  else
    w.null();
  w.key("intrinsic_k");
  if (report.intrinsic_k)
    w.value(*report.intrinsic_k);
  else
    w.null();
  w.key("non_repetition");
  if (report.non_repetition) {
    w.begin_object();
    w.key("satisfied").value(report.non_repetition->satisfied);
    w.key("margin").value(report.non_repetition->margin);
    w.end_object();
  } else {
    w.null();
  }
  w.key("warnings");
  write_warnings(w, report.strategy.warnings);
  w.end_object();
}

}  // namespace detail

/// Summary of a simulated strategy run. Matrices are exported separately as
/// CSV or SVG; the JSON carries the scan results.
inline std::string strategy_report_json(const std::string& axis, std::int64_t train_len,
                                        double scale, const StrategyReport& report) {
  JsonWriter w;
  detail::write_strategy_report_body(w, axis, train_len, scale, report);
  return w.str();
}

inline std::string norepeat_report_json(const std::string& source, const NoRepeatConfig& cfg,
                                        const NoRepeatReport& report) {
  JsonWriter w;
  w.begin_object();
  w.key("report").value("norepeat");
  w.key("source").value(source);
  w.key("expected_period").value(cfg.expected_period);
  w.key("threshold").value(cfg.threshold);
  w.key("search_window").value(cfg.window());
  w.key("normalized").value(cfg.normalize_per_pixel);
  w.key("anchor_index").value(report.anchor_index);
  w.key("mean_distance").value(report.mean_distance);
  w.key("is_nonrepetitive").value(report.is_nonrepetitive);
  w.key("per_frame_distances").begin_array();
  for (double d : report.per_frame_distances) w.value(d);
  w.end_array();
  w.end_object();
  return w.str();
}

inline std::string norepeat_aggregate_csv(const std::vector<std::string>& sources,
                                          const std::vector<NoRepeatReport>& reports) {
  std::string out = "source,anchor_index,mean_distance,is_nonrepetitive\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    out += sources[i] + ',' + std::to_string(reports[i].anchor_index) + ',' +
           fmt_double(reports[i].mean_distance) + ',' +
           (reports[i].is_nonrepetitive ? "true" : "false") + '\n';
  }
  return out;
}

}  // namespace riflex
