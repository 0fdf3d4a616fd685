// riflex — positional-encoding extrapolation toolkit.
//
// Commands:
//   freqs      per-component periods, repeat counts and delta envelopes
//   strategy   apply an extrapolation strategy, emit old/new frequencies
//   intrinsic  identify the intrinsic frequency from an observed repetition
//   simulate   similarity matrices, alias scans and motion proxies
//   norepeat   score frame sequences for repetition
//   verify     check the non-repetition condition; exit 4 on violation
//
// Exit codes: 0 ok, 1 usage, 2 config, 3 data, 4 verification failed.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "riflex/aliasing.hpp"
#include "riflex/config.hpp"
#include "riflex/diagnostics.hpp"
#include "riflex/frames.hpp"
#include "riflex/norepeat.hpp"
#include "riflex/rope.hpp"
#include "riflex/serialize.hpp"
#include "riflex/strategies.hpp"

#include <CLI11.hpp>

namespace {

using namespace riflex;

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitVerification = 4;

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

unsigned resolve_threads(unsigned flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("RIFLEX_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return 1;
}

// Options shared by the strategy-applying commands. CLI flags override the
// config's per-axis strategy block.
struct StrategyFlags {
  std::string name;
  double scale = 0.0;
  std::int64_t target_len = 0;
  int k = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::int64_t total_timesteps = 0;
  std::int64_t switch_timestep = -1;
  std::int64_t timestep = -1;
  std::int64_t observed_n = 0;

  void add_to(CLI::App* cmd, bool require_name) {
    auto* opt = cmd->add_option("--strategy", name,
                                "pe, pi, ntk, yarn, tasr, riflex, riflex-base or riflex-all-low");
    if (require_name) opt->required();
    cmd->add_option("--scale", scale, "extrapolation factor s = L'/L");
    cmd->add_option("--target-len", target_len, "target length L' (alternative to --scale)");
    cmd->add_option("--k", k, "intrinsic frequency index (1-based)");
    cmd->add_option("--observed-n", observed_n,
                    "first observed repetition position; used to derive k when --k is absent");
    cmd->add_option("--alpha", alpha, "yarn lower cycle-count threshold");
    cmd->add_option("--beta", beta, "yarn upper cycle-count threshold");
    cmd->add_option("--total-timesteps", total_timesteps, "tasr diffusion timestep count T");
    cmd->add_option("--switch-timestep", switch_timestep, "tasr switch point (default T/2)");
    cmd->add_option("--timestep", timestep, "tasr current timestep t");
  }

  StrategyInvocation resolve(const ToolConfig& cfg, const RopeAxis& axis,
                             const std::string& flag_name) const {
    StrategyInvocation inv;
    bool have_block = false;
    if (auto it = cfg.strategies.find(axis.id); it != cfg.strategies.end()) {
      inv = it->second;
      have_block = true;
    }
    if (!flag_name.empty()) inv.kind = strategy_from_string(flag_name);
    else if (!have_block)
      throw ConfigError("no strategy given: pass --strategy or add a '" + to_string(axis.id) +
                        "' block under \"strategy\" in the config");
    if (scale > 0.0 && target_len > 0)
      throw ConfigError("give either --scale or --target-len, not both");
    if (scale > 0.0) inv.scale = scale;
    if (target_len > 0)
      inv.scale = static_cast<double>(target_len) / static_cast<double>(axis.train_len);
    if (alpha != 0.0) inv.yarn_params.alpha = alpha;
    if (beta != 0.0) inv.yarn_params.beta = beta;
    if (total_timesteps > 0) {
      TasrParams tp = TasrParams::with_default_switch(total_timesteps);
      if (switch_timestep >= 0) tp.switch_timestep = switch_timestep;
      inv.tasr_params = tp;
    }
    if (timestep >= 0) inv.timestep = timestep;
    if (k > 0) inv.k = k;
    if (!inv.k) inv.k = cfg.intrinsic_for(axis.id);
    if (!inv.k && observed_n > 0) inv.k = identify_intrinsic(axis.spec, observed_n).k;
    return inv;
  }
};

const RopeAxis& select_axis(const ToolConfig& cfg, const std::string& name) {
  if (!name.empty()) return cfg.model.axis(axis_from_string(name));
  if (cfg.model.axes.size() == 1) return cfg.model.axes.front();
  throw ConfigError("the config has several axes; pick one with --axis");
}

std::optional<std::vector<int>> parse_subset(const std::string& text,
                                             std::optional<int> intrinsic_k) {
  if (text.empty()) return std::nullopt;
  if (text == "intrinsic") {
    if (!intrinsic_k)
      throw ConfigError("--subset intrinsic needs an intrinsic index (--k or config intrinsic_k)");
    return std::vector<int>{*intrinsic_k};
  }
  std::vector<int> subset;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto token = text.substr(start, comma == std::string::npos ? comma : comma - start);
    try {
      subset.push_back(std::stoi(token));
    } catch (const std::exception&) {
      throw ConfigError("bad --subset entry '" + token + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return subset;
}

std::string comparison_json(const std::string& axis, std::int64_t train_len,
                            const StrategyReport& a, double scale_a, const StrategyReport& b,
                            double scale_b) {
  JsonWriter w;
  w.begin_object();
  w.key("report").value("comparison");
  w.key("axis").value(axis);
  w.key("train_len").value(train_len);
  w.key("a").value(a.strategy.strategy_name);
  w.key("b").value(b.strategy.strategy_name);
  w.key("delta").begin_object();
  w.key("motion_proxy").value(b.full.motion_proxy - a.full.motion_proxy);
  w.key("full_alias_a").value(a.full.first_alias.has_value());
  w.key("full_alias_b").value(b.full.first_alias.has_value());
  w.key("intrinsic_alias_a").value(a.intrinsic && a.intrinsic->first_alias.has_value());
  w.key("intrinsic_alias_b").value(b.intrinsic && b.intrinsic->first_alias.has_value());
  w.end_object();
  w.key("reports").begin_array();
  riflex::detail::write_strategy_report_body(w, axis, train_len, scale_a, a);
  riflex::detail::write_strategy_report_body(w, axis, train_len, scale_b, b);
  w.end_array();
  w.end_object();
  return w.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"positional-encoding extrapolation toolkit"};
  app.require_subcommand(0, 1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path;
  bool print_effective = false;
  unsigned threads_flag = 0;
  app.add_option("--config", config_path, "JSON configuration file")->type_name("PATH");
  app.add_flag("--print-effective-config", print_effective,
               "load the config, print it with all defaults applied, and exit");
  app.add_option("--threads", threads_flag,
                 "worker threads for similarity matrices (env RIFLEX_THREADS)");

  // freqs
  auto* freqs = app.add_subcommand("freqs", "per-component diagnostics table");
  std::string freqs_axis, freqs_csv, freqs_json;
  freqs->add_option("--axis", freqs_axis, "time, height or width");
  freqs->add_option("--csv", freqs_csv, "write the table as CSV")->type_name("PATH");
  freqs->add_option("--json", freqs_json, "write the report as JSON")->type_name("PATH");

  // strategy
  auto* strategy = app.add_subcommand("strategy", "apply an extrapolation strategy");
  std::string strategy_axis, strategy_json;
  std::vector<int> strategy_multi_k;
  StrategyFlags strategy_flags;
  strategy->add_option("--axis", strategy_axis, "time, height or width");
  strategy_flags.add_to(strategy, false);
  strategy->add_option("--multi-k", strategy_multi_k,
                       "riflex only: adjust several intrinsic indices at once (experimental)");
  strategy->add_option("--json", strategy_json, "write the result as JSON")->type_name("PATH");

  // intrinsic
  auto* intrinsic = app.add_subcommand("intrinsic", "identify the intrinsic frequency");
  std::string intrinsic_axis, intrinsic_json;
  std::int64_t intrinsic_observed = 0, probe_len = 0;
  bool propose = false;
  intrinsic->add_option("--axis", intrinsic_axis, "time, height or width");
  intrinsic->add_option("--observed-n", intrinsic_observed, "first observed repetition position");
  intrinsic->add_flag("--propose", propose, "estimate N from the encodings instead");
  intrinsic->add_option("--probe-len", probe_len, "scan range for --propose (default 2L)");
  intrinsic->add_option("--json", intrinsic_json, "write the result as JSON")->type_name("PATH");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "similarity matrices and alias scans");
  std::string sim_axis, sim_svg, sim_csv, sim_json, sim_subset;
  std::vector<std::string> sim_strategies;
  std::int64_t sim_positions = 0, sim_min_sep = 0;
  double sim_threshold = 0.0;
  bool compare = false;
  StrategyFlags sim_flags;
  simulate->add_option("--axis", sim_axis, "time, height or width");
  simulate->add_option("--strategy", sim_strategies, "strategy to simulate (repeat to compare)")
      ->required();
  simulate->add_flag("--compare", compare, "emit a delta summary for two strategies");
  simulate->add_option("--positions", sim_positions, "positions P (default ceil(s*L))");
  simulate->add_option("--alias-threshold", sim_threshold, "similarity threshold (default 0.999)");
  simulate->add_option("--min-separation", sim_min_sep, "separation floor (default ceil(L/4))");
  simulate->add_option("--subset", sim_subset,
                       "matrix component subset: comma list of j, or 'intrinsic'");
  simulate->add_option("--scale", sim_flags.scale, "extrapolation factor s = L'/L");
  simulate->add_option("--target-len", sim_flags.target_len, "target length L'");
  simulate->add_option("--k", sim_flags.k, "intrinsic frequency index");
  simulate->add_option("--observed-n", sim_flags.observed_n,
                       "derive k from an observed repetition position");
  simulate->add_option("--alpha", sim_flags.alpha, "yarn lower threshold");
  simulate->add_option("--beta", sim_flags.beta, "yarn upper threshold");
  simulate->add_option("--total-timesteps", sim_flags.total_timesteps, "tasr timestep count");
  simulate->add_option("--switch-timestep", sim_flags.switch_timestep, "tasr switch point");
  simulate->add_option("--timestep", sim_flags.timestep, "tasr current timestep");
  simulate->add_option("--svg", sim_svg, "write the matrix as an SVG heatmap")->type_name("PATH");
  simulate->add_option("--csv", sim_csv, "write the matrix as CSV")->type_name("PATH");
  simulate->add_option("--json", sim_json, "write the report as JSON")->type_name("PATH");

  // norepeat
  auto* norepeat = app.add_subcommand("norepeat", "score frame sequences for repetition");
  std::vector<std::string> frame_inputs;
  std::int64_t nr_period = 0, nr_window = -1;
  double nr_threshold = 0.0;
  std::string nr_normalize, nr_json, nr_csv;
  norepeat
      ->add_option("--frames", frame_inputs,
                   "frame directory (numbered .pgm/.ppm) or RFLX1 container; repeatable")
      ->required();
  norepeat->add_option("--expected-period", nr_period, "expected repetition period N_k in frames");
  norepeat->add_option("--threshold", nr_threshold, "mean-distance threshold (default 100)");
  norepeat->add_option("--window", nr_window, "search window around N_k (default ceil(0.1*N_k))");
  norepeat->add_option("--normalize", nr_normalize, "'per-pixel-rms' for resolution-independent distances");
  norepeat->add_option("--json", nr_json, "write the report(s) as JSON")->type_name("PATH");
  norepeat->add_option("--csv", nr_csv, "write the per-video aggregate as CSV")->type_name("PATH");

  // verify
  auto* verify = app.add_subcommand("verify", "check the non-repetition condition");
  std::string verify_axis, verify_json;
  StrategyFlags verify_flags;
  verify->add_option("--axis", verify_axis, "time, height or width");
  verify_flags.add_to(verify, false);
  verify->add_option("--json", verify_json, "write the result as JSON")->type_name("PATH");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  const unsigned threads = resolve_threads(threads_flag);

  try {
    auto need_config = [&]() -> ToolConfig {
      if (config_path.empty()) throw ConfigError("this command needs --config");
      return load_config(config_path);
    };

    if (print_effective) {
      std::cout << effective_config_json(need_config());
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return kExitUsage;
    }

    if (freqs->parsed()) {
      const auto cfg = need_config();
      const auto& axis = select_axis(cfg, freqs_axis);
      const auto rows = diagnostics_table(axis.spec, axis.train_len);
      if (!freqs_csv.empty()) emit(diagnostics_to_csv(rows), freqs_csv);
      emit(diagnostics_report_json(to_string(axis.id), axis.train_len, rows), freqs_json);
      return 0;
    }

    if (strategy->parsed()) {
      const auto cfg = need_config();
      const auto& axis = select_axis(cfg, strategy_axis);
      const auto inv = strategy_flags.resolve(cfg, axis, strategy_flags.name);
      AppliedStrategy applied;
      if (!strategy_multi_k.empty()) {
        if (inv.kind != StrategyKind::Riflex)
          throw ConfigError("--multi-k is only meaningful with --strategy riflex");
        applied.result = riflex_multi(
            axis.spec, ExtrapolationParams::from_scale(axis.train_len, inv.scale),
            strategy_multi_k);
      } else {
        applied = apply_strategy(axis.spec, axis.train_len, inv);
      }
      for (const auto& warning : applied.result.warnings)
        std::cerr << "warning: " << warning << "\n";
      emit(strategy_result_json(to_string(axis.id), axis.train_len, inv.scale, applied.result,
                                applied.new_base),
           strategy_json);
      return 0;
    }

    if (intrinsic->parsed()) {
      const auto cfg = need_config();
      const auto& axis = select_axis(cfg, intrinsic_axis);
      std::int64_t observed = intrinsic_observed;
      if (propose) {
        const auto range = probe_len > 0 ? probe_len : 2 * axis.train_len;
        observed = propose_observed_n(axis.spec, range, std::nullopt, threads);
      } else if (observed <= 0) {
        throw ConfigError("intrinsic needs --observed-n (or --propose)");
      }
      emit(intrinsic_report_json(to_string(axis.id), identify_intrinsic(axis.spec, observed)),
           intrinsic_json);
      return 0;
    }

    if (simulate->parsed()) {
      const auto cfg = need_config();
      const auto& axis = select_axis(cfg, sim_axis);
      if (compare && sim_strategies.size() != 2)
        throw ConfigError("--compare needs exactly two --strategy flags");
      if (!compare && sim_strategies.size() != 1)
        throw ConfigError("simulate takes one --strategy (or two with --compare)");

      AliasScanParams scan = AliasScanParams::defaults_for(axis.train_len);
      scan.alias_threshold = sim_threshold > 0.0 ? sim_threshold : cfg.alias_threshold;
      if (sim_min_sep > 0)
        scan.min_separation = static_cast<std::size_t>(sim_min_sep);
      else if (cfg.min_separation)
        scan.min_separation = *cfg.min_separation;
      std::size_t positions = sim_positions > 0 ? static_cast<std::size_t>(sim_positions)
                                                : cfg.positions.value_or(0);

      auto run_one = [&](const std::string& name) {
        StrategyFlags flags = sim_flags;
        flags.name = name;
        const auto inv = flags.resolve(cfg, axis, name);
        return std::make_pair(inv, strategy_report(cfg.model, axis.id, inv, positions, inv.k,
                                                   scan, threads));
      };

      if (compare) {
        const auto [inv_a, report_a] = run_one(sim_strategies[0]);
        const auto [inv_b, report_b] = run_one(sim_strategies[1]);
        if (!sim_svg.empty() || !sim_csv.empty())
          throw ConfigError("--svg/--csv matrix exports need a single strategy");
        emit(comparison_json(to_string(axis.id), axis.train_len, report_a, inv_a.scale, report_b,
                             inv_b.scale),
             sim_json);
        return 0;
      }

      const auto [inv, report] = run_one(sim_strategies[0]);
      const auto subset = parse_subset(sim_subset, inv.k ? inv.k : cfg.intrinsic_for(axis.id));
      const SimilarityMatrix* matrix = &report.full.matrix;
      std::optional<SimilarityReport> custom;
      if (subset) {
        custom = build_similarity_report(report.strategy.to_spec(),
                                         report.strategy.strategy_name, report.full.positions,
                                         subset, scan, threads);
        matrix = &custom->matrix;
      }
      if (!sim_csv.empty()) emit(matrix_to_csv(*matrix), sim_csv);
      if (!sim_svg.empty())
        emit(svg_heatmap(*matrix, report.strategy.strategy_name + " similarity"), sim_svg);
      emit(strategy_report_json(to_string(axis.id), axis.train_len, inv.scale, report), sim_json);
      return 0;
    }

    if (norepeat->parsed()) {
      NoRepeatConfig nrc;
      if (config_path.empty() && nr_period <= 0)
        throw ConfigError("norepeat needs --expected-period (or a config with a norepeat block)");
      if (!config_path.empty()) {
        const auto cfg = need_config();
        if (cfg.norepeat) nrc = *cfg.norepeat;
        else if (nr_period <= 0)
          throw ConfigError("config has no norepeat block; pass --expected-period");
      }
      if (nr_period > 0) nrc.expected_period = nr_period;
      if (nr_threshold > 0.0) nrc.threshold = nr_threshold;
      if (nr_window >= 0) nrc.search_window = nr_window;
      if (!nr_normalize.empty()) {
        if (nr_normalize != "per-pixel-rms")
          throw ConfigError("unknown --normalize mode '" + nr_normalize + "'");
        nrc.normalize_per_pixel = true;
      }
      nrc.validate();

      std::vector<NoRepeatReport> reports;
      for (const auto& input : frame_inputs)
        reports.push_back(norepeat_score(read_frames(input), nrc));

      if (!nr_csv.empty()) emit(norepeat_aggregate_csv(frame_inputs, reports), nr_csv);
      if (reports.size() == 1) {
        emit(norepeat_report_json(frame_inputs[0], nrc, reports[0]), nr_json);
      } else {
        JsonWriter w;
        w.begin_object();
        w.key("report").value("norepeat_batch");
        w.key("videos").begin_array();
        for (std::size_t i = 0; i < reports.size(); ++i) {
          w.begin_object();
          w.key("source").value(frame_inputs[i]);
          w.key("anchor_index").value(reports[i].anchor_index);
          w.key("mean_distance").value(reports[i].mean_distance);
          w.key("is_nonrepetitive").value(reports[i].is_nonrepetitive);
          w.end_object();
        }
        w.end_array();
        const double score = aggregate(reports);
        w.key("norepeat_score").value(score);
        w.key("norepeat_score_x100").value(score * 100.0);
        w.end_object();
        emit(w.str(), nr_json);
      }
      std::cerr << "NoRepeat Score: " << fmt_double(aggregate(reports) * 100.0) << "\n";
      return 0;
    }

    if (verify->parsed()) {
      const auto cfg = need_config();
      const auto& axis = select_axis(cfg, verify_axis);
      const auto inv = verify_flags.resolve(cfg, axis, verify_flags.name);
      if (!inv.k)
        throw ConfigError("verify needs an intrinsic index: --k, --observed-n or config intrinsic_k");
      const auto applied = apply_strategy(axis.spec, axis.train_len, inv);
      const auto check =
          check_non_repetition(applied.result.to_spec(), axis.train_len, inv.scale, *inv.k);
      JsonWriter w;
      w.begin_object();
      w.key("report").value("verify");
      w.key("axis").value(to_string(axis.id));
      w.key("strategy").value(applied.result.strategy_name);
      w.key("train_len").value(axis.train_len);
      w.key("scale").value(inv.scale);
      w.key("k").value(*inv.k);
      w.key("satisfied").value(check.satisfied);
      w.key("margin").value(check.margin);
      w.end_object();
      emit(w.str(), verify_json);
      return check.satisfied ? 0 : kExitVerification;
    }

    std::cerr << app.help();
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
