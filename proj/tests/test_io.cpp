#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "riflex/config.hpp"
#include "riflex/frames.hpp"
#include "riflex/schema.hpp"
#include "riflex/serialize.hpp"

#include <json.hpp>

using namespace riflex;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const std::filesystem::path source_dir{RIFLEX_SOURCE_DIR};

nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return nlohmann::json::parse(in);
}

SchemaValidator load_schema(const std::string& name) {
  return SchemaValidator(load_json_file(source_dir / "schemas" / name));
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() /
             ("riflex_io_test_" + std::to_string(std::random_device{}()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("fmt_double is stable at 17 significant digits") {
  CHECK(fmt_double(1.0) == "1");
  CHECK(fmt_double(0.25) == "0.25");
  CHECK(fmt_double(std::numbers::pi) == "3.1415926535897931");
  // round trip: parsing the text recovers the exact double
  const double value = 0.1234567890123456789;
  CHECK(std::stod(fmt_double(value)) == value);
  CHECK_THROWS_AS(fmt_double(std::numeric_limits<double>::infinity()), ValueError);
}

TEST_CASE("JsonWriter emits valid, re-parseable JSON") {
  JsonWriter w;
  w.begin_object();
  w.key("text").value("line\n\"quoted\"");
  w.key("numbers").begin_array().value(1.5).value(std::int64_t{-3}).end_array();
  w.key("flag").value(true);
  w.key("nothing").null();
  w.end_object();
  const auto parsed = nlohmann::json::parse(w.str());
  CHECK(parsed["text"] == "line\n\"quoted\"");
  CHECK(parsed["numbers"][0] == 1.5);
  CHECK(parsed["numbers"][1] == -3);
  CHECK(parsed["flag"] == true);
  CHECK(parsed["nothing"].is_null());
}

TEST_CASE("diagnostics serialize to CSV and schema-valid JSON") {
  const auto spec = make_frequencies(10000.0, 4);
  const auto rows = diagnostics_table(spec, 64);

  SECTION("CSV header and row count are fixed") {
    const auto csv = diagnostics_to_csv(rows);
    CHECK(csv.rfind("j,theta,period,repeat_count,max_adjacent_delta\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows
  }
  SECTION("JSON validates against the bundled schema") {
    const auto text = diagnostics_report_json("time", 64, rows);
    const auto parsed = nlohmann::json::parse(text);
    std::string error;
    CHECK(load_schema("diagnostics_report.schema.json").validate(parsed, error));
    INFO(error);
    CHECK(error.empty());
  }
}

TEST_CASE("strategy and intrinsic reports validate against their schemas") {
  const auto spec = make_frequencies(10000.0, 16);
  const auto result = riflex::riflex(spec, ExtrapolationParams::from_scale(64, 2.0), 3);

  const auto strategy_text = strategy_result_json("time", 64, 2.0, result, std::nullopt);
  std::string error;
  CHECK(load_schema("strategy_report.schema.json")
            .validate(nlohmann::json::parse(strategy_text), error));
  INFO(error);
  CHECK(error.empty());

  const auto intrinsic = identify_intrinsic(spec, 20);
  const auto intrinsic_text = intrinsic_report_json("time", intrinsic);
  CHECK(load_schema("intrinsic_report.schema.json")
            .validate(nlohmann::json::parse(intrinsic_text), error));
  CHECK(error.empty());
}

TEST_CASE("simulation reports validate against their schema") {
  ModelRopeConfig config;
  config.axes.push_back({AxisId::Time, make_frequencies(640.0, 16), 32});
  StrategyInvocation inv;
  inv.kind = StrategyKind::Riflex;
  inv.scale = 2.0;
  inv.k = 3;
  const auto report = strategy_report(config, AxisId::Time, inv);
  const auto text = strategy_report_json("time", 32, 2.0, report);
  std::string error;
  CHECK(load_schema("simulation_report.schema.json").validate(nlohmann::json::parse(text), error));
  INFO(error);
  CHECK(error.empty());
}

TEST_CASE("matrix CSV is dense row-major with a position header") {
  SimilarityMatrix m;
  m.size = 2;
  m.values = {1.0, 0.5, 0.5, 1.0};
  CHECK(matrix_to_csv(m) == "0,1\n1,0.5\n0.5,1\n");
}

TEST_CASE("SVG heatmaps encode the documented shade mapping") {
  SimilarityMatrix m;
  m.size = 2;
  m.values = {1.0, 0.0, 0.0, 1.0};
  const auto svg = svg_heatmap(m, "demo");
  // shade = round(255 * (1 - sim)): 0 for sim=1, 255 for sim=0
  CHECK_THAT(svg, ContainsSubstring("fill=\"rgb(0,0,0)\""));
  CHECK_THAT(svg, ContainsSubstring("fill=\"rgb(255,255,255)\""));
  CHECK_THAT(svg, ContainsSubstring("<svg xmlns=\"http://www.w3.org/2000/svg\""));
  CHECK_THAT(svg, ContainsSubstring("</svg>"));

  SECTION("negative similarities clamp to 255") {
    SimilarityMatrix n;
    n.size = 1;
    n.values = {-0.8};
    CHECK_THAT(svg_heatmap(n, "clamp"), ContainsSubstring("rgb(255,255,255)"));
  }
  SECTION("tags balance") {
    std::size_t opens = 0, closes = 0, selfclosed = 0;
    for (std::size_t i = 0; i + 1 < svg.size(); ++i) {
      if (svg[i] == '<' && svg[i + 1] != '/' && svg[i + 1] != '?') ++opens;
      if (svg[i] == '<' && svg[i + 1] == '/') ++closes;
      if (svg[i] == '/' && svg[i + 1] == '>') ++selfclosed;
    }
    CHECK(opens == closes + selfclosed);
  }
}

TEST_CASE("PNM round trip preserves 8-bit frames") {
  const auto dir = temp_dir();
  std::mt19937 rng(59);
  std::uniform_int_distribution<int> pixel(0, 255);

  SECTION("grayscale PGM") {
    std::vector<std::vector<float>> frames;
    for (int t = 0; t < 4; ++t) {
      std::vector<float> frame(6 * 5);
      for (auto& v : frame) v = static_cast<float>(pixel(rng));
      frames.push_back(frame);
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%03d.pgm", t);
      write_pnm(dir / name, 6, 5, 1, frame);
    }
    const auto seq = read_frame_dir(dir);
    CHECK(seq.width == 6);
    CHECK(seq.height == 5);
    CHECK(seq.channels == 1);
    REQUIRE(seq.frame_count() == 4);
    for (std::size_t t = 0; t < 4; ++t) CHECK(seq.frames[t] == frames[t]);
  }
  SECTION("color PPM with numeric ordering beyond 9") {
    for (int t = 0; t < 12; ++t) {
      std::vector<float> frame(4 * 4 * 3, static_cast<float>(t));
      char name[32];
      std::snprintf(name, sizeof(name), "f%d.ppm", t);
      write_pnm(dir / name, 4, 4, 3, frame);
    }
    const auto seq = read_frame_dir(dir);
    REQUIRE(seq.frame_count() == 12);
    for (std::size_t t = 0; t < 12; ++t) CHECK(seq.frames[t][0] == static_cast<float>(t));
  }
  SECTION("PNM comments in headers are skipped") {
    std::ofstream out(dir / "c0.pgm", std::ios::binary);
    out << "P5\n# written by hand\n2 2\n255\n";
    out.write("\x01\x02\x03\x04", 4);
    out.close();
    const auto seq_path = dir / "c0.pgm";
    const auto img = detail::read_pnm(seq_path);
    CHECK(img.pixels == std::vector<float>{1, 2, 3, 4});
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("RFLX1 containers round-trip floats exactly") {
  const auto dir = temp_dir();
  std::mt19937 rng(61);
  std::uniform_real_distribution<float> value(-1e6f, 1e6f);
  FrameSequence seq;
  seq.height = 3;
  seq.width = 4;
  seq.channels = 2;
  for (int t = 0; t < 5; ++t) {
    std::vector<float> frame(24);
    for (auto& v : frame) v = value(rng);
    seq.frames.push_back(std::move(frame));
  }
  const auto path = dir / "clip.rflx";
  write_rflx(path, seq);
  const auto loaded = read_rflx(path);
  CHECK(loaded.height == seq.height);
  CHECK(loaded.width == seq.width);
  CHECK(loaded.channels == seq.channels);
  REQUIRE(loaded.frame_count() == seq.frame_count());
  for (std::size_t t = 0; t < seq.frame_count(); ++t) CHECK(loaded.frames[t] == seq.frames[t]);

  SECTION("bad magic is rejected") {
    std::ofstream bad(dir / "bad.rflx", std::ios::binary);
    bad << "NOPE9\n{}\n";
    bad.close();
    CHECK_THROWS_AS(read_rflx(dir / "bad.rflx"), DataError);
  }
  SECTION("truncated payload is rejected") {
    std::ofstream cut(dir / "cut.rflx", std::ios::binary);
    cut << "RFLX1\n{\"height\":2,\"width\":2,\"channels\":1,\"frames\":2,\"dtype\":\"f32le\"}\n";
    cut << "abcd";
    cut.close();
    CHECK_THROWS_AS(read_rflx(dir / "cut.rflx"), DataError);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("config loading applies defaults and validates fields") {
  SECTION("a minimal config loads") {
    const auto cfg = parse_config(R"({
      "model": {"axes": [{"axis": "time", "d_prime": 4, "base": 10000.0, "train_len": 16}]}
    })");
    CHECK(cfg.model.axes.size() == 1);
    CHECK(cfg.model.axes[0].spec.thetas == std::vector<double>{1.0, 0.01});
    CHECK(cfg.alias_threshold == 0.999);
    CHECK_FALSE(cfg.norepeat.has_value());
  }
  SECTION("odd d_prime names the offending field") {
    CHECK_THROWS_WITH(parse_config(R"({
      "model": {"axes": [{"axis": "time", "d_prime": 5, "base": 10000.0, "train_len": 16}]}
    })"),
                      ContainsSubstring("d_prime"));
  }
  SECTION("unknown keys are rejected with their path") {
    CHECK_THROWS_WITH(parse_config(R"({
      "model": {"axes": [{"axis": "time", "d_prime": 4, "base": 10000.0, "train_len": 16}]},
      "extra": 1
    })"),
                      ContainsSubstring("extra"));
  }
  SECTION("parse errors report line and column") {
    try {
      parse_config("{\n  \"model\": oops\n}", "broken.json");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK_THAT(e.what(), ContainsSubstring("broken.json:2:"));
    }
  }
  SECTION("explicit thetas work and exclude base") {
    const auto cfg = parse_config(R"({
      "model": {"axes": [{"axis": "time", "d_prime": 4, "thetas": [1.0, 0.5], "train_len": 8}]}
    })");
    CHECK(cfg.model.axes[0].spec.thetas == std::vector<double>{1.0, 0.5});
    CHECK_FALSE(cfg.model.axes[0].spec.base.has_value());
    CHECK_THROWS_WITH(parse_config(R"({
      "model": {"axes": [{"axis": "time", "d_prime": 4, "base": 3.0, "thetas": [1.0, 0.5],
                          "train_len": 8}]}
    })"),
                      ContainsSubstring("exactly one"));
  }
  SECTION("strategy blocks parse with their parameters") {
    const auto cfg = parse_config(R"({
      "model": {"axes": [{"axis": "time", "d_prime": 8, "base": 10000.0, "train_len": 32}]},
      "strategy": {"time": {"name": "yarn", "scale": 2.0, "alpha": 1.0, "beta": 32.0}}
    })");
    REQUIRE(cfg.strategies.count(AxisId::Time) == 1);
    CHECK(cfg.strategies.at(AxisId::Time).kind == StrategyKind::Yarn);
    CHECK(cfg.strategies.at(AxisId::Time).yarn_params.beta == 32.0);
  }
  SECTION("target_len converts to a scale") {
    const auto cfg = parse_config(R"({
      "model": {"axes": [{"axis": "time", "d_prime": 8, "base": 10000.0, "train_len": 32}]},
      "strategy": {"time": {"name": "pi", "target_len": 80}}
    })");
    CHECK(cfg.strategies.at(AxisId::Time).scale == 2.5);
  }
}

TEST_CASE("bundled presets load and echo their intrinsic settings") {
  SECTION("hunyuan-temporal has k = 4 with period 200") {
    const auto cfg = load_config(source_dir / "configs" / "hunyuan-temporal.json");
    REQUIRE(cfg.intrinsic_for(AxisId::Time).has_value());
    CHECK(*cfg.intrinsic_for(AxisId::Time) == 4);
    const double n4 = period(cfg.model.axes[0].spec.theta(4));
    CHECK_THAT(n4, WithinAbs(200.0, 1e-9));

    const auto echoed = nlohmann::json::parse(effective_config_json(cfg));
    CHECK(echoed["model"]["axes"][0]["intrinsic_k"] == 4);
    CHECK_THAT(echoed["model"]["axes"][0]["intrinsic_period"].get<double>(),
               WithinAbs(200.0, 1e-9));
    std::string error;
    CHECK(load_schema("effective_config.schema.json").validate(echoed, error));
    INFO(error);
    CHECK(error.empty());
  }
  SECTION("every bundled preset validates against the config schema") {
    const auto schema = load_schema("config.schema.json");
    const auto effective_schema = load_schema("effective_config.schema.json");
    for (const auto& entry : std::filesystem::directory_iterator(source_dir / "configs")) {
      const auto parsed = load_json_file(entry.path());
      std::string error;
      INFO(entry.path().string() << ": " << error);
      CHECK(schema.validate(parsed, error));
      const auto cfg = load_config(entry.path());
      CHECK(effective_schema.validate(nlohmann::json::parse(effective_config_json(cfg)), error));
    }
  }
}

TEST_CASE("schema validator enforces its subset") {
  const auto schema = SchemaValidator(nlohmann::json::parse(R"({
    "type": "object",
    "required": ["n"],
    "additionalProperties": false,
    "properties": {
      "n": {"type": "integer", "minimum": 1},
      "tag": {"type": ["string", "null"]}
    }
  })"));
  std::string error;
  CHECK(schema.validate(nlohmann::json::parse(R"({"n": 3, "tag": null})"), error));
  CHECK_FALSE(schema.validate(nlohmann::json::parse(R"({"n": 0})"), error));
  CHECK_THAT(error, ContainsSubstring("minimum"));
  CHECK_FALSE(schema.validate(nlohmann::json::parse(R"({"n": 2, "oops": 1})"), error));
  CHECK_THAT(error, ContainsSubstring("oops"));
  CHECK_FALSE(schema.validate(nlohmann::json::parse(R"({"tag": "x"})"), error));
  CHECK_THAT(error, ContainsSubstring("required"));
}
