#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "tide/error.hpp"
#include "tide/reporting.hpp"

using namespace tide;

namespace {

RunLog run_for(const std::string& model, const std::string& env, MemoryMode mode,
               const std::vector<std::optional<int>>& turns, int t_max = 4) {
  RunLog run = testing::make_run(turns, t_max, model + "/" + env + "/" + mode.to_string());
  run.metadata.model_name = model;
  run.metadata.environment_name = env;
  run.metadata.memory_mode = mode;
  return run;
}

ComparisonRow row(const std::string& model, const std::string& env, double auv, double lr,
                  std::optional<double> mi = {}) {
  ComparisonRow r;
  r.model = model;
  r.environment = env;
  r.auv = auv;
  r.lr = lr;
  r.mi = mi;
  return r;
}

}  // namespace

TEST_CASE("comparison rows are per run and sorted") {
  const std::vector<RunLog> runs = {run_for("m", "sudoku", MemoryMode::full(), {1, 2}),
                                    run_for("m", "frozenlake", MemoryMode::full(), {std::nullopt, 3})};
  const ComparisonTable t = build_comparison(runs);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].environment == "frozenlake");
  CHECK(t.rows[0].sr == 0.5);
  CHECK_FALSE(t.rows[0].mi.has_value());
  CHECK_FALSE(t.rows[0].recall_lag_mean.has_value());
  CHECK(t.rows[1].provenance.at("auv") == std::vector<std::string>{"m/sudoku/full"});
}

TEST_CASE("a without-memory run populates MI") {
  const RunLog with = run_for("m", "alfworld", MemoryMode::full(), {1, 2, 3, std::nullopt});
  const RunLog without = run_for("m", "alfworld", MemoryMode::none(), {2, std::nullopt, 3, std::nullopt});
  const ComparisonTable t = build_comparison({without, with});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].memory_mode == MemoryMode::full());
  REQUIRE(t.rows[0].mi.has_value());
  CHECK(*t.rows[0].mi == doctest::Approx(t.rows[0].auv - t.rows[1].auv));
  CHECK(t.rows[0].provenance.at("mi").size() == 2);
  CHECK_FALSE(t.rows[1].mi.has_value());
}

TEST_CASE("duplicate run combinations are rejected") {
  const RunLog a = run_for("m", "e", MemoryMode::full(), {1});
  try {
    build_comparison({a, a});
    FAIL("expected DuplicateRun");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDuplicateRun);
  }
}

TEST_CASE("metric errors name the run") {
  RunLog empty = run_for("m", "e", MemoryMode::full(), {1});
  empty.trajectories.clear();
  try {
    build_comparison({empty});
    FAIL("expected EmptyRun");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyRun);
    CHECK(std::string(e.what()).find("m/e/full") != std::string::npos);
  }
}

TEST_CASE("radar normalisation examples") {
  const auto unit = normalize_axis({0.30, 0.50, 0.70}, 0.0, 1.0);
  CHECK(unit[0] == 0.0);
  CHECK(unit[1] == doctest::Approx(0.5));
  CHECK(unit[2] == 1.0);
  const auto shifted = normalize_axis({0.30, 0.50, 0.70}, 0.05, 0.95);
  CHECK(shifted[0] == doctest::Approx(0.05));
  CHECK(shifted[1] == doctest::Approx(0.5));
  CHECK(shifted[2] == doctest::Approx(0.95));
  CHECK(normalize_axis({0.4, 0.4}, 0.05, 0.95) == std::vector<double>{0.5, 0.5});

  ComparisonTable t;
  t.rows = {row("a", "e", 0.3, 0.2, 0.1), row("b", "e", 0.5, 0.6), row("c", "e", 0.7, 0.4, -0.1)};
  const RadarResult r = radar_normalize(t);
  const auto& p = r.by_environment.at("e");
  REQUIRE(p.size() == 3);
  CHECK(p[0].auv_norm == doctest::Approx(0.05));
  CHECK(p[2].auv_norm == doctest::Approx(0.95));
  // 1 - LR: {0.8, 0.4, 0.6}
  CHECK(p[0].inv_lr_norm == doctest::Approx(0.95));
  CHECK(p[1].inv_lr_norm == doctest::Approx(0.05));
  CHECK(p[2].inv_lr_norm == doctest::Approx(0.5));
  CHECK(*p[0].mi_norm == doctest::Approx(0.95));
  CHECK_FALSE(p[1].mi_norm.has_value());
  CHECK(r.warnings.empty());
}

TEST_CASE("single-model environments are centred with a warning") {
  ComparisonTable t;
  t.rows = {row("a", "e", 0.3, 0.2)};
  const RadarResult r = radar_normalize(t);
  CHECK(r.by_environment.at("e")[0].auv_norm == doctest::Approx(0.5));
  CHECK(r.warnings.size() == 1);
  CHECK_THROWS_AS(radar_normalize(t, 0.9, 0.1), Error);
}

TEST_CASE("radar keeps per-axis order and the argmax") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    ComparisonTable t;
    const int models = std::uniform_int_distribution<int>(2, 6)(rng);
    for (int m = 0; m < models; ++m) t.rows.push_back(row("m" + std::to_string(m), "e", u(rng), u(rng), u(rng) - 0.5));
    const auto profiles = radar_normalize(t, 0.05, 0.95).by_environment.at("e");
    for (int i = 0; i < models; ++i) {
      for (int j = 0; j < models; ++j) {
        const auto& ri = t.rows[static_cast<std::size_t>(i)];
        const auto& rj = t.rows[static_cast<std::size_t>(j)];
        if (ri.auv < rj.auv) CHECK(profiles[static_cast<std::size_t>(i)].auv_norm < profiles[static_cast<std::size_t>(j)].auv_norm);
        if (ri.lr < rj.lr) CHECK(profiles[static_cast<std::size_t>(i)].inv_lr_norm > profiles[static_cast<std::size_t>(j)].inv_lr_norm);
      }
    }
  }
}

TEST_CASE("curve CSV format") {
  const std::vector<std::pair<std::string, SuccessCurve>> one = {{"m", SuccessCurve({0, 1, 1}, 1)}};
  CHECK(render_curve(one, CurveFormat::kCsv) == "t,m\n0,0.000000\n1,1.000000\n2,1.000000\n");

  const std::vector<std::pair<std::string, SuccessCurve>> two = {{"a,b", SuccessCurve({0, 1.0 / 3.0}, 3)},
                                                                 {"c", SuccessCurve({0, 0.5}, 2)}};
  CHECK(render_curve(two, CurveFormat::kCsv) == "t,\"a,b\",c\n0,0.000000,0.000000\n1,0.333333,0.500000\n");
}

TEST_CASE("curve CSV round-trips at six decimals") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 97)(rng);
    const int t_max = std::uniform_int_distribution<int>(1, 30)(rng);
    const SuccessCurve c = build_success_curve(testing::random_turns(rng, n, t_max + 3), t_max);
    std::istringstream csv(render_curve({{"x", c}}, CurveFormat::kCsv));
    std::string line;
    std::getline(csv, line);
    for (int t = 0; t <= t_max; ++t) {
      REQUIRE(std::getline(csv, line));
      const double v = std::stod(line.substr(line.find(',') + 1));
      CHECK(std::abs(v - c[t]) <= 5e-7);
    }
  }
}

TEST_CASE("SVG output is deterministic and horizons must match") {
  const std::vector<std::pair<std::string, SuccessCurve>> curves = {{"a<b>", SuccessCurve({0, 0.5, 1}, 2)},
                                                                    {"c", SuccessCurve({0, 0, 0.5}, 2)}};
  const std::string svg = render_curve(curves, CurveFormat::kSvg);
  CHECK(svg == render_curve(curves, CurveFormat::kSvg));
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("a&lt;b&gt;") != std::string::npos);

  const std::vector<std::pair<std::string, SuccessCurve>> mixed = {{"a", SuccessCurve({0, 1}, 1)},
                                                                   {"b", SuccessCurve({0, 1, 1}, 1)}};
  try {
    render_curve(mixed, CurveFormat::kCsv);
    FAIL("expected MismatchedHorizons");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMismatchedHorizons);
  }
  try {
    render_curve({}, CurveFormat::kSvg);
    FAIL("expected EmptyInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyInput);
  }
}

TEST_CASE("report bundle layout") {
  const auto dir = std::filesystem::temp_directory_path() / "tide_bundle_test";
  std::filesystem::remove_all(dir);
  const std::vector<RunLog> runs = {run_for("a", "web shop", MemoryMode::full(), {1, 2}),
                                    run_for("b", "web shop", MemoryMode::full(), {2, std::nullopt})};
  const ComparisonTable t = build_comparison(runs);
  write_report_bundle(dir, t, radar_normalize(t), R"({"command":"test"})");
  CHECK(std::filesystem::exists(dir / "report.json"));
  CHECK(std::filesystem::exists(dir / "comparison.csv"));
  CHECK(std::filesystem::exists(dir / "curves" / "web_shop.csv"));
  CHECK(std::filesystem::exists(dir / "curves" / "web_shop.svg"));
  CHECK(std::filesystem::exists(dir / "radar" / "web_shop.json"));
  std::filesystem::remove_all(dir);
}
