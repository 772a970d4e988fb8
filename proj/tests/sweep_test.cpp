#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ecst/sweep.hpp"

using namespace ecst;

namespace {

SweepConfig small_config() {
  SweepConfig c = SweepConfig::defaults();
  c.alpha_sq_grid = {0.5, 3.0, 10.0};
  c.theta_grid = {0.0, kPi / 2};
  c.phi_grid = {0.0};
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, RoundTripIsIdentity) {
  SweepConfig c = SweepConfig::defaults();
  c.alpha_sq_grid = {0.1, 1.0 / 3.0, 29.999999999};
  c.truncation_tail = 3e-13;
  c.outputs = "some/dir";
  c.format = OutputFormat::json;
  const SweepConfig back = parse_config(serialize_config(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(serialize_config(back), serialize_config(c));
  EXPECT_EQ(parse_config(serialize_config(SweepConfig::defaults())), SweepConfig::defaults());
}

TEST(Config, MissingKeysKeepDefaultsAndBadInputIsRejected) {
  const auto c = parse_config(R"({"alpha_sq_grid": [2, 4]})");
  EXPECT_EQ(c.alpha_sq_grid, (std::vector<double>{2, 4}));
  EXPECT_EQ(c.theta_grid, SweepConfig::defaults().theta_grid);
  EXPECT_THROW(parse_config(R"({"alpha_sq": [2]})"), Error);
  EXPECT_THROW(parse_config(R"({"alpha_sq_grid": [0]})"), Error);
  EXPECT_THROW(parse_config(R"({"alpha_sq_grid": []})"), Error);
  EXPECT_THROW(parse_config(R"({"truncation_tail": 0.1})"), Error);
  EXPECT_THROW(parse_config(R"({"format": "xml"})"), Error);
  EXPECT_THROW(parse_config("[1, 2"), Error);
  EXPECT_THROW(parse_config(R"({"theta_grid": "pi"})"), Error);
}

TEST(Sweep, RowsFollowGridOrderAndAreDeterministic) {
  const auto cfg = small_config();
  const auto a = run_sweep(cfg, 1);
  const auto b = run_sweep(cfg, 4);
  ASSERT_EQ(a.rows.size(), cfg.points().size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].point, cfg.points()[i]);
  EXPECT_EQ(to_csv(a), to_csv(b));
  EXPECT_EQ(to_json_text(a), to_json_text(b));
}

TEST(Sweep, EmittedNumbersAreFinite) {
  const auto r = run_sweep(small_config(), 2);
  for (const auto& row : r.rows) {
    ASSERT_EQ(row.values.size(), r.columns.size());
    for (const auto& v : row.values) {
      if (v) {
        EXPECT_TRUE(std::isfinite(*v));
      }
    }
  }
  const std::string csv = to_csv(r);
  EXPECT_EQ(csv.find("nan"), std::string::npos);
  EXPECT_EQ(csv.find("inf"), std::string::npos);
}

TEST(Sweep, ColumnsCarryTheSimulatedValues) {
  const auto r = run_sweep(small_config(), 1);
  const auto& row = r.rows[5];  // alpha_sq = 10, theta = pi/2
  EXPECT_DOUBLE_EQ(*row.values[r.column("alpha_sq")], 10.0);
  EXPECT_NEAR(*row.values[r.column("p_plus")], 0.25, 1e-3);
  EXPECT_NEAR(*row.values[r.column("f_avg_exact")], 0.947, 0.01);
  EXPECT_THROW(r.column("nope"), Error);
}

TEST(Figures, WritesEveryFileAndIsByteIdenticalOnRerun) {
  auto cfg = small_config();
  cfg.outputs = (std::filesystem::temp_directory_path() / "ecst_fig_test").string();
  std::filesystem::remove_all(cfg.outputs);
  const auto r = run_sweep(cfg, 2);
  const auto first = write_figures(r, cfg);
  ASSERT_EQ(first.size(), figure_specs().size());
  std::vector<std::string> contents;
  for (const auto& p : first) contents.push_back(slurp(p));
  write_figures(run_sweep(cfg, 3), cfg);
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(slurp(first[i]), contents[i]);
  EXPECT_EQ(contents[0].substr(0, contents[0].find('\n')), "alpha_sq,concurrence,concurrence_closed_form");
  // fig1 keeps one row per alpha_sq.
  EXPECT_EQ(std::count(contents[0].begin(), contents[0].end(), '\n'), 4);
}

TEST(Writers, UnwritablePathIsAnIoError) {
  try {
    write_text("/proc/definitely/not/here.csv", "x");
    FAIL() << "expected an io failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::io_failure);
  }
}
