#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "gfflab/errors.hpp"
#include "gfflab/config.hpp"
#include "gfflab/experiments.hpp"
#include "gfflab/report.hpp"
#include "gfflab/rng.hpp"
#include "gfflab/stats.hpp"

using namespace gfflab;

TEST(Config, MinimalLejan) {
  ExperimentConfig c = parse_config(R"({"experiment": "lejan", "domain": {"width": 5}, "replicas": 1000, "seed": 7})");
  EXPECT_EQ(c.domain.width, 5);
  EXPECT_EQ(c.domain.height, 5);
  EXPECT_EQ(c.replicas, 1000);
  EXPECT_EQ(c.seed, 7u);
  auto echoed = nlohmann::json::parse(echo_config(c));
  EXPECT_EQ(echoed["tolerances"]["z"], 4.0);
  EXPECT_EQ(echoed["tolerances"]["ks_alpha"], 0.01);
  EXPECT_EQ(echoed["c"], 1.0);
}

static ConfigError config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no error for " << text;
  return ConfigError("", 0, "");
}

TEST(Config, NegativeReplicasNamesField) {
  ConfigError e = config_error("{\"experiment\": \"lejan\",\n \"replicas\": -3}");
  EXPECT_EQ(e.field, "replicas");
  EXPECT_EQ(e.line, 2);
}

TEST(Config, DuplicateKey) {
  ConfigError e = config_error("{\"experiment\": \"lejan\",\n\"seed\": 1,\n\"seed\": 2}");
  EXPECT_EQ(e.field, "seed");
  EXPECT_EQ(e.line, 3);
}

TEST(Config, UnknownKeys) {
  EXPECT_EQ(config_error(R"({"experiment": "lejan", "bogus": 1})").field, "bogus");
  EXPECT_EQ(config_error(R"({"experiment": "lejan", "domain": {"radius": 3}})").field, "domain.radius");
  EXPECT_EQ(config_error(R"({"experiment": "lejan", "tolerances": {"zz": 3}})").field, "tolerances.zz");
  EXPECT_EQ(config_error(R"({"experiment": "nope"})").field, "experiment");
}

TEST(Config, MalformedHasLine) {
  ConfigError e = config_error("{\"experiment\": \"lejan\",\n\n  \"seed\": }");
  EXPECT_EQ(e.line, 3);
}

TEST(Config, TypeAndRangeErrors) {
  EXPECT_EQ(config_error(R"({"experiment": "lejan", "workers": 0})").field, "workers");
  EXPECT_EQ(config_error(R"({"experiment": "lejan", "c": "one"})").field, "c");
  EXPECT_EQ(config_error(R"({"experiment": "lejan", "seed": -1})").field, "seed");
  EXPECT_EQ(config_error(R"({"experiment": "lejan", "eps_ladder": [1.5]})").field, "eps_ladder");
  EXPECT_EQ(config_error(R"({"experiment": "lejan", "domain": {"sides": ["dirichlet"]}})").field, "domain.sides");
}

TEST(Config, RoundTripIsFixedPoint) {
  for (const auto& name : experiment_names()) {
    ExperimentConfig c = default_config(name);
    c.seed = 0xfedcba9876543210ull;
    c.tolerances["z"] = 3.5;
    std::string once = echo_config(c);
    std::string twice = echo_config(parse_config(once));
    EXPECT_EQ(once, twice) << name;
  }
}

TEST(Stats, IdenticalSamplesPass) {
  std::vector<double> a(100);
  for (int i = 0; i < 100; ++i) a[i] = std::sin(i);
  StatVerdict v = ks_two_sample("same", a, a, 0.01);
  EXPECT_EQ(v.estimate, 0.0);
  EXPECT_TRUE(v.pass);
}

TEST(Stats, SeparatedNormalsFail) {
  Rng rng = rng_stream(6, 0);
  std::vector<double> a(10000), b(10000);
  for (auto& x : a) x = std_normal(rng);
  for (auto& x : b) x = 3 + std_normal(rng);
  EXPECT_FALSE(ks_two_sample("sep", a, b, 1e-6).pass);
}

TEST(Stats, KsNeedsFifty) {
  std::vector<double> a(49, 1.0);
  EXPECT_THROW(ks_two_sample("small", a, a, 0.01), Error);
}

TEST(Stats, KolmogorovDistribution) {
  EXPECT_NEAR(kolmogorov_q(1.36), 0.0494, 5e-4);
  EXPECT_NEAR(kolmogorov_q(1.63), 0.0098, 3e-4);
  EXPECT_EQ(kolmogorov_q(0.0), 1.0);
}

TEST(Stats, ZTestPassRate) {
  Rng rng = rng_stream(6, 1);
  int pass = 0;
  const int runs = 2000;
  for (int r = 0; r < runs; ++r) {
    std::vector<double> s(500);
    for (auto& x : s) x = 0.25 + 0.7 * std_normal(rng);
    pass += moment_ztest("m", s, 0.25, 4).pass;
  }
  // Batch means with 49 degrees of freedom: two-sided tail at 4 is about 2e-4.
  EXPECT_GE(pass, runs - 3);
}

TEST(Stats, VerdictPurity) {
  std::vector<StatVerdict> vs = {z_verdict("z", 1.0, 0.1, 1.3, 4), count_verdict("c", 2, 1),
                                 bound_verdict("b", 0.1, 0.0, 0.1, 0.15), range_verdict("r", 4.0, 3.4, 4.6)};
  for (const auto& v : vs) EXPECT_EQ(recompute_pass(v), v.pass) << v.name;
  EXPECT_TRUE(vs[0].pass);
  EXPECT_FALSE(vs[1].pass);
}

TEST(Report, EmptyReportIsValidJson) {
  CouplingReport r;
  r.experiment = "lejan";
  r.domain = "{}";
  r.config = "{}";
  auto j = nlohmann::json::parse(report_json(r));
  EXPECT_TRUE(j["verdicts"].empty());
  ReportSummary s = read_report(report_json(r));
  EXPECT_EQ(s.experiment, "lejan");
}

TEST(Report, ManifestMatchesFiles) {
  CouplingReport r;
  r.experiment = "x";
  r.domain = "{}";
  r.config = "{}";
  r.tables.push_back({"t", {"a", "b"}, {{"1", "2"}}});
  r.figures.push_back({"f", svg_heatmap("h", {{0, 0, 1.0}, {1, 0, -1.0}})});
  r.verdicts.push_back(z_verdict("v", 0.0, 1.0, 0.0, 4));
  auto dir = std::filesystem::temp_directory_path() / "gfflab_manifest_test";
  std::filesystem::remove_all(dir);
  auto files = render_report(r, dir.string());
  auto j = nlohmann::json::parse(report_json(r));
  std::vector<std::string> listed = j["files"].get<std::vector<std::string>>();
  std::vector<std::string> on_disk;
  for (const auto& e : std::filesystem::directory_iterator(dir)) on_disk.push_back(e.path().filename().string());
  std::sort(on_disk.begin(), on_disk.end());
  std::sort(listed.begin(), listed.end());
  on_disk.erase(std::remove(on_disk.begin(), on_disk.end(), "timing.txt"), on_disk.end());
  EXPECT_EQ(listed, on_disk);
  ReportSummary s = read_report(j.dump());
  ASSERT_EQ(s.verdicts.size(), 1u);
  EXPECT_TRUE(recompute_pass(s.verdicts[0]));
  std::filesystem::remove_all(dir);
}

TEST(Report, LogLogReferenceLine) {
  Series ref{"eps^2/32", {{0.01, 1e-4 / 32}, {0.2, 0.04 / 32}}, true};
  std::string svg = svg_loglog("m", "eps", "m", {ref});
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("eps^2/32"), std::string::npos);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
}

TEST(Parallel, ResultIndependentOfWorkers) {
  std::vector<double> a(200), b(200);
  auto body = [](std::vector<double>& out) {
    return [&out](std::int64_t i) {
      Rng r = rng_stream(9, static_cast<std::uint64_t>(i));
      out[i] = std_normal(r);
    };
  };
  parallel_for(200, 1, body(a));
  parallel_for(200, 3, body(b));
  EXPECT_EQ(a, b);
  EXPECT_THROW(parallel_for(10, 2, [](std::int64_t i) { if (i == 7) throw Error("boom"); }), Error);
}

TEST(Mass, SmallBoxIsPositiveAndGrows) {
  MassPoint a = mass_point(40, 8, 0.25), b = mass_point(40, 8, 0.5);
  EXPECT_EQ(a.slit, 2);
  EXPECT_EQ(b.slit, 4);
  EXPECT_GT(a.mass, 0.0);
  EXPECT_GT(b.mass, a.mass);
  EXPECT_NEAR(a.mass, a.walk_mass / 2, 1e-15);
}
