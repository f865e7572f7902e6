// gfflab command line: run experiments and small standalone computations.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gfflab/clusters.hpp"
#include "gfflab/config.hpp"
#include "gfflab/couplings.hpp"
#include "gfflab/experiments.hpp"
#include "gfflab/green.hpp"
#include "gfflab/loopsoup.hpp"
#include "gfflab/report.hpp"

using namespace gfflab;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool with_out) {
  app->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "override the config seed");
  app->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  if (with_out) app->add_option("--out", c.out, "output directory");
}

// Precedence: flag, then environment, then config file.
ExperimentConfig load(const Common& c, const std::string& experiment, const CLI::App* app) {
  ExperimentConfig cfg = c.config.empty() ? default_config(experiment) : parse_config(slurp(c.config));
  if (!experiment.empty() && !c.config.empty() && cfg.experiment != experiment)
    throw Error("config is for '" + cfg.experiment + "', not '" + experiment + "'");
  if (const char* w = std::getenv("GFFLAB_WORKERS")) cfg.workers = std::max(1, std::atoi(w));
  if (const char* o = std::getenv("GFFLAB_OUT")) cfg.output_dir = o;
  if (app->count("--seed")) cfg.seed = c.seed;
  if (app->count("--workers")) cfg.workers = c.workers;
  if (app->count("--out")) cfg.output_dir = c.out;
  return cfg;
}

void emit(const std::string& text, const std::string& out, const std::string& name) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(out);
  std::ofstream f(std::filesystem::path(out) / name);
  if (!f) throw Error("cannot write " + (std::filesystem::path(out) / name).string());
  f << text;
  std::cout << (std::filesystem::path(out) / name).string() << "\n";
}

int print_verdicts(const std::vector<StatVerdict>& vs) {
  bool ok = true;
  for (const auto& v : vs) {
    bool pass = recompute_pass(v);
    ok &= pass;
    std::cout << (pass ? "PASS " : "FAIL ") << v.name << "  estimate=" << fmt(v.estimate)
              << " target=" << fmt(v.target) << " score=" << fmt(v.score) << "\n";
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gfflab: Gaussian free field and loop-soup couplings on lattice domains"};
  app.require_subcommand(1);

  Common green_opt, soup_opt, run_opt;
  std::string green_mode = "automatic";
  auto* green_cmd = app.add_subcommand("green", "Green matrix of the config domain as CSV");
  add_common(green_cmd, green_opt, true);
  green_cmd->add_option("--mode", green_mode, "automatic, dirichlet, mixed or neumann")
      ->check(CLI::IsMember({"automatic", "dirichlet", "mixed", "neumann"}));

  int mass_len = 200, mass_dist = 0;
  double mass_eps = 0.1;
  auto* mass_cmd = app.add_subcommand("mass", "Loop mass between the neumann half-line and a slit");
  mass_cmd->add_option("--length", mass_len, "bottom edge L")->check(CLI::Range(10, 4000));
  mass_cmd->add_option("--distance", mass_dist, "split to slit distance (default L/5)");
  mass_cmd->add_option("--eps", mass_eps, "relative slit height")->check(CLI::Range(0.0, 1.0));

  auto* soup_cmd = app.add_subcommand("soup", "Sample one loop soup on the config domain");
  add_common(soup_cmd, soup_opt, true);

  double exp_c = 1.0, exp_u = -1.0;
  auto* exp_cmd = app.add_subcommand("exponent", "kappa, rho and the hook-up exponent for a central charge");
  exp_cmd->add_option("--c", exp_c, "central charge in (0, 1]");
  exp_cmd->add_option("--u", exp_u, "oblique reflection parameter in [0, 1]");

  std::string experiment;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write its report");
  run_cmd->add_option("experiment", experiment)->required()->check(CLI::IsMember(experiment_names()));
  add_common(run_cmd, run_opt, true);

  std::string report_path;
  auto* report_cmd = app.add_subcommand("report", "Re-check the verdicts of a report.json");
  report_cmd->add_option("path", report_path, "report.json or its directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*green_cmd) {
      ExperimentConfig cfg = load(green_opt, "", green_cmd);
      DomainGraph d = build_domain(cfg.domain);
      GreenMode mode = green_mode == "dirichlet" ? GreenMode::dirichlet
                       : green_mode == "mixed"   ? GreenMode::mixed
                       : green_mode == "neumann" ? GreenMode::neumann
                                                 : GreenMode::automatic;
      if (mode == GreenMode::neumann && d.has_dirichlet()) d = neumann_restriction(d);
      emit(green_csv(green(d, mode)), green_cmd->count("--out") ? cfg.output_dir : "", "green.csv");
      return 0;
    }
    if (*mass_cmd) {
      MassPoint p = mass_point(mass_len, mass_dist > 0 ? mass_dist : mass_len / 5, mass_eps);
      json j{{"length", p.length}, {"distance", p.distance}, {"eps", p.eps}, {"slit", p.slit},
             {"walk_mass", p.walk_mass}, {"mass", p.mass}, {"mass_over_eps2", p.mass / (p.eps * p.eps)}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (*soup_cmd) {
      ExperimentConfig cfg = load(soup_opt, "", soup_cmd);
      DomainGraph d = build_domain(cfg.domain);
      TransitionKernel k(d);
      Rng rng = rng_stream(cfg.seed, 0);
      LoopSoup s = sample_soup(k, cfg.c, rng, cfg.soup_method);
      emit(soup_records(s), soup_cmd->count("--out") ? cfg.output_dir : "", "soup.txt");
      return 0;
    }
    if (*exp_cmd) {
      ExponentTable t = exponents(exp_c);
      json j{{"c", t.c}, {"kappa", t.kappa}, {"rho", t.rho}, {"beta", t.beta},
             {"reflected_exponent", t.reflected_exponent}};
      if (exp_u >= 0) j["oblique_exponent"] = oblique_exponent(exp_c, exp_u);
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (*run_cmd) {
      ExperimentConfig cfg = load(run_opt, experiment, run_cmd);
      CouplingReport r = run_experiment(cfg);
      auto files = render_report(r, cfg.output_dir);
      std::cout << "wrote " << files.size() << " files to " << cfg.output_dir << " in " << fmt(r.wall_clock_seconds)
                << " s\n";
      return print_verdicts(r.verdicts);
    }
    if (*report_cmd) {
      std::filesystem::path p(report_path);
      if (std::filesystem::is_directory(p)) p /= "report.json";
      ReportSummary s = read_report(slurp(p.string()));
      std::cout << s.experiment << "\n";
      return print_verdicts(s.verdicts);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
