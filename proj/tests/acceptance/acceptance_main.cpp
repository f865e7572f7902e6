// Acceptance runner: one PASS/FAIL line per criterion. Reports of the
// statistical runs are written under --out for inspection.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "gfflab/couplings.hpp"
#include "gfflab/experiments.hpp"
#include "gfflab/green.hpp"
#include "gfflab/kernel.hpp"
#include "gfflab/loopsoup.hpp"
#include "test_graphs.hpp"

using namespace gfflab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string out_dir;
int workers = 1;
double scale = 1.0;
int failures = 0;

std::int64_t scaled(std::int64_t n) { return std::max<std::int64_t>(200, static_cast<std::int64_t>(n * scale)); }

void report(int id, const std::string& title, const std::function<Outcome()>& fn) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  failures += !o.pass;
  std::printf("criterion %2d: %s  %s  [%s] (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", title.c_str(), o.detail.c_str(), s);
  std::fflush(stdout);
}

// Verdicts whose names start with one of the prefixes decide the criterion.
Outcome judge(const CouplingReport& r, const std::vector<std::string>& prefixes, const std::string& tag) {
  render_report(r, (std::filesystem::path(out_dir) / tag).string());
  int n = 0, bad = 0;
  std::string first;
  for (const auto& v : r.verdicts) {
    bool hit = false;
    for (const auto& p : prefixes) hit |= v.name.rfind(p, 0) == 0;
    if (!hit) continue;
    ++n;
    if (!recompute_pass(v)) {
      if (!bad) first = v.name + " estimate=" + fmt(v.estimate) + " target=" + fmt(v.target) + " score=" + fmt(v.score);
      ++bad;
    }
  }
  if (n == 0) return {false, "no verdicts matched"};
  std::string d = std::to_string(n - bad) + "/" + std::to_string(n) + " verdicts pass";
  if (bad) d += "; first failure " + first;
  return {bad == 0, d};
}

ExperimentConfig config(const std::string& name, std::int64_t replicas) {
  ExperimentConfig c = default_config(name);
  c.seed = 20240611;
  c.workers = workers;
  c.replicas = scaled(replicas);
  return c;
}

// Walk-loop mass of loops meeting A and B from the truncated trace series.
double series_mass(const Eigen::MatrixXd& p, const std::vector<int>& a, const std::vector<int>& b) {
  const int n = static_cast<int>(p.rows());
  auto restricted = [&](const std::set<int>& drop) {
    Eigen::MatrixXd q = p;
    for (int i : drop) {
      q.row(i).setZero();
      q.col(i).setZero();
    }
    return q;
  };
  std::set<int> sa(a.begin(), a.end()), sb(b.begin(), b.end()), sab = sa;
  sab.insert(b.begin(), b.end());
  Eigen::MatrixXd m[4] = {p, restricted(sa), restricted(sb), restricted(sab)};
  Eigen::MatrixXd pw[4];
  for (auto& x : pw) x = Eigen::MatrixXd::Identity(n, n);
  double total = 0;
  for (int len = 1; len < 100000; ++len) {
    for (int s = 0; s < 4; ++s) pw[s] = pw[s] * m[s];
    double term = (pw[0].trace() - pw[1].trace() - pw[2].trace() + pw[3].trace()) / len;
    total += term;
    // Tail bound from the spectral radius of the full kernel.
    if (len > 20 && std::abs(term) < 1e-14) break;
  }
  return total;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gfflab acceptance criteria"};
  out_dir = "acceptance_out";
  std::set<int> only;
  app.add_option("--out", out_dir, "report directory");
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--scale", scale, "replica scale factor (1 = acceptance size)")->check(CLI::PositiveNumber);
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);
  if (const char* w = std::getenv("GFFLAB_WORKERS")) workers = std::max(1, std::atoi(w));
  std::filesystem::create_directories(out_dir);
  auto want = [&](int id) { return only.empty() || only.count(id); };

  if (want(1))
    report(1, "reflection Green identity on the folded 33x33 square", [] {
      DomainSpec s;
      s.width = s.height = 35;  // 33x33 free vertices inside the ring
      DomainGraph d = build_domain(s);
      Folded f = fold(d);
      GreenMatrix gu = green(d), gf = green(f.domain);
      const DomainGraph& fd = f.domain;
      double err = 0;
      for (int xi = 0; xi < fd.free_count(); ++xi)
        for (int yi = 0; yi < fd.free_count(); ++yi) {
          int x = d.free_index(f.map.fiber[fd.free_vertices()[xi]][0]);
          int yv = f.map.fiber[fd.free_vertices()[yi]][0];
          int y = d.free_index(yv), yb = d.free_index(d.mirror(yv));
          err = std::max(err, std::abs(gf.entry(xi, yi) - (gu.entry(x, y) + gu.entry(x, yb))));
        }
      return Outcome{err <= 1e-10, "folded " + std::to_string(fd.free_count()) + " vertices, max error " + fmt(err)};
    });

  if (want(2))
    report(2, "folded kernel equals the fiber sum of the unfolded kernel", [] {
      DomainSpec s;
      s.width = s.height = 35;
      DomainGraph d = build_domain(s);
      Folded f = fold(d);
      TransitionKernel ku(d), kf(f.domain);
      const DomainGraph& fd = f.domain;
      long bad = 0, checked = 0;
      for (int xi = 0; xi < fd.free_count(); ++xi) {
        int xu = d.free_index(f.map.fiber[fd.free_vertices()[xi]][0]);
        for (int yi = 0; yi < fd.free_count(); ++yi) {
          double want = 0;
          for (int z : f.map.fiber[fd.free_vertices()[yi]]) want += ku.p(xu, d.free_index(z));
          bad += kf.p(xi, yi) != want;
          ++checked;
        }
        bad += kf.killing(xi) != ku.killing(xu);
      }
      return Outcome{bad == 0, std::to_string(checked) + " entries, " + std::to_string(bad) + " mismatches"};
    });

  if (want(3))
    report(3, "hitting mass: determinants vs trace series", [] {
      Rng rng = rng_stream(3, 0);
      double worst = 0;
      for (int t = 0; t < 10; ++t) {
        int n = 20 + static_cast<int>(uniform_index(rng, 81));
        int k = 2 + static_cast<int>(uniform_index(rng, n / 4));
        DomainGraph d = gfflab::testing::random_graph(n, k, rng);
        TransitionKernel kern(d);
        const int m = kern.size();
        std::vector<int> a, b;
        for (int i = 0; i < m; ++i) {
          double u = uniform01(rng);
          if (u < 0.1) a.push_back(i);
          else if (u < 0.2) b.push_back(i);
        }
        if (a.empty()) a.push_back(0);
        if (b.empty()) b.push_back(m - 1);
        double want = series_mass(kern.dense(), a, b);
        worst = std::max({worst, std::abs(hitting_mass(kern, a, b) - want),
                          std::abs(hitting_mass_schur(kern, a, b) - want)});
      }
      return Outcome{worst <= 1e-6, "max deviation " + fmt(worst)};
    });

  if (want(4))
    report(4, "m(eps) scaling on the upper-half box", [] {
      ExperimentConfig c = config("mass_scaling", 2);
      c.replicas = 2;
      return judge(run_experiment(c), {"mass."}, "mass_scaling");
    });

  if (want(5))
    report(5, "Le Jan isomorphism on the 5x5 grid", [] {
      return judge(run_experiment(config("lejan", 200000)), {"lejan.mean.", "lejan.ks_failures"}, "lejan");
    });

  CouplingReport lupu;
  bool have_lupu = false;
  if (want(6) || want(10)) {
    try {
      lupu = run_experiment(config("lupu", 200000));
      have_lupu = true;
    } catch (const std::exception& e) {
      std::printf("lupu run failed: %s\n", e.what());
    }
  }
  if (want(6))
    report(6, "Lupu sign reconstruction", [&] {
      if (!have_lupu) return Outcome{false, "run failed"};
      return judge(lupu, {"lupu.covariance_violations", "lupu.cross_cluster_sign_product"}, "lupu");
    });

  if (want(7))
    report(7, "folded c/2 soup vs reflected c soup", [] {
      return judge(run_experiment(config("folding", 100000)), {"folding.loop_count", "folding.occupation_ks_failures"},
                   "folding");
    });

  CouplingReport t1;
  bool have_t1 = false;
  if (want(8) || want(9)) {
    try {
      ExperimentConfig c = config("theorem1", 20000);
      c.offsets = {0.0, 0.6 * kLambda, kLambda};
      t1 = run_experiment(c);
      have_t1 = true;
    } catch (const std::exception& e) {
      std::printf("theorem1 run failed: %s\n", e.what());
    }
  }
  if (want(8))
    report(8, "Theorem 1 coupling along the half-disc ladder", [&] {
      if (!have_t1) return Outcome{false, "run failed"};
      return judge(t1, {"theorem1."}, "theorem1");
    });
  if (want(9))
    report(9, "shift invariance of boundary level clusters", [&] {
      if (!have_t1) return Outcome{false, "run failed"};
      return judge(t1, {"shift."}, "theorem1");
    });

  if (want(10))
    report(10, "cluster correlation identity and arcs count", [&] {
      if (!have_lupu) return Outcome{false, "lupu run failed"};
      Outcome a = judge(lupu, {"lupu.cluster_identity_violations"}, "lupu");
      Outcome b = judge(run_experiment(config("arcs_count", 20000)), {"arcs."}, "arcs_count");
      return Outcome{a.pass && b.pass, "identity: " + a.detail + "; arcs: " + b.detail};
    });

  if (want(11))
    report(11, "exponent algebra", [] {
      double worst = 0;
      ExponentTable one = exponents(1.0), half = exponents(0.5);
      worst = std::max({std::abs(one.kappa - 4), std::abs(one.rho + 1), std::abs(one.beta - 1.0 / 16),
                        std::abs(half.kappa - 3), std::abs(half.rho - (std::sqrt(5.0 / 8) - 2.5))});
      Rng rng = rng_stream(11, 0);
      for (int i = 0; i < 10000; ++i) {
        double c = uniform01(rng);
        ExponentTable t = exponents(c);
        worst = std::max({worst, std::abs(central_charge(t.kappa) - c), std::abs(hookup_beta(t.kappa, t.rho) - t.beta),
                          std::abs(oblique_exponent(c, 0.5) - c / 16)});
      }
      return Outcome{worst <= 1e-12, "max deviation " + fmt(worst)};
    });

  if (want(12))
    report(12, "byte-identical reports across reruns and worker counts", [] {
      std::vector<ExperimentConfig> cs;
      for (const auto& name : experiment_names()) {
        ExperimentConfig c = default_config(name);
        c.seed = 99;
        c.replicas = 200;
        if (name == "theorem1") {
          c.grid_ladder = {16, 24};
          c.offsets = {0.0, kLambda};
        }
        if (name == "shift") c.grid_ladder = {24};
        if (name == "arcs_count") c.grid_ladder = {24};
        if (name == "mass_scaling") c.grid_ladder = {40, 80};
        if (name == "folding") c.domain.width = c.domain.height = 9;
        cs.push_back(c);
      }
      int same = 0;
      std::string bad;
      for (auto c : cs) {
        c.workers = 1;
        std::string a = report_json(run_experiment(c));
        std::string b = report_json(run_experiment(c));
        c.workers = 3;
        std::string d = report_json(run_experiment(c));
        if (a == b && a == d)
          ++same;
        else
          bad += c.experiment + " ";
      }
      return Outcome{same == static_cast<int>(cs.size()),
                     std::to_string(same) + "/" + std::to_string(cs.size()) + " experiments identical" +
                         (bad.empty() ? "" : "; differing: " + bad)};
    });

  std::printf("%d criteria failed\n", failures);
  return failures ? 1 : 0;
}
