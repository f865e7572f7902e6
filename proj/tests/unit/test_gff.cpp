#include <cmath>
#include <numeric>
#include <tuple>

#include <gtest/gtest.h>

#include "gfflab/errors.hpp"
#include "gfflab/gff.hpp"
#include "gfflab/green.hpp"
#include "gfflab/stats.hpp"
#include "test_graphs.hpp"

using namespace gfflab;
using namespace gfflab::testing;

TEST(Gff, PathCovariance) {
  DomainGraph d = path3();
  GreenMatrix g = green(d);
  Rng rng = rng_stream(2, 0);
  const int n = 100000;
  std::vector<double> a(n), b(n), c(n);
  for (int r = 0; r < n; ++r) {
    FieldSample f = sample_gff(g, d, {}, Gauge::marked_point, rng);
    a[r] = f.values[0] * f.values[0];
    b[r] = f.values[0] * f.values[2];
    c[r] = f.values[1] * f.values[2];
  }
  EXPECT_TRUE(moment_ztest("xx", a, 0.75, 4).pass);
  EXPECT_TRUE(moment_ztest("xz", b, 0.25, 4).pass);
  EXPECT_TRUE(moment_ztest("yz", c, 0.5, 4).pass);
}

TEST(Gff, HarmonicExtensionOfConstant) {
  DomainGraph d = square(6);
  GreenMatrix g = green(d);
  std::vector<double> bd(d.dirichlet_vertices().size(), 1.7);
  for (double h : harmonic_extension(g, d, bd)) EXPECT_NEAR(h, 1.7, 1e-12);
}

TEST(Gff, NeumannGauges) {
  DomainGraph d = neumann_restriction(square(6));
  GreenMatrix g = green(d);
  Rng rng = rng_stream(2, 1);
  FieldSample m = sample_gff(g, d, {}, Gauge::marked_point, rng);
  EXPECT_EQ(m.values[d.free_index(d.marked_point())], 0.0);
  FieldSample z = sample_gff(g, d, {}, Gauge::zero_mean, rng);
  EXPECT_NEAR(std::accumulate(z.values.begin(), z.values.end(), 0.0), 0.0, 1e-12);
}

TEST(Gff, NoiseDimensionChecked) {
  DomainGraph d = path3();
  GreenMatrix g = green(d);
  EXPECT_THROW(sample_gff_noise(g, d, {}, Gauge::marked_point, Eigen::VectorXd::Zero(2)), Error);
}

TEST(Cable, BridgeProbability) {
  EXPECT_DOUBLE_EQ(bridge_hit_probability(1, -1, 1), 1.0);
  EXPECT_DOUBLE_EQ(bridge_hit_probability(0, 2, 1), 1.0);
  EXPECT_NEAR(bridge_hit_probability(1, 1, 1), std::exp(-2.0), 1e-16);
  EXPECT_NEAR(bridge_hit_probability(-0.5, -2, 3), std::exp(-6.0), 1e-16);
}

// Split a unit-conductance edge with end values 1, 1 into m pieces, sample the
// Brownian bridge at the cut points and compose the per-piece hit probabilities.
TEST(Cable, SubdivisionConsistency) {
  Rng rng = rng_stream(4, 0);
  const int m = 8, n = 200000;
  std::vector<double> miss(n);
  for (int r = 0; r < n; ++r) {
    double x = 1.0, t = 0.0, prob = 1.0;
    const double dt = 1.0 / m;
    for (int k = 1; k <= m; ++k) {
      double nx;
      if (k == m) {
        nx = 1.0;
      } else {
        // Bridge step from (t, x) towards (1, 1).
        double rem = 1.0 - t;
        double mean = x + (1.0 - x) * dt / rem;
        double var = dt * (rem - dt) / rem;
        nx = mean + std::sqrt(var) * std_normal(rng);
      }
      prob *= 1.0 - bridge_hit_probability(x, nx, m);
      x = nx;
      t += dt;
    }
    miss[r] = prob;
  }
  EXPECT_TRUE(moment_ztest("miss", miss, 1.0 - std::exp(-2.0), 4).pass);
}

TEST(Cable, BandStayLimits) {
  EXPECT_DOUBLE_EQ(bridge_stay_probability(1.5, 0.2, 0.0, 1.0, 1.0), 0.0);
  EXPECT_NEAR(bridge_stay_probability(1.0, 2.0, 0.0, 1e3, 0.7), 1.0 - std::exp(-2.0 * 2.0 * 0.7), 1e-15);
  EXPECT_NEAR(bridge_stay_probability(0.3, 0.6, 0.0, 1.0, 2.0), bridge_stay_probability(0.7, 0.4, 0.0, 1.0, 2.0), 1e-15);
  EXPECT_NEAR(bridge_stay_probability(0.3, 0.6, -1.0, 1.0, 2.0), bridge_stay_probability(1.3, 1.6, 0.0, 2.0, 2.0), 1e-15);
}

// Splitting the bridge at its midpoint: stay(a, b; c) = E[stay(a, m; 2c) stay(m, b; 2c)],
// m ~ N((a + b) / 2, 1 / (4c)), midpoint rule over the band.
TEST(Cable, BandStaySubdivision) {
  const double lo = -0.6, hi = 0.7;
  for (auto [a, b, c] : {std::tuple{0.1, 0.2, 0.5}, std::tuple{-0.5, 0.6, 1.0}, std::tuple{0.0, 0.0, 0.2}}) {
    double mean = 0.5 * (a + b), sd = std::sqrt(0.25 / c);
    double s = 0.0, h = (hi - lo) / 20000;
    for (int k = 0; k < 20000; ++k) {
      double m = lo + (k + 0.5) * h;
      double dens = std::exp(-0.5 * (m - mean) * (m - mean) / (sd * sd)) / (sd * std::sqrt(2.0 * M_PI));
      s += h * dens * bridge_stay_probability(a, m, lo, hi, 2 * c) * bridge_stay_probability(m, b, lo, hi, 2 * c);
    }
    EXPECT_NEAR(s, bridge_stay_probability(a, b, lo, hi, c), 1e-7) << a << ' ' << b << ' ' << c;
  }
}

TEST(Cable, SignChangeAlwaysHits) {
  DomainGraph d = path3();
  FieldSample f;
  f.values = {1.0, -1.0, 2.0};
  f.boundary = {0.0, 0.0};
  Rng rng = rng_stream(1, 0);
  EdgeZeroMarks m = cable_zero_marks(f, d, rng);
  for (int e = 0; e < 4; ++e) EXPECT_EQ(m.hit[e], 1) << e;
}

TEST(Covariance, EmpiricalRejectsNonZeroSumInNeumannMode) {
  DomainGraph d = neumann_restriction(path3());
  GreenMatrix g = green(d);
  Rng rng = rng_stream(1, 2);
  std::vector<FieldSample> s;
  for (int i = 0; i < 10; ++i) s.push_back(sample_gff(g, d, {}, Gauge::zero_mean, rng));
  EXPECT_THROW(empirical_covariance(s, make_test_function({1, 0, 0}), make_test_function({1, -1, 0})), Error);
  EXPECT_NO_THROW(empirical_covariance(s, make_test_function({1, 0, -1}), make_test_function({1, -1, 0})));
}
