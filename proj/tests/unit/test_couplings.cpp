#include <cmath>

#include <gtest/gtest.h>

#include "gfflab/errors.hpp"
#include "gfflab/couplings.hpp"
#include "gfflab/gff.hpp"
#include "gfflab/rng.hpp"

using namespace gfflab;

TEST(Exponents, UnitCharge) {
  ExponentTable t = exponents(1.0);
  EXPECT_NEAR(t.kappa, 4.0, 1e-12);
  EXPECT_NEAR(t.rho, -1.0, 1e-12);
  EXPECT_NEAR(t.beta, 1.0 / 16.0, 1e-12);
  EXPECT_NEAR(t.reflected_exponent, 1.0 / 16.0, 1e-15);
}

TEST(Exponents, HalfCharge) {
  ExponentTable t = exponents(0.5);
  EXPECT_NEAR(t.kappa, 3.0, 1e-12);
  EXPECT_NEAR(t.rho, std::sqrt(5.0 / 8.0) - 2.5, 1e-12);
}

TEST(Exponents, QuadraticIdentities) {
  Rng rng = rng_stream(77, 0);
  for (int i = 0; i < 10000; ++i) {
    double c = uniform01(rng);
    ExponentTable t = exponents(c);
    ASSERT_GT(t.kappa, 8.0 / 3.0);
    ASSERT_LE(t.kappa, 4.0 + 1e-12);
    ASSERT_NEAR(central_charge(t.kappa), c, 1e-12);
    ASSERT_NEAR(hookup_beta(t.kappa, t.rho), t.beta, 1e-12);
  }
}

TEST(Exponents, Ranges) {
  EXPECT_THROW(exponents(0.0), Error);
  EXPECT_THROW(exponents(1.5), Error);
  EXPECT_THROW(oblique_exponent(1.0, 0.0), Error);
  EXPECT_THROW(oblique_exponent(1.0, 1.0), Error);
}

TEST(Exponents, Oblique) {
  EXPECT_NEAR(oblique_exponent(1.0, 0.5), 1.0 / 16.0, 1e-15);
  EXPECT_NEAR(oblique_exponent(2.0, 0.25), 3.0 / 32.0, 1e-15);
  for (double c : {0.1, 0.5, 1.0}) EXPECT_NEAR(oblique_exponent(c, 0.5), c / 16.0, 1e-15);
}

TEST(HeightGap, Constant) {
  EXPECT_NEAR(kLambda, std::sqrt(kPi / 8.0), 2e-16);
  EXPECT_NEAR(4 * kLambda, 2.50662827463, 1e-10);
}

TEST(Heights, TreeWalk) {
  CellComplex cc;
  cc.count = 3;
  cc.epsilon = {1, -1, 1};
  cc.root = 0;
  cc.parent = {-1, 0, 1};
  cc.bfs_order = {0, 1, 2};
  Rng rng = rng_stream(2, 2);
  for (int t = 0; t < 100; ++t) {
    HeightLabels h = resample_heights(cc, rng);
    EXPECT_EQ(h.eta[0], 1);
    EXPECT_EQ(std::abs(h.eta[1] - h.eta[0]), 2);
    EXPECT_EQ(std::abs(h.eta[2] - h.eta[1]), 2);
  }
  FieldSample g;
  g.values = {0.5, -0.5, 0.25};
  cc.cell_of = {0, 1, 2};
  HeightLabels h{{1, 1, 5}};
  FieldSample l = assemble_neumann(g, cc, h);
  EXPECT_EQ(l.values[0], 0.5);
  EXPECT_NEAR(l.values[1], -0.5 + 2 * kLambda, 1e-15);
  EXPECT_NEAR(l.values[2], 0.25 + 4 * kLambda, 1e-15);
  EXPECT_EQ(l.mode, GreenMode::neumann);
}
