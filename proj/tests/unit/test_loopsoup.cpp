#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "gfflab/errors.hpp"
#include "gfflab/green.hpp"
#include "gfflab/kernel.hpp"
#include "gfflab/loopsoup.hpp"
#include "gfflab/stats.hpp"
#include "test_graphs.hpp"

using namespace gfflab;
using namespace gfflab::testing;

static std::vector<int> brute_min_rotation(std::vector<int> v) {
  std::vector<int> best = v;
  for (std::size_t k = 0; k < v.size(); ++k) {
    std::rotate(v.begin(), v.begin() + 1, v.end());
    best = std::min(best, v);
  }
  return best;
}

TEST(Loop, BoothMatchesBruteForce) {
  Rng rng = rng_stream(8, 0);
  for (int t = 0; t < 5000; ++t) {
    int len = 2 + static_cast<int>(uniform_index(rng, 12));
    int alphabet = 1 + static_cast<int>(uniform_index(rng, 4));
    Loop l;
    for (int i = 0; i < len; ++i) l.v.push_back(static_cast<int>(uniform_index(rng, alphabet)));
    std::vector<int> want = brute_min_rotation(l.v);
    canonicalize(l);
    ASSERT_EQ(l.v, want);
  }
}

TEST(Loop, PeriodicSequence) {
  Loop l{{3, 1, 2, 3, 1, 2}};
  canonicalize(l);
  EXPECT_EQ(l.v, (std::vector<int>{1, 2, 3, 1, 2, 3}));
}

struct SoupMoments {
  std::vector<double> count;
  std::vector<std::vector<double>> occ;
};

static SoupMoments run(const SoupSampler& s, const TransitionKernel& k, int n, std::uint64_t stream) {
  SoupMoments m;
  m.occ.assign(k.size(), {});
  for (int r = 0; r < n; ++r) {
    Rng rng = rng_stream(21, stream + r);
    LoopSoup soup = s.sample(rng);
    for (const auto& l : soup.loops) {
      for (std::size_t i = 0; i < l.v.size(); ++i)
        EXPECT_GT(k.p(l.v[i], l.v[(i + 1) % l.v.size()]), 0.0) << "loop step not in the kernel";
    }
    OccupationField o = occupation(soup, k, rng);
    m.count.push_back(static_cast<double>(soup.loops.size()));
    for (int x = 0; x < k.size(); ++x) m.occ[x].push_back(o.l[x]);
  }
  return m;
}

TEST(Soup, CountAndOccupationMeans) {
  DomainGraph d = square(5);
  TransitionKernel k(d);
  GreenMatrix g = green(d);
  for (SoupMethod method : {SoupMethod::excursion, SoupMethod::length_bridge}) {
    for (double c : {1.0, 0.5}) {
      SoupSampler s(k, c, method);
      SoupMoments m = run(s, k, 20000, 0);
      EXPECT_TRUE(moment_ztest("count", m.count, 0.5 * c * loop_mass(k), 4).pass) << c;
      for (int x = 0; x < k.size(); ++x)
        EXPECT_TRUE(moment_ztest("occ", m.occ[x], 0.5 * c * g.entry(x, x), 4).pass) << c << " " << x;
    }
  }
}

TEST(Soup, SamplersAgreeInLaw) {
  DomainGraph d = square(5);
  TransitionKernel k(d);
  SoupSampler a(k, 1.0, SoupMethod::excursion), b(k, 1.0, SoupMethod::length_bridge);
  SoupMoments ma = run(a, k, 5000, 0), mb = run(b, k, 5000, 1 << 20);
  EXPECT_TRUE(ks_two_sample("count", ma.count, mb.count, 0.001).pass);
  for (int x = 0; x < k.size(); ++x) EXPECT_TRUE(ks_two_sample("occ", ma.occ[x], mb.occ[x], 0.001).pass) << x;
}

TEST(Soup, LoopLengthLaw) {
  // Path graph: loops of length 2 have total mass tr(P^2)/2 = 1/2.
  DomainGraph d = path3();
  TransitionKernel k(d);
  SoupSampler s(k, 2.0);
  const int n = 20000;
  std::vector<double> len2(n);
  for (int r = 0; r < n; ++r) {
    Rng rng = rng_stream(9, r);
    LoopSoup soup = s.sample(rng);
    len2[r] = static_cast<double>(std::count_if(soup.loops.begin(), soup.loops.end(),
                                                [](const Loop& l) { return l.v.size() == 2; }));
  }
  // Intensity c = 2 is alpha = 1 on the walk loop measure.
  EXPECT_TRUE(moment_ztest("len2", len2, 0.5, 4).pass);
}

TEST(Soup, ZeroIntensityIsEmpty) {
  TransitionKernel k(path3());
  Rng rng = rng_stream(1, 1);
  LoopSoup s = sample_soup(k, 0.0, rng);
  EXPECT_TRUE(s.loops.empty());
  for (double t : s.point_time) EXPECT_EQ(t, 0.0);
}

TEST(Soup, FoldPreservesLoopsAndTime) {
  DomainGraph d = square(7);
  Folded f = fold(d);
  TransitionKernel k(d);
  Rng rng = rng_stream(3, 3);
  LoopSoup s = sample_soup(k, 0.5, rng);
  LoopSoup t = fold_soup(s, d, f);
  EXPECT_EQ(t.loops.size(), s.loops.size());
  EXPECT_DOUBLE_EQ(t.c, 1.0);
  double a = 0, b = 0;
  for (int i = 0; i < d.free_count(); ++i) a += s.point_time[i] * d.degree(d.free_vertices()[i]);
  for (int i = 0; i < f.domain.free_count(); ++i) b += t.point_time[i] * f.domain.degree(f.domain.free_vertices()[i]);
  EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, a));
}

TEST(Soup, RecordsFormat) {
  LoopSoup s;
  s.loops = {Loop{{0, 1}}, Loop{{2, 3, 4}}};
  EXPECT_EQ(soup_records(s), "0: 0 1\n1: 2 3 4\n");
}
