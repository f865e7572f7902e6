#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "gfflab/errors.hpp"
#include "gfflab/clusters.hpp"
#include "gfflab/couplings.hpp"
#include "gfflab/gff.hpp"
#include "gfflab/green.hpp"
#include "gfflab/kernel.hpp"
#include "test_graphs.hpp"

using namespace gfflab;
using namespace gfflab::testing;

// Two labelings describe the same partition.
static bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}

TEST(SoupClusters, BruteForce) {
  DomainGraph d = square(6);
  TransitionKernel k(d);
  for (int t = 0; t < 20; ++t) {
    Rng rng = rng_stream(30, t);
    LoopSoup s = sample_soup(k, 1.0, rng);
    // Merge loops until no two clusters share a vertex.
    std::vector<std::set<int>> groups;
    for (const auto& l : s.loops) groups.push_back(std::set<int>(l.v.begin(), l.v.end()));
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t i = 0; i < groups.size() && !changed; ++i)
        for (std::size_t j = i + 1; j < groups.size() && !changed; ++j) {
          bool meet = std::any_of(groups[j].begin(), groups[j].end(), [&](int x) { return groups[i].count(x); });
          if (meet) {
            groups[i].insert(groups[j].begin(), groups[j].end());
            groups.erase(groups.begin() + j);
            changed = true;
          }
        }
    }
    std::vector<int> want(k.size());
    for (int x = 0; x < k.size(); ++x) want[x] = 1000 + x;
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (int x : groups[g]) want[x] = static_cast<int>(g);
    ClusterDecomposition c = soup_clusters(s, d);
    EXPECT_TRUE(same_partition(c.vertex_cluster, want));
    // Canonical ids: first occurrence order.
    int next = 0;
    for (int id : c.vertex_cluster) {
      ASSERT_LE(id, next);
      if (id == next) ++next;
    }
    EXPECT_EQ(next, c.count);
  }
}

TEST(SignClusters, FloodFillWithoutMarks) {
  DomainGraph d = square(8);
  GreenMatrix g = green(d);
  Rng rng = rng_stream(31, 0);
  FieldSample f = sample_gff(g, d, {}, Gauge::marked_point, rng);
  EdgeZeroMarks m;
  const std::size_t ne = d.edges().size();
  m.hit.assign(ne, 0);
  m.sign_u.assign(ne, 0);
  m.sign_v.assign(ne, 0);
  for (std::size_t e = 0; e < ne; ++e) {
    double a = value_at(f, d, d.edges()[e].u), b = value_at(f, d, d.edges()[e].v);
    m.hit[e] = !(a * b > 0);
  }
  ClusterDecomposition c = field_sign_clusters(f, m, d);
  const int n = d.free_count();
  std::vector<int> lab(n, -1);
  int next = 0;
  for (int s = 0; s < n; ++s) {
    if (lab[s] >= 0) continue;
    std::vector<int> stack{s};
    lab[s] = next;
    while (!stack.empty()) {
      int x = stack.back();
      stack.pop_back();
      int v = d.free_vertices()[x];
      for (int e : d.incident(v)) {
        int y = d.free_index(d.other(e, v));
        if (y >= 0 && lab[y] < 0 && f.values[x] * f.values[y] > 0) {
          lab[y] = next;
          stack.push_back(y);
        }
      }
    }
    ++next;
  }
  EXPECT_EQ(c.vertex_cluster, lab);
  for (int i = 0; i < n; ++i) EXPECT_EQ(c.sign[c.vertex_cluster[i]], f.values[i] > 0 ? 1 : -1);
}

TEST(SignClusters, InconsistentMarksThrow) {
  DomainGraph d = path3();
  FieldSample f;
  f.values = {1.0, -1.0, 1.0};
  EdgeZeroMarks m;
  m.hit.assign(4, 0);
  m.sign_u.assign(4, 0);
  m.sign_v.assign(4, 0);
  EXPECT_THROW(field_sign_clusters(f, m, d), Error);
}

TEST(Lupu, OpenEdgesReproduceCableClusters) {
  DomainGraph d = square(7);
  TransitionKernel k(d);
  for (int t = 0; t < 50; ++t) {
    Rng rng = rng_stream(32, t);
    LoopSoup s = sample_soup(k, 1.0, rng);
    OccupationField o = occupation(s, k, rng);
    ClusterDecomposition cl = cable_soup_clusters(s, o, d, rng);
    FieldSample f = lupu_sign_field(o, cl, rng);
    ClusterDecomposition fc = field_sign_clusters(f, marks_from_open_edges(cl, f, d), d);
    EXPECT_EQ(fc.vertex_cluster, cl.vertex_cluster);
  }
}

TEST(Lupu, RequiresUnitIntensity) {
  OccupationField o{{1.0}, 0.5};
  ClusterDecomposition c;
  c.count = 1;
  c.vertex_cluster = {0};
  Rng rng = rng_stream(1, 1);
  EXPECT_THROW(lupu_sign_field(o, c, rng), Error);
}

TEST(Cells, Invariants) {
  DomainSpec s;
  s.shape = Shape::half_disc;
  s.width = 20;
  DomainGraph d = build_domain(s);
  GreenMatrix g = green(d);
  for (int t = 0; t < 30; ++t) {
    Rng rng = rng_stream(33, t);
    FieldSample f = sample_gff(g, d, {}, Gauge::marked_point, rng);
    EdgeZeroMarks m = cable_zero_marks(f, d, rng);
    CellComplex cc = boundary_cells(f, m, d, rng);
    ASSERT_EQ(static_cast<int>(cc.bfs_order.size()), cc.count);
    EXPECT_EQ(cc.root, cc.cell_of[d.free_index(d.marked_point())]);
    EXPECT_EQ(cc.parent[cc.root], -1);
    for (const auto& a : cc.adjacency) EXPECT_EQ(cc.epsilon[a.a], -cc.epsilon[a.b]);
    for (int i = 0; i < d.free_count(); ++i)
      if (cc.core[i]) EXPECT_EQ(cc.epsilon[cc.cell_of[i]], f.values[i] < 0 ? -1 : 1);
    HeightLabels eta = resample_heights(cc, rng);
    for (int c = 0; c < cc.count; ++c) EXPECT_EQ(((eta.eta[c] - cc.epsilon[c]) % 4 + 4) % 4, 0);
    FieldSample lam = assemble_neumann(f, cc, eta);
    for (int i = 0; i < d.free_count(); ++i)
      if (cc.cell_of[i] == cc.root) EXPECT_EQ(lam.values[i], f.values[i]);
  }
}

TEST(LevelClusters, ShiftReplayIsExact) {
  DomainGraph d = neumann_restriction(square(10));
  GreenMatrix g = green(d);
  Rng rng = rng_stream(34, 0);
  FieldSample f = sample_gff(g, d, {}, Gauge::marked_point, rng);
  Rng r1 = rng_stream(34, 1), r2 = rng_stream(34, 1);
  ClusterDecomposition a = lattice_level_clusters(f, 0.1, 1.25, d, r1);
  FieldSample h = f;
  for (double& v : h.values) v += 0.5;
  ClusterDecomposition b = lattice_level_clusters(h, 0.6, 1.25, d, r2);
  EXPECT_EQ(a.vertex_cluster, b.vertex_cluster);
  EXPECT_EQ(a.boundary_touching, b.boundary_touching);
}

TEST(LevelClusters, DifferentBandsAreCut) {
  DomainGraph d = neumann_restriction(path3());
  FieldSample f;
  f.values = {0.1, 0.2, 1.1};
  Rng rng = rng_stream(1, 0);
  ClusterDecomposition c = lattice_level_clusters(f, 0.0, 1.0, d, rng);
  EXPECT_NE(c.vertex_cluster[1], c.vertex_cluster[2]);
  EXPECT_THROW(lattice_level_clusters(f, 0.0, 0.0, d, rng), Error);
}

TEST(Separation, LayersAreNested) {
  DomainSpec s;
  s.shape = Shape::half_disc;
  s.width = 24;
  s.sides[0] = SideBoundary::neumann;
  DomainGraph d = build_domain(s);
  GreenMatrix g = green(d);
  const double gap = 2 * kLambda;
  for (int t = 0; t < 10; ++t) {
    Rng rng = rng_stream(35, t);
    FieldSample f = sample_gff(g, d, {}, Gauge::marked_point, rng);
    auto layers = nested_separation_layers(f, d, gap, 4, rng);
    ASSERT_EQ(layers.size(), 4u);
    for (std::size_t k = 1; k < layers.size(); ++k)
      for (int i = 0; i < d.free_count(); ++i) {
        int r = layers[k].region[i];
        if (r < 0) continue;
        int p = layers[k - 1].region[i];
        ASSERT_GE(p, 0);
        EXPECT_NEAR(std::abs(layers[k].height[r] - layers[k - 1].height[p]), gap, 1e-12);
        // Vertices sharing a region shared the parent region.
        for (int j = 0; j < d.free_count(); ++j)
          if (layers[k].region[j] == r) EXPECT_EQ(layers[k - 1].region[j], p);
      }
    EXPECT_EQ(separating_count(layers, 0, -1), 0);
  }
}
