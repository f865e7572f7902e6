#include "gfflab/clusters.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "gfflab/errors.hpp"
#include "gfflab/union_find.hpp"

namespace gfflab {

namespace {

// Renumber raw labels by smallest member; returns the number of labels.
int canonical_labels(std::vector<int>& lab) {
  std::map<int, int> remap;
  int next = 0;
  for (int& l : lab) {
    if (l < 0) continue;
    auto [it, fresh] = remap.try_emplace(l, next);
    if (fresh) ++next;
    l = it->second;
  }
  return next;
}

bool touches_dirichlet(const DomainGraph& d, int free_i) {
  int v = d.free_vertices()[free_i];
  for (int e : d.incident(v))
    if (d.free_index(d.other(e, v)) < 0) return true;
  return false;
}

// Domain edge joining two free vertices, or -1.
int edge_between(const DomainGraph& d, int fa, int fb) {
  int va = d.free_vertices()[fa], vb = d.free_vertices()[fb];
  for (int e : d.incident(va))
    if (d.other(e, va) == vb) return e;
  return -1;
}

}  // namespace

ClusterDecomposition soup_clusters(const LoopSoup& soup) {
  const int n = static_cast<int>(soup.point_time.size());
  UnionFind uf(n);
  for (const auto& l : soup.loops)
    for (std::size_t i = 1; i < l.v.size(); ++i) uf.unite(l.v[0], l.v[i]);
  ClusterDecomposition c;
  c.vertex_cluster = uf.labels();
  c.count = canonical_labels(c.vertex_cluster);
  for (const auto& l : soup.loops) c.loop_cluster.push_back(c.vertex_cluster[l.v[0]]);
  c.boundary_touching.assign(c.count, 0);
  c.sign.assign(c.count, 0);
  return c;
}

ClusterDecomposition soup_clusters(const LoopSoup& soup, const DomainGraph& d) {
  ClusterDecomposition c = soup_clusters(soup);
  for (int i = 0; i < d.free_count(); ++i)
    if (touches_dirichlet(d, i)) c.boundary_touching[c.vertex_cluster[i]] = 1;
  return c;
}

ClusterDecomposition cable_soup_clusters(const LoopSoup& soup, const OccupationField& occ, const DomainGraph& d,
                                         Rng& rng) {
  const int n = d.free_count();
  if (static_cast<int>(occ.l.size()) != n) throw Error("occupation/domain mismatch");
  std::vector<std::uint8_t> open(d.edges().size(), 0);
  UnionFind uf(n);
  for (const auto& l : soup.loops)
    for (std::size_t i = 0; i < l.v.size(); ++i) {
      int a = l.v[i], b = l.v[(i + 1) % l.v.size()];
      int e = edge_between(d, a, b);
      if (e < 0) throw Error("loop step is not an edge of the domain");
      open[e] = 1;
      uf.unite(a, b);
    }
  for (std::size_t e = 0; e < d.edges().size(); ++e) {
    if (open[e]) continue;
    const auto& ed = d.edges()[e];
    int a = d.free_index(ed.u), b = d.free_index(ed.v);
    if (a < 0 || b < 0) continue;
    double p = 1.0 - std::exp(-2.0 * ed.c * std::sqrt(occ.l[a] * occ.l[b]));
    if (uniform01(rng) < p) {
      open[e] = 1;
      uf.unite(a, b);
    }
  }
  ClusterDecomposition c;
  c.vertex_cluster = uf.labels();
  c.count = canonical_labels(c.vertex_cluster);
  for (const auto& l : soup.loops) c.loop_cluster.push_back(c.vertex_cluster[l.v[0]]);
  c.boundary_touching.assign(c.count, 0);
  for (int i = 0; i < n; ++i)
    if (touches_dirichlet(d, i)) c.boundary_touching[c.vertex_cluster[i]] = 1;
  c.sign.assign(c.count, 0);
  c.edge_open = std::move(open);
  return c;
}

ClusterDecomposition field_sign_clusters(const FieldSample& f, const EdgeZeroMarks& marks, const DomainGraph& d) {
  const int n = d.free_count();
  if (marks.hit.size() != d.edges().size()) throw Error("marks/domain mismatch");
  UnionFind uf(n);
  ClusterDecomposition c;
  c.edge_open.assign(d.edges().size(), 0);
  for (std::size_t e = 0; e < d.edges().size(); ++e) {
    if (marks.hit[e]) continue;
    const auto& ed = d.edges()[e];
    double a = value_at(f, d, ed.u), b = value_at(f, d, ed.v);
    if (a == 0.0 || b == 0.0 || (a > 0) != (b > 0))
      throw Error("inconsistent marks: unmarked edge without same-sign endpoints");
    c.edge_open[e] = 1;
    int fa = d.free_index(ed.u), fb = d.free_index(ed.v);
    if (fa >= 0 && fb >= 0) uf.unite(fa, fb);
  }
  c.vertex_cluster = uf.labels();
  c.count = canonical_labels(c.vertex_cluster);
  c.sign.assign(c.count, 0);
  c.boundary_touching.assign(c.count, 0);
  for (int i = 0; i < n; ++i) {
    double v = f.values[i];
    c.sign[c.vertex_cluster[i]] = static_cast<std::int8_t>((v > 0) - (v < 0));
  }
  for (std::size_t e = 0; e < d.edges().size(); ++e) {
    const auto& ed = d.edges()[e];
    int fa = d.free_index(ed.u), fb = d.free_index(ed.v);
    if ((fa < 0) == (fb < 0)) continue;
    int fi = fa >= 0 ? fa : fb;
    int bv = fa >= 0 ? ed.v : ed.u;
    if (f.values[fi] == 0.0) continue;
    // Zero boundary data: the cluster reaches the boundary where the cable ends.
    if (value_at(f, d, bv) == 0.0 || !marks.hit[e]) c.boundary_touching[c.vertex_cluster[fi]] = 1;
  }
  return c;
}

FieldSample lupu_sign_field(const OccupationField& occ, const ClusterDecomposition& clusters, Rng& rng) {
  if (std::abs(occ.c - 1.0) > 1e-12) throw Error("lupu_sign_field requires intensity c = 1");
  if (clusters.vertex_cluster.size() != occ.l.size()) throw Error("clusters/occupation mismatch");
  std::vector<int> sigma(clusters.count);
  for (int k = 0; k < clusters.count; ++k) sigma[k] = uniform01(rng) < 0.5 ? -1 : 1;
  FieldSample f;
  f.mode = GreenMode::dirichlet;
  f.values.resize(occ.l.size());
  for (std::size_t i = 0; i < occ.l.size(); ++i)
    f.values[i] = sigma[clusters.vertex_cluster[i]] * std::sqrt(2.0 * occ.l[i]);
  return f;
}

EdgeZeroMarks marks_from_open_edges(const ClusterDecomposition& clusters, const FieldSample& f, const DomainGraph& d) {
  if (clusters.edge_open.size() != d.edges().size()) throw Error("decomposition carries no edge openings");
  EdgeZeroMarks m;
  const std::size_t ne = d.edges().size();
  m.hit.resize(ne);
  m.sign_u.resize(ne);
  m.sign_v.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    double a = value_at(f, d, d.edges()[e].u), b = value_at(f, d, d.edges()[e].v);
    m.sign_u[e] = static_cast<std::int8_t>((a > 0) - (a < 0));
    m.sign_v[e] = static_cast<std::int8_t>((b > 0) - (b < 0));
    bool free_edge = d.free_index(d.edges()[e].u) >= 0 && d.free_index(d.edges()[e].v) >= 0;
    m.hit[e] = !(free_edge && clusters.edge_open[e]);
  }
  return m;
}

CellComplex boundary_cells(const FieldSample& f, const EdgeZeroMarks& /*marks*/, const DomainGraph& d, Rng& rng) {
  return boundary_cells(f, d, rng);
}

CellComplex boundary_cells(const FieldSample& f, const DomainGraph& d, Rng& rng) {
  const int n = d.free_count();
  CellComplex cc;
  std::vector<int> free_edges;
  for (int e = 0; e < static_cast<int>(d.edges().size()); ++e)
    if (d.free_index(d.edges()[e].u) >= 0 && d.free_index(d.edges()[e].v) >= 0) free_edges.push_back(e);
  auto ends = [&](int e) { return std::pair{d.free_index(d.edges()[e].u), d.free_index(d.edges()[e].v)}; };
  auto sgn = [&](int i) -> std::int8_t { return f.values[i] < 0 ? -1 : 1; };

  // Site clusters of constant sign on the lattice itself (no cable cuts). One
  // diagonal per face makes the sites a triangulation, so a + crossing and a
  // - crossing of the same face cannot both exist.
  std::unordered_map<long long, int> at;
  auto key = [](int x, int y) { return (static_cast<long long>(x) << 32) ^ static_cast<unsigned>(y); };
  for (int v = 0; v < d.vertex_count(); ++v) at[key(d.vertices()[v].x, d.vertices()[v].y)] = v;
  UnionFind su(n);
  std::vector<char> touch(n, 0);
  for (int e : free_edges) {
    auto [a, b] = ends(e);
    if (sgn(a) == sgn(b)) su.unite(a, b);
  }
  for (int i = 0; i < n; ++i) {
    touch[i] = touches_dirichlet(d, i);
    const Vertex& p = d.vertices()[d.free_vertices()[i]];
    auto it = at.find(key(p.x + 1, p.y + 1));
    if (it == at.end()) continue;
    int j = d.free_index(it->second);
    if (j < 0)
      touch[i] = 1;
    else if (sgn(i) == sgn(j))
      su.unite(i, j);
  }
  for (int i = 0; i < n; ++i) {
    const Vertex& p = d.vertices()[d.free_vertices()[i]];
    auto it = at.find(key(p.x - 1, p.y - 1));
    if (it != at.end() && d.free_index(it->second) < 0) touch[i] = 1;
  }
  std::vector<int> cluster = su.labels();
  const int ncl = canonical_labels(cluster);
  std::vector<char> touching(ncl, 0);
  for (int i = 0; i < n; ++i)
    if (touch[i]) touching[cluster[i]] = 1;

  cc.core.assign(n, 0);
  std::vector<int> group(n, -1);
  for (int i = 0; i < n; ++i)
    if (touching[cluster[i]]) {
      group[i] = cluster[i];
      cc.core[i] = 1;
    }
  const int ngroups = canonical_labels(group);
  if (ngroups == 0) {
    cc.count = 1;
    cc.cell_of.assign(n, 0);
    cc.epsilon = {static_cast<std::int8_t>(uniform01(rng) < 0.5 ? -1 : 1)};
    cc.parent = {-1};
    cc.bfs_order = {0};
    cc.root = 0;
    return cc;
  }
  std::vector<std::int8_t> gsign(ngroups, 0);
  for (int i = 0; i < n; ++i)
    if (group[i] >= 0) gsign[group[i]] = sgn(i);

  // Islands attach to the neighbouring cell with the largest interface.
  std::vector<int> comp(n, -1);
  int ncomp = 0;
  for (int s = 0; s < n; ++s) {
    if (group[s] >= 0 || comp[s] >= 0) continue;
    std::vector<int> members{s};
    comp[s] = ncomp;
    for (std::size_t h = 0; h < members.size(); ++h) {
      int v = d.free_vertices()[members[h]];
      for (int e : d.incident(v)) {
        int w = d.free_index(d.other(e, v));
        if (w >= 0 && group[w] < 0 && comp[w] < 0) {
          comp[w] = ncomp;
          members.push_back(w);
        }
      }
    }
    std::map<int, int> iface;
    for (int x : members) {
      int v = d.free_vertices()[x];
      for (int e : d.incident(v)) {
        int w = d.free_index(d.other(e, v));
        if (w >= 0 && group[w] >= 0) ++iface[group[w]];
      }
    }
    int best = 0, bestn = -1;
    for (auto [g, cnt] : iface)
      if (cnt > bestn) {
        best = g;
        bestn = cnt;
      }
    for (int x : members) group[x] = best;
    ++ncomp;
  }

  // Merge adjacent same-sign cells so that every adjacency alternates.
  UnionFind gu(ngroups);
  for (int e : free_edges) {
    auto [a, b] = ends(e);
    if (group[a] != group[b] && gsign[group[a]] == gsign[group[b]]) gu.unite(group[a], group[b]);
  }
  for (int i = 0; i < n; ++i) group[i] = gu.find(group[i]);
  std::vector<int> rawsign(ngroups, 0);
  for (int g = 0; g < ngroups; ++g) rawsign[gu.find(g)] = gsign[g];
  std::vector<int> before = group;
  cc.count = canonical_labels(group);
  cc.cell_of = group;
  cc.epsilon.assign(cc.count, 0);
  for (int i = 0; i < n; ++i) cc.epsilon[group[i]] = static_cast<std::int8_t>(rawsign[before[i]]);

  std::map<std::pair<int, int>, int> iface;
  for (int e : free_edges) {
    auto [a, b] = ends(e);
    int ca = group[a], cb = group[b];
    if (ca != cb) ++iface[{std::min(ca, cb), std::max(ca, cb)}];
  }
  std::vector<std::vector<std::pair<int, int>>> nbr(cc.count);
  for (auto& [k, cnt] : iface) {
    int idx = static_cast<int>(cc.adjacency.size());
    cc.adjacency.push_back({k.first, k.second, cnt, false});
    nbr[k.first].push_back({k.second, idx});
    nbr[k.second].push_back({k.first, idx});
  }
  cc.root = group[d.free_index(d.marked_point())];
  cc.parent.assign(cc.count, -2);
  cc.parent[cc.root] = -1;
  cc.bfs_order = {cc.root};
  for (std::size_t h = 0; h < cc.bfs_order.size(); ++h) {
    int c = cc.bfs_order[h];
    auto nb = nbr[c];
    std::sort(nb.begin(), nb.end());
    for (auto [w, idx] : nb)
      if (cc.parent[w] == -2) {
        cc.parent[w] = c;
        cc.adjacency[idx].tree = true;
        cc.bfs_order.push_back(w);
      }
  }
  // Cells unreachable through free edges (disconnected free graph) hang off the root.
  for (int c = 0; c < cc.count; ++c)
    if (cc.parent[c] == -2) {
      cc.parent[c] = cc.root;
      cc.bfs_order.push_back(c);
    }
  return cc;
}

namespace {

struct BandRule {
  double a;
  double s;
  long band(double v) const { return static_cast<long>(std::floor((v - a) / s)); }
  // Probability that the bridge between u and v (conductance c) crosses a level.
  double cut_probability(double u, double v, double c) const {
    long bu = band(u), bv = band(v);
    if (bu != bv) return 1.0;
    double lo = a + bu * s;
    return 1.0 - bridge_stay_probability(u, v, lo, lo + s, c);
  }
};

}  // namespace

ClusterDecomposition lattice_level_clusters(const FieldSample& f, double a, double spacing, const DomainGraph& d,
                                            Rng& rng) {
  if (!(spacing > 0.0)) throw Error("spacing must be positive");
  const int n = d.free_count();
  BandRule rule{a, spacing};
  UnionFind uf(n);
  ClusterDecomposition c;
  c.edge_open.assign(d.edges().size(), 0);
  std::vector<std::pair<int, bool>> bnd;  // (free vertex, edge kept) for boundary edges
  for (std::size_t e = 0; e < d.edges().size(); ++e) {
    const auto& ed = d.edges()[e];
    int fa = d.free_index(ed.u), fb = d.free_index(ed.v);
    double p = rule.cut_probability(value_at(f, d, ed.u), value_at(f, d, ed.v), ed.c);
    bool keep = p < 1.0 && !(uniform01(rng) < p);
    if (fa >= 0 && fb >= 0) {
      if (keep) {
        uf.unite(fa, fb);
        c.edge_open[e] = 1;
      }
    } else {
      bnd.push_back({fa >= 0 ? fa : fb, keep});
    }
  }
  c.vertex_cluster = uf.labels();
  c.count = canonical_labels(c.vertex_cluster);
  c.boundary_touching.assign(c.count, 0);
  c.sign.assign(c.count, 0);
  for (auto [i, keep] : bnd)
    if (keep) c.boundary_touching[c.vertex_cluster[i]] = 1;
  // Pure neumann domain: the boundary is the neumann layer itself.
  if (!d.has_dirichlet())
    for (int i = 0; i < n; ++i)
      if (d.vertices()[d.free_vertices()[i]].tag == VertexTag::neumann) c.boundary_touching[c.vertex_cluster[i]] = 1;
  for (int i = 0; i < n; ++i) c.sign[c.vertex_cluster[i]] = static_cast<std::int8_t>(rule.band(f.values[i]) >= 0 ? 1 : -1);
  return c;
}

std::vector<SeparationLayer> nested_separation_layers(const FieldSample& f, const DomainGraph& d, double gap,
                                                      int depth, Rng& rng) {
  const int n = d.free_count();
  BandRule rule{-gap, 2.0 * gap};
  std::vector<SeparationLayer> layers;
  // Current regions: id per free vertex and base height per region.
  std::vector<int> region(n, 0);
  std::vector<double> height{0.0};
  for (int k = 0; k < depth; ++k) {
    // Band clusters inside regions; boundary = dirichlet vertices and vertices of other regions.
    UnionFind uf(n);
    std::vector<char> reach(n, 0);
    for (std::size_t e = 0; e < d.edges().size(); ++e) {
      const auto& ed = d.edges()[e];
      int fa = d.free_index(ed.u), fb = d.free_index(ed.v);
      int ra = fa >= 0 ? region[fa] : -1, rb = fb >= 0 ? region[fb] : -1;
      if (ra < 0 && rb < 0) continue;
      if (ra >= 0 && ra == rb) {
        double h = height[ra];
        double p = rule.cut_probability(f.values[fa] - h, f.values[fb] - h, ed.c);
        if (p < 1.0 && !(uniform01(rng) < p)) uf.unite(fa, fb);
        continue;
      }
      // Edge leaving a region: the region boundary sits at relative height 0.
      for (int side = 0; side < 2; ++side) {
        int fi = side == 0 ? fa : fb;
        int r = side == 0 ? ra : rb;
        if (r < 0) continue;
        double p = rule.cut_probability(0.0, f.values[fi] - height[r], ed.c);
        if (p < 1.0 && !(uniform01(rng) < p)) reach[fi] = 1;
      }
    }
    std::vector<char> removed(n, 0);
    {
      std::vector<char> root_reach(n, 0);
      for (int i = 0; i < n; ++i)
        if (reach[i]) root_reach[uf.find(i)] = 1;
      for (int i = 0; i < n; ++i)
        if (region[i] >= 0 && root_reach[uf.find(i)]) removed[i] = 1;
    }
    // Remaining vertices of each region split into connected separated regions.
    std::vector<int> next(n, -1);
    std::vector<double> next_h;
    for (int s = 0; s < n; ++s) {
      if (region[s] < 0 || removed[s] || next[s] >= 0) continue;
      const int id = static_cast<int>(next_h.size());
      const int parent = region[s];
      const double h = height[parent];
      std::vector<int> members{s};
      next[s] = id;
      double vote = 0.0, mass = 0.0;
      for (std::size_t q = 0; q < members.size(); ++q) {
        int x = members[q];
        int v = d.free_vertices()[x];
        double rx = f.values[x] - h;
        mass += rx;
        for (int e : d.incident(v)) {
          int w = d.free_index(d.other(e, v));
          if (w >= 0 && region[w] == parent && !removed[w]) {
            if (next[w] < 0) {
              next[w] = id;
              members.push_back(w);
            }
            continue;
          }
          // Crossing to the removed band or out of the region: which level was hit.
          double ry = (w >= 0 && region[w] == parent) ? f.values[w] - h : 0.0;
          if (rx >= gap)
            vote += 1.0;
          else if (rx <= -gap)
            vote -= 1.0;
          else
            vote += ((gap - rx) * (gap - ry) < (rx + gap) * (ry + gap)) ? 1.0 : -1.0;
        }
      }
      double sgn = vote > 0 ? 1.0 : vote < 0 ? -1.0 : (mass >= 0 ? 1.0 : -1.0);
      next_h.push_back(h + sgn * gap);
    }
    SeparationLayer layer{next, next_h};
    layers.push_back(layer);
    region = std::move(next);
    height = std::move(next_h);
    if (height.empty()) {
      for (int r = k + 1; r < depth; ++r) layers.push_back({std::vector<int>(n, -1), {}});
      break;
    }
  }
  return layers;
}

int separating_count(const std::vector<SeparationLayer>& layers, int x, int y) {
  if (x < 0 || y < 0) return 0;
  int c = 0;
  for (const auto& l : layers)
    if (l.region[x] >= 0 && l.region[x] == l.region[y]) ++c;
  return c;
}

std::string clusters_csv(const ClusterDecomposition& c, const DomainGraph& d) {
  std::ostringstream os;
  os << "vertex,x,y,cluster,sign,boundary_touching\n";
  for (int i = 0; i < d.free_count(); ++i) {
    int v = d.free_vertices()[i];
    int k = c.vertex_cluster[i];
    os << v << ',' << d.vertices()[v].x << ',' << d.vertices()[v].y << ',' << k << ',' << int(c.sign[k]) << ','
       << int(c.boundary_touching[k]) << '\n';
  }
  return os.str();
}

std::string cells_csv(const CellComplex& c, const HeightLabels* eta, const DomainGraph& d) {
  std::ostringstream os;
  os << "vertex,x,y,cell,epsilon" << (eta ? ",eta" : "") << '\n';
  for (int i = 0; i < d.free_count(); ++i) {
    int v = d.free_vertices()[i];
    int k = c.cell_of[i];
    os << v << ',' << d.vertices()[v].x << ',' << d.vertices()[v].y << ',' << k << ',' << int(c.epsilon[k]);
    if (eta) os << ',' << eta->eta[k];
    os << '\n';
  }
  return os.str();
}

}  // namespace gfflab
