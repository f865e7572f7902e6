#include "gfflab/domain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

#include "gfflab/errors.hpp"

namespace gfflab {

const char* to_string(VertexTag t) {
  switch (t) {
    case VertexTag::interior: return "interior";
    case VertexTag::dirichlet: return "dirichlet";
    case VertexTag::neumann: return "neumann";
  }
  return "?";
}

const char* to_string(Shape s) {
  switch (s) {
    case Shape::square: return "square";
    case Shape::strip: return "strip";
    case Shape::half_disc: return "half-disc";
    case Shape::upper_half_box: return "upper-half-box";
  }
  return "?";
}

const char* to_string(SideBoundary b) { return b == SideBoundary::dirichlet ? "dirichlet" : "neumann"; }

Shape shape_from_string(const std::string& s) {
  if (s == "square") return Shape::square;
  if (s == "strip") return Shape::strip;
  if (s == "half-disc") return Shape::half_disc;
  if (s == "upper-half-box") return Shape::upper_half_box;
  throw DomainError("unknown shape '" + s + "'");
}

SideBoundary side_from_string(const std::string& s) {
  if (s == "dirichlet") return SideBoundary::dirichlet;
  if (s == "neumann") return SideBoundary::neumann;
  throw DomainError("unknown boundary type '" + s + "'");
}

DomainGraph::DomainGraph(std::vector<Vertex> vertices, std::vector<Edge> edges, int marked_point,
                         std::optional<SymmetryAxis> axis)
    : vertices_(std::move(vertices)), edges_(std::move(edges)), marked_(marked_point), axis_(axis) {
  const int n = vertex_count();
  if (n == 0) throw DomainError("empty domain");
  free_index_.assign(n, -1);
  for (int v = 0; v < n; ++v) {
    if (vertices_[v].tag == VertexTag::dirichlet) {
      dirichlet_vertices_.push_back(v);
    } else {
      free_index_[v] = static_cast<int>(free_vertices_.size());
      free_vertices_.push_back(v);
    }
  }
  if (free_vertices_.empty()) throw DomainError("domain has no free vertex");
  if (marked_ < 0 || marked_ >= n || vertices_[marked_].tag == VertexTag::dirichlet)
    throw DomainError("marked point must be a non-dirichlet vertex");

  incident_.assign(n, {});
  degree_.assign(n, 0.0);
  std::set<std::pair<int, int>> seen;
  for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
    const Edge& ed = edges_[e];
    if (ed.u < 0 || ed.v < 0 || ed.u >= n || ed.v >= n) throw DomainError("edge endpoint out of range");
    if (ed.u == ed.v) throw DomainError("self-loop");
    if (!(ed.c > 0.0) || !std::isfinite(ed.c)) throw DomainError("conductance must be positive");
    if (!seen.insert({std::min(ed.u, ed.v), std::max(ed.u, ed.v)}).second) throw DomainError("duplicate edge");
    incident_[ed.u].push_back(e);
    incident_[ed.v].push_back(e);
    degree_[ed.u] += ed.c;
    degree_[ed.v] += ed.c;
  }

  for (int v : dirichlet_vertices_) {
    bool ok = false;
    for (int e : incident_[v]) ok |= vertices_[other(e, v)].tag != VertexTag::dirichlet;
    if (!ok) throw DomainError("dirichlet vertex without a free neighbour");
  }

  std::vector<char> vis(n, 0);
  std::queue<int> q;
  q.push(0);
  vis[0] = 1;
  int reached = 1;
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int e : incident_[v]) {
      int w = other(e, v);
      if (!vis[w]) {
        vis[w] = 1;
        ++reached;
        q.push(w);
      }
    }
  }
  if (reached != n) throw DomainError("domain graph is not connected");

  int xmax = vertices_[0].x, ymax = vertices_[0].y;
  xmin_ = xmax;
  ymin_ = ymax;
  for (const auto& vx : vertices_) {
    xmin_ = std::min(xmin_, vx.x);
    ymin_ = std::min(ymin_, vx.y);
    xmax = std::max(xmax, vx.x);
    ymax = std::max(ymax, vx.y);
  }
  xspan_ = xmax - xmin_ + 1;
  yspan_ = ymax - ymin_ + 1;
  grid_.assign(static_cast<std::size_t>(xspan_) * yspan_, -1);
  for (int v = 0; v < n; ++v) {
    auto& slot = grid_[static_cast<std::size_t>(vertices_[v].y - ymin_) * xspan_ + (vertices_[v].x - xmin_)];
    if (slot >= 0) throw DomainError("two vertices share a lattice position");
    slot = v;
  }

  if (axis_) {
    mirror_.assign(n, -1);
    for (int v = 0; v < n; ++v) {
      const auto& p = vertices_[v];
      double mx = axis_->horizontal ? p.x : 2 * axis_->at - p.x;
      double my = axis_->horizontal ? 2 * axis_->at - p.y : p.y;
      if (mx != std::round(mx) || my != std::round(my)) throw DomainError("axis does not map lattice to lattice");
      int w = find(static_cast<int>(mx), static_cast<int>(my));
      if (w < 0 || vertices_[w].tag != p.tag) throw DomainError("reflection is not an automorphism");
      mirror_[v] = w;
    }
    std::map<std::pair<int, int>, double> cond;
    for (const auto& ed : edges_) cond[{std::min(ed.u, ed.v), std::max(ed.u, ed.v)}] = ed.c;
    for (const auto& ed : edges_) {
      int a = mirror_[ed.u], b = mirror_[ed.v];
      auto it = cond.find({std::min(a, b), std::max(a, b)});
      if (it == cond.end() || it->second != ed.c) throw DomainError("reflection does not preserve conductances");
    }
  }
}

bool DomainGraph::has_neumann() const {
  for (const auto& v : vertices_)
    if (v.tag == VertexTag::neumann) return true;
  return false;
}

int DomainGraph::find(int x, int y) const {
  if (x < xmin_ || y < ymin_ || x >= xmin_ + xspan_ || y >= ymin_ + yspan_) return -1;
  return grid_[static_cast<std::size_t>(y - ymin_) * xspan_ + (x - xmin_)];
}

int DomainGraph::mirror(int v) const { return mirror_.empty() ? -1 : mirror_[v]; }

namespace {

// Assemble a graph from a lattice predicate: keep(x,y) says whether a lattice
// point belongs to the closed domain, tag(x,y) its boundary type, halve(a,b)
// whether a nearest-neighbour edge lies along a neumann side.
template <class Keep, class Tag, class Halve>
DomainGraph lattice_graph(int x0, int x1, int y0, int y1, Keep keep, Tag tag, Halve halve, double c,
                          std::pair<int, int> marked, std::optional<SymmetryAxis> axis) {
  const int w = x1 - x0 + 1, h = y1 - y0 + 1;
  std::vector<int> id(static_cast<std::size_t>(w) * h, -1);
  auto at = [&](int x, int y) -> int& { return id[static_cast<std::size_t>(y - y0) * w + (x - x0)]; };
  std::vector<Vertex> vs;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (keep(x, y)) {
        at(x, y) = static_cast<int>(vs.size());
        vs.push_back({x, y, tag(x, y)});
      }
  auto is_d = [&](int v) { return vs[v].tag == VertexTag::dirichlet; };
  std::vector<Edge> es;
  for (int v = 0; v < static_cast<int>(vs.size()); ++v) {
    const int x = vs[v].x, y = vs[v].y;
    const int nb[2][2] = {{x + 1, y}, {x, y + 1}};
    for (auto& p : nb) {
      if (p[0] > x1 || p[1] > y1) continue;
      int u = at(p[0], p[1]);
      if (u < 0 || (is_d(v) && is_d(u))) continue;
      es.push_back({v, u, halve(x, y, p[0], p[1]) ? 0.5 * c : c});
    }
  }
  // Drop dirichlet vertices that touch no free vertex.
  std::vector<char> used(vs.size(), 0);
  for (auto& e : es) used[e.u] = used[e.v] = 1;
  std::vector<int> remap(vs.size(), -1);
  std::vector<Vertex> kept;
  for (int v = 0; v < static_cast<int>(vs.size()); ++v)
    if (!is_d(v) || used[v]) {
      remap[v] = static_cast<int>(kept.size());
      kept.push_back(vs[v]);
    }
  for (auto& e : es) {
    e.u = remap[e.u];
    e.v = remap[e.v];
  }
  int m = -1;
  for (int v = 0; v < static_cast<int>(kept.size()); ++v)
    if (kept[v].x == marked.first && kept[v].y == marked.second && kept[v].tag != VertexTag::dirichlet) m = v;
  if (m < 0)
    for (int v = 0; v < static_cast<int>(kept.size()) && m < 0; ++v)
      if (kept[v].tag != VertexTag::dirichlet) m = v;
  return DomainGraph(std::move(kept), std::move(es), m, axis);
}

}  // namespace

DomainGraph build_domain(const DomainSpec& spec) {
  const double c = spec.conductance;
  if (!(c > 0.0)) throw DomainError("conductance must be positive");
  using SB = SideBoundary;
  switch (spec.shape) {
    case Shape::square:
    case Shape::strip: {
      const int w = spec.width;
      const int h = spec.shape == Shape::square ? spec.width : spec.height;
      if (w < 2 || h < 2) throw DomainError("side lengths must be >= 2");
      const auto& s = spec.sides;
      // Membership of (x,y) in side k: 0 bottom, 1 right, 2 top, 3 left.
      auto on = [&](int k, int x, int y) {
        return (k == 0 && y == 0) || (k == 1 && x == w - 1) || (k == 2 && y == h - 1) || (k == 3 && x == 0);
      };
      auto tag = [&](int x, int y) {
        bool d = false, n = false;
        for (int k = 0; k < 4; ++k)
          if (on(k, x, y)) (s[k] == SB::dirichlet ? d : n) = true;
        return d ? VertexTag::dirichlet : n ? VertexTag::neumann : VertexTag::interior;
      };
      auto halve = [&](int ax, int ay, int bx, int by) {
        for (int k = 0; k < 4; ++k)
          if (s[k] == SB::neumann && on(k, ax, ay) && on(k, bx, by)) return true;
        return false;
      };
      std::optional<SymmetryAxis> axis;
      if (h % 2 == 1 && s[0] == s[2])
        axis = SymmetryAxis{true, (h - 1) / 2.0};
      else if (w % 2 == 1 && s[1] == s[3])
        axis = SymmetryAxis{false, (w - 1) / 2.0};
      return lattice_graph(
          0, w - 1, 0, h - 1, [](int, int) { return true; }, tag, halve, c, {w / 2, h / 2}, axis);
    }
    case Shape::half_disc: {
      const int r = spec.width;
      if (r < 2) throw DomainError("half-disc radius must be >= 2");
      if (spec.sides[1] != SB::dirichlet) throw DomainError("half-disc arc must be dirichlet");
      const bool diam_neumann = spec.sides[0] == SB::neumann;
      auto inside = [&](int x, int y) { return static_cast<long>(x) * x + static_cast<long>(y) * y < static_cast<long>(r) * r; };
      auto keep = [&](int x, int y) {
        if (y < 0) return false;
        if (inside(x, y)) return true;
        // Arc vertex: outside but adjacent to an inside point.
        return inside(x - 1, y) || inside(x + 1, y) || inside(x, y - 1) || (inside(x, y + 1) && y + 1 >= 0);
      };
      auto tag = [&](int x, int y) {
        if (!inside(x, y)) return VertexTag::dirichlet;
        if (y == 0) return diam_neumann ? VertexTag::neumann : VertexTag::dirichlet;
        return VertexTag::interior;
      };
      auto halve = [&](int, int ay, int, int by) { return diam_neumann && ay == 0 && by == 0; };
      return lattice_graph(-r - 1, r + 1, 0, r + 1, keep, tag, halve, c, {0, r / 2}, SymmetryAxis{false, 0.0});
    }
    case Shape::upper_half_box: {
      const int len = spec.width;
      if (len < 4 || len % 2) throw DomainError("upper-half-box bottom edge must be even and >= 4");
      const int h = len / 2, split = len / 2;
      auto tag = [&](int x, int y) {
        if (x == 0 || x == len || y == h) return VertexTag::dirichlet;
        if (y == 0) return x < split ? VertexTag::neumann : VertexTag::dirichlet;
        return VertexTag::interior;
      };
      auto halve = [&](int ax, int ay, int bx, int by) { return ay == 0 && by == 0 && std::min(ax, bx) < split; };
      return lattice_graph(
          0, len, 0, h, [](int, int) { return true; }, tag, halve, c, {split, h / 2}, std::nullopt);
    }
  }
  throw DomainError("unsupported shape");
}

DomainGraph neumann_restriction(const DomainGraph& d) {
  std::vector<Vertex> vs;
  std::vector<int> remap(d.vertex_count(), -1);
  for (int v : d.free_vertices()) {
    remap[v] = static_cast<int>(vs.size());
    Vertex vx = d.vertices()[v];
    for (int e : d.incident(v))
      if (d.vertices()[d.other(e, v)].tag == VertexTag::dirichlet) vx.tag = VertexTag::neumann;
    vs.push_back(vx);
  }
  std::vector<Edge> es;
  for (const auto& e : d.edges())
    if (remap[e.u] >= 0 && remap[e.v] >= 0) es.push_back({remap[e.u], remap[e.v], e.c});
  return DomainGraph(std::move(vs), std::move(es), remap[d.marked_point()], std::nullopt);
}

Folded fold(const DomainGraph& d) {
  if (!d.axis()) throw DomainError("fold requires a declared symmetry axis");
  const auto& ax = *d.axis();
  if (ax.at != std::round(ax.at)) throw DomainError("fold requires an axis through lattice vertices");
  auto side = [&](int v) {
    const auto& p = d.vertices()[v];
    double t = ax.horizontal ? p.y : p.x;
    return t < ax.at ? -1 : (t > ax.at ? 1 : 0);
  };
  FoldingMap map;
  map.image.assign(d.vertex_count(), -1);
  std::vector<Vertex> vs;
  for (int v = 0; v < d.vertex_count(); ++v) {
    if (side(v) > 0) continue;
    map.image[v] = static_cast<int>(vs.size());
    Vertex vx = d.vertices()[v];
    if (side(v) == 0 && vx.tag == VertexTag::interior) vx.tag = VertexTag::neumann;
    vs.push_back(vx);
    map.fiber.push_back({v});
  }
  for (int v = 0; v < d.vertex_count(); ++v)
    if (side(v) > 0) {
      map.image[v] = map.image[d.mirror(v)];
      map.fiber[map.image[v]].push_back(v);
    }
  std::map<std::pair<int, int>, double> cond;
  for (const auto& e : d.edges()) {
    int a = map.image[e.u], b = map.image[e.v];
    if (a == b) throw DomainError("edge crosses the symmetry axis");
    cond[{std::min(a, b), std::max(a, b)}] += 0.5 * e.c;
  }
  std::vector<Edge> es;
  for (const auto& [k, c] : cond) es.push_back({k.first, k.second, c});
  int marked = map.image[d.marked_point()];
  return Folded{DomainGraph(std::move(vs), std::move(es), marked, std::nullopt), std::move(map)};
}

}  // namespace gfflab
