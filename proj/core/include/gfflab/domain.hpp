#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gfflab {

enum class VertexTag : std::uint8_t { interior, dirichlet, neumann };
enum class SideBoundary : std::uint8_t { dirichlet, neumann };
enum class Shape : std::uint8_t { square, strip, half_disc, upper_half_box };

const char* to_string(VertexTag t);
const char* to_string(Shape s);
const char* to_string(SideBoundary b);
Shape shape_from_string(const std::string& s);
SideBoundary side_from_string(const std::string& s);

struct DomainSpec {
  Shape shape = Shape::square;
  // square: width = height = side; strip: width x height (vertex counts, boundary ring included).
  // half_disc: width = radius. upper_half_box: width = bottom edge length L, height L/2.
  int width = 5;
  int height = 5;
  // Sides in order bottom, right, top, left. For half_disc: [0] = diameter, [1] = arc.
  std::array<SideBoundary, 4> sides{SideBoundary::dirichlet, SideBoundary::dirichlet,
                                    SideBoundary::dirichlet, SideBoundary::dirichlet};
  double conductance = 1.0;
};

struct Vertex {
  int x = 0;
  int y = 0;
  VertexTag tag = VertexTag::interior;
};

struct Edge {
  int u = 0;
  int v = 0;
  double c = 1.0;
};

struct SymmetryAxis {
  bool horizontal = true;  // horizontal: y -> 2*at - y; vertical: x -> 2*at - x
  double at = 0.0;
};

// Weighted planar graph with a boundary partition. Non-dirichlet vertices are
// "free" and get a dense index 0..n_free-1 used by kernels, Green matrices,
// fields and soups.
class DomainGraph {
 public:
  DomainGraph(std::vector<Vertex> vertices, std::vector<Edge> edges, int marked_point,
              std::optional<SymmetryAxis> axis = std::nullopt);

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  int vertex_count() const { return static_cast<int>(vertices_.size()); }
  int marked_point() const { return marked_; }
  const std::optional<SymmetryAxis>& axis() const { return axis_; }

  int free_count() const { return static_cast<int>(free_vertices_.size()); }
  const std::vector<int>& free_vertices() const { return free_vertices_; }
  int free_index(int v) const { return free_index_[v]; }
  const std::vector<int>& dirichlet_vertices() const { return dirichlet_vertices_; }
  bool has_dirichlet() const { return !dirichlet_vertices_.empty(); }
  bool has_neumann() const;

  // Incident edge ids of vertex v.
  const std::vector<int>& incident(int v) const { return incident_[v]; }
  int other(int edge, int v) const { return edges_[edge].u == v ? edges_[edge].v : edges_[edge].u; }
  // Total conductance at v, edges to dirichlet vertices included.
  double degree(int v) const { return degree_[v]; }

  // Vertex at lattice position, or -1.
  int find(int x, int y) const;

  // Image of vertex v under the declared axis reflection (-1 if none).
  int mirror(int v) const;

 private:
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  int marked_;
  std::optional<SymmetryAxis> axis_;
  std::vector<int> free_vertices_;
  std::vector<int> free_index_;
  std::vector<int> dirichlet_vertices_;
  std::vector<std::vector<int>> incident_;
  std::vector<double> degree_;
  int xmin_ = 0, ymin_ = 0, xspan_ = 0, yspan_ = 0;
  std::vector<int> grid_;
  std::vector<int> mirror_;
};

DomainGraph build_domain(const DomainSpec& spec);

// Drop dirichlet vertices and re-tag their free neighbours as neumann: the
// free-boundary (pure Neumann) graph on the same free vertex set.
DomainGraph neumann_restriction(const DomainGraph& d);

struct FoldingMap {
  // Unfolded vertex id -> folded vertex id.
  std::vector<int> image;
  // Folded vertex id -> preimages (1 on the axis, 2 off it).
  std::vector<std::vector<int>> fiber;
};

struct Folded {
  DomainGraph domain;
  FoldingMap map;
};

// Fold a domain onto the closed half on the low side of its axis. Axis
// vertices that are free become neumann; conductances of edge orbits are summed
// and halved on the axis so the folded chain is the reflected chain.
Folded fold(const DomainGraph& d);

}  // namespace gfflab
