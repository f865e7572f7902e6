#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gfflab/domain.hpp"
#include "gfflab/gff.hpp"
#include "gfflab/loopsoup.hpp"
#include "gfflab/rng.hpp"

namespace gfflab {

// Partition of the free vertices. Cluster ids are canonical: numbered in
// order of their smallest free vertex.
struct ClusterDecomposition {
  int count = 0;
  std::vector<int> vertex_cluster;              // per free index
  std::vector<int> loop_cluster;                // per loop (soup clusters only)
  std::vector<std::uint8_t> boundary_touching;  // per cluster
  std::vector<std::int8_t> sign;                // per cluster, 0 when unsigned
  std::vector<std::uint8_t> edge_open;          // per domain edge, when the notion applies
};

// Vertex-sharing clusters; untouched vertices are singletons. With a domain,
// boundary_touching marks clusters containing a vertex next to a dirichlet vertex.
ClusterDecomposition soup_clusters(const LoopSoup& soup);
ClusterDecomposition soup_clusters(const LoopSoup& soup, const DomainGraph& d);

// Cable clusters of a soup: loop crossings plus, on every uncrossed edge
// between free vertices, an opening with probability 1 - exp(-2 C sqrt(l_x l_y)).
ClusterDecomposition cable_soup_clusters(const LoopSoup& soup, const OccupationField& occ, const DomainGraph& d,
                                         Rng& rng);

ClusterDecomposition field_sign_clusters(const FieldSample& f, const EdgeZeroMarks& marks, const DomainGraph& d);

// sigma_cluster * sqrt(2 l) with i.i.d. fair signs per cluster; requires c = 1.
FieldSample lupu_sign_field(const OccupationField& occ, const ClusterDecomposition& clusters, Rng& rng);
// Marks induced by open edges of a cable decomposition.
EdgeZeroMarks marks_from_open_edges(const ClusterDecomposition& clusters, const FieldSample& f, const DomainGraph& d);

struct CellAdjacency {
  int a = 0;
  int b = 0;
  int interface = 0;  // number of lattice edges shared
  bool tree = false;
};

struct CellComplex {
  int count = 0;
  std::vector<int> cell_of;            // per free index
  std::vector<std::int8_t> epsilon;    // per cell
  std::vector<std::uint8_t> core;      // per free index: part of a boundary-touching cluster
  std::vector<CellAdjacency> adjacency;
  int root = 0;
  std::vector<int> parent;     // spanning tree, -1 at the root
  std::vector<int> bfs_order;  // root first
};

struct HeightLabels {
  std::vector<int> eta;
};

// Cells grow from the boundary-touching sign clusters of the lattice field
// (site clusters, no cable cuts): their interfaces are discrete zero level
// lines with gap 2*lambda. Cable sign clusters are finer and are not used.
CellComplex boundary_cells(const FieldSample& f, const DomainGraph& d, Rng& rng);
// The zero marks are ignored.
CellComplex boundary_cells(const FieldSample& f, const EdgeZeroMarks& marks, const DomainGraph& d, Rng& rng);

// Cable level clusters avoiding the lattice a + spacing*Z.
ClusterDecomposition lattice_level_clusters(const FieldSample& f, double a, double spacing, const DomainGraph& d,
                                            Rng& rng);

// One layer of nested separated regions: region id per free index, -1 outside.
struct SeparationLayer {
  std::vector<int> region;
  std::vector<double> height;  // per region
};

// Nested level-line exploration with height gap 2*gap: at each depth, the part
// of every region connected to its boundary inside the band |F - h| < gap is
// removed; the rest splits into regions with heights h +/- gap.
std::vector<SeparationLayer> nested_separation_layers(const FieldSample& f, const DomainGraph& d, double gap,
                                                      int depth, Rng& rng);

// Number of layers in which free vertices x and y share a region (0 if either is negative).
int separating_count(const std::vector<SeparationLayer>& layers, int x, int y);

std::string clusters_csv(const ClusterDecomposition& c, const DomainGraph& d);
std::string cells_csv(const CellComplex& c, const HeightLabels* eta, const DomainGraph& d);

}  // namespace gfflab
