#pragma once

#include <vector>

#include "gfflab/domain.hpp"
#include "gfflab/rng.hpp"

namespace gfflab::testing {

// D - a - b - c - D with unit conductances; marked point b.
inline DomainGraph path3() {
  std::vector<Vertex> v = {{0, 0, VertexTag::dirichlet}, {1, 0, VertexTag::interior}, {2, 0, VertexTag::interior},
                           {3, 0, VertexTag::interior}, {4, 0, VertexTag::dirichlet}};
  std::vector<Edge> e = {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}};
  return DomainGraph(v, e, 2);
}

// One free vertex with four dirichlet neighbours.
inline DomainGraph single_vertex() {
  std::vector<Vertex> v = {{1, 1, VertexTag::interior}, {0, 1, VertexTag::dirichlet}, {2, 1, VertexTag::dirichlet},
                           {1, 0, VertexTag::dirichlet}, {1, 2, VertexTag::dirichlet}};
  std::vector<Edge> e = {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}, {0, 4, 1.0}};
  return DomainGraph(v, e, 0);
}

inline DomainGraph square(int side) {
  DomainSpec s;
  s.width = s.height = side;
  return build_domain(s);
}

// Connected random graph on n vertices with k dirichlet vertices and random conductances.
inline DomainGraph random_graph(int n, int k, Rng& rng) {
  std::vector<Vertex> v(n);
  for (int i = 0; i < n; ++i) v[i] = {i, 0, i >= n - k ? VertexTag::dirichlet : VertexTag::interior};
  std::vector<Edge> e;
  std::vector<std::vector<char>> has(n, std::vector<char>(n, 0));
  auto add = [&](int a, int b) {
    if (a == b || has[a][b]) return;
    if (v[a].tag == VertexTag::dirichlet && v[b].tag == VertexTag::dirichlet) return;
    has[a][b] = has[b][a] = 1;
    e.push_back({a, b, 0.2 + uniform01(rng)});
  };
  // Spanning tree over free vertices, then dirichlet vertices hang off free ones.
  for (int i = 1; i < n - k; ++i) add(i, static_cast<int>(uniform_index(rng, i)));
  for (int i = n - k; i < n; ++i) add(i, static_cast<int>(uniform_index(rng, n - k)));
  for (int t = 0; t < n; ++t) add(static_cast<int>(uniform_index(rng, n)), static_cast<int>(uniform_index(rng, n)));
  return DomainGraph(v, e, 0);
}

}  // namespace gfflab::testing
