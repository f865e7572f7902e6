#include "gfflab/couplings.hpp"

#include <cmath>

#include "gfflab/errors.hpp"

namespace gfflab {

double central_charge(double kappa) { return (6.0 - kappa) * (3.0 * kappa - 8.0) / (2.0 * kappa); }

double hookup_beta(double kappa, double rho) { return (rho + 2.0) * (rho + 6.0 - kappa) / (4.0 * kappa); }

ExponentTable exponents(double c) {
  if (!(c > 0.0 && c <= 1.0)) throw Error("exponents: c must lie in (0, 1]");
  // 3 k^2 - (26 - 2c) k + 48 = 0; the smaller root lies in (8/3, 4].
  const double b = 26.0 - 2.0 * c;
  const double disc = std::max(0.0, b * b - 576.0);
  // Stable form of (b - sqrt(disc)) / 6.
  const double kappa = 96.0 / (b + std::sqrt(disc));
  ExponentTable t;
  t.c = c;
  t.kappa = kappa;
  t.rho = std::sqrt(std::max(0.0, (8.0 - kappa) * (kappa - 2.0) / 8.0)) - (8.0 - kappa) / 2.0;
  t.beta = hookup_beta(kappa, t.rho);
  t.reflected_exponent = c / 16.0;
  return t;
}

double oblique_exponent(double c, double u) {
  if (!(c > 0.0)) throw Error("oblique_exponent: c must be positive");
  if (!(u > 0.0 && u < 1.0)) throw Error("oblique_exponent: u must lie in (0, 1)");
  return c * u * (1.0 - u) / 4.0;
}

HeightLabels resample_heights(const CellComplex& cells, Rng& rng) {
  if (static_cast<int>(cells.parent.size()) != cells.count || cells.bfs_order.empty())
    throw Error("cell complex has no spanning tree");
  HeightLabels h;
  h.eta.assign(cells.count, 0);
  h.eta[cells.root] = cells.epsilon[cells.root];
  for (std::size_t k = 1; k < cells.bfs_order.size(); ++k) {
    int c = cells.bfs_order[k];
    h.eta[c] = h.eta[cells.parent[c]] + (uniform01(rng) < 0.5 ? 2 : -2);
  }
  return h;
}

FieldSample assemble_neumann(const FieldSample& gamma, const CellComplex& cells, const HeightLabels& eta) {
  if (gamma.values.size() != cells.cell_of.size() || static_cast<int>(eta.eta.size()) != cells.count)
    throw Error("cell/field mismatch");
  FieldSample out = gamma;
  out.mode = GreenMode::neumann;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    int c = cells.cell_of[i];
    int k = eta.eta[c] - cells.epsilon[c];
    if (k != 0) out.values[i] += kLambda * k;
  }
  return out;
}

}  // namespace gfflab
