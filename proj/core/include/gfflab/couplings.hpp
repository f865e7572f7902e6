#pragma once

#include "gfflab/clusters.hpp"
#include "gfflab/gff.hpp"
#include "gfflab/rng.hpp"

namespace gfflab {

struct ExponentTable {
  double c = 1.0;
  double kappa = 4.0;
  double rho = -1.0;
  double beta = 1.0 / 16.0;
  double reflected_exponent = 1.0 / 16.0;  // c/16
};

// kappa in (8/3, 4] solving c = (6 - kappa)(3 kappa - 8)/(2 kappa).
ExponentTable exponents(double c);
double central_charge(double kappa);
double hookup_beta(double kappa, double rho);
double oblique_exponent(double c, double u);

HeightLabels resample_heights(const CellComplex& cells, Rng& rng);

// Lambda = Gamma + lambda (eta - epsilon) cell by cell.
FieldSample assemble_neumann(const FieldSample& gamma, const CellComplex& cells, const HeightLabels& eta);

}  // namespace gfflab
