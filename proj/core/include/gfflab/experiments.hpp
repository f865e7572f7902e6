#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gfflab/config.hpp"
#include "gfflab/report.hpp"

namespace gfflab {

// Runs fn(i) for i in [0, n) on `workers` threads. Results must be written to
// slot i so that the outcome does not depend on scheduling.
void parallel_for(std::int64_t n, int workers, const std::function<void(std::int64_t)>& fn);

CouplingReport run_experiment(const ExperimentConfig& cfg);

struct MassPoint {
  int length = 0;    // bottom edge L
  int distance = 0;  // split point to slit, lattice units
  double eps = 0.0;
  int slit = 0;      // slit height in vertices
  double walk_mass = 0.0;
  double mass = 0.0;  // loop-measure normalization: walk_mass / 2
};

// Mass of loops touching the neumann half-line and the slit on the
// upper-half-box of bottom edge L, slit at distance d right of the split.
MassPoint mass_point(int length, int distance, double eps);

}  // namespace gfflab
