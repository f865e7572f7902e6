#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gfflab/domain.hpp"
#include "gfflab/kernel.hpp"
#include "gfflab/rng.hpp"

namespace gfflab {

// Unrooted discrete loop over free indices, stored in its lexicographically
// minimal rotation. The closing step back to v.front() is implicit.
struct Loop {
  std::vector<int> v;
  bool operator==(const Loop& o) const { return v == o.v; }
  bool operator<(const Loop& o) const { return v < o.v; }
};

void canonicalize(Loop& loop);

struct LoopSoup {
  std::vector<Loop> loops;
  double c = 0.0;
  std::vector<double> point_time;  // point-loop local time per free vertex
};

struct OccupationField {
  std::vector<double> l;
  double c = 0.0;
};

// F(empty) = -log det(I - P): total mass of the walk loop measure.
double loop_mass(const TransitionKernel& kernel);

enum class SoupMethod : std::uint8_t { excursion, length_bridge };

// Soup of intensity c: Poisson((c/2) F) nontrivial loops and Gamma(c/2, deg)
// point-loop time, so that at c = 1 the occupation field is (GFF)^2/2.
class SoupSampler {
 public:
  SoupSampler(const TransitionKernel& kernel, double c, SoupMethod method = SoupMethod::excursion,
              std::size_t length_cap = 100000);
  ~SoupSampler();
  SoupSampler(SoupSampler&&) noexcept;

  LoopSoup sample(Rng& rng) const;
  double mass() const { return mass_; }
  double intensity() const { return c_; }
  SoupMethod method() const { return method_; }
  // Truncation length of the length law (length_bridge only).
  std::size_t length_cutoff() const;

 private:
  struct Excursion;
  struct Spectral;
  void sample_excursion(Rng& rng, LoopSoup& out) const;
  void sample_bridges(Rng& rng, LoopSoup& out) const;

  const TransitionKernel* kernel_;
  double c_;
  SoupMethod method_;
  double mass_ = 0.0;
  std::unique_ptr<Excursion> exc_;
  std::unique_ptr<Spectral> spec_;
};

LoopSoup sample_soup(const TransitionKernel& kernel, double c, Rng& rng, SoupMethod method = SoupMethod::excursion);

OccupationField occupation(const LoopSoup& soup, const TransitionKernel& kernel, Rng& rng);

// Mass of walk loops visiting both A and B by inclusion-exclusion of avoid_logdet.
double hitting_mass(const TransitionKernel& kernel, const std::vector<int>& a, const std::vector<int>& b);

// Push a soup on a symmetric domain forward through the fold. Point-loop time
// is converted to the folded degree measure; the recorded intensity doubles.
LoopSoup fold_soup(const LoopSoup& soup, const DomainGraph& unfolded, const Folded& folded);

// Line-delimited records "id: v0 v1 ...".
std::string soup_records(const LoopSoup& soup);

}  // namespace gfflab
