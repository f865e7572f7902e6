#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gfflab/domain.hpp"
#include "gfflab/green.hpp"
#include "gfflab/rng.hpp"

namespace gfflab {

inline constexpr double kPi = 3.14159265358979323846;
// Height gap constant sqrt(pi/8).
inline const double kLambda = 0.62665706865775012560;

enum class Gauge : std::uint8_t { marked_point, zero_mean };

struct FieldSample {
  std::vector<double> values;    // per free index
  std::vector<double> boundary;  // aligned with DomainGraph::dirichlet_vertices()
  GreenMode mode = GreenMode::dirichlet;
};

// Value at a domain vertex id (dirichlet vertices read the boundary data).
double value_at(const FieldSample& f, const DomainGraph& d, int v);

struct EdgeZeroMarks {
  std::vector<std::uint8_t> hit;  // per domain edge
  std::vector<std::int8_t> sign_u;
  std::vector<std::int8_t> sign_v;
};

struct TestFunction {
  std::vector<double> w;  // per free index
  bool zero_sum = false;
};

TestFunction make_test_function(std::vector<double> w);

// Discrete harmonic extension of dirichlet data to the free vertices.
std::vector<double> harmonic_extension(const GreenMatrix& g, const DomainGraph& d, const std::vector<double>& boundary);

FieldSample sample_gff(const GreenMatrix& g, const DomainGraph& d, const std::vector<double>& boundary, Gauge gauge,
                       Rng& rng);
// Same pipeline with an injected standard-normal vector (length g.noise_dim()).
FieldSample sample_gff_noise(const GreenMatrix& g, const DomainGraph& d, const std::vector<double>& boundary,
                             Gauge gauge, const Eigen::VectorXd& z);

// Probability that a Brownian bridge of conductance c between same-sign a, b hits 0.
double bridge_hit_probability(double a, double b, double c);
// Probability that the same bridge between a and b stays inside (lo, hi); image series.
double bridge_stay_probability(double a, double b, double lo, double hi, double c);

EdgeZeroMarks cable_zero_marks(const FieldSample& f, const DomainGraph& d, Rng& rng);

double pairing(const FieldSample& f, const TestFunction& t);

struct CovarianceEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

// Sample covariance of paired observations with batch-mean standard error.
CovarianceEstimate covariance_of_pairs(const std::vector<double>& x, const std::vector<double>& y);
CovarianceEstimate empirical_covariance(const std::vector<FieldSample>& samples, const TestFunction& f,
                                        const TestFunction& g);

std::string field_csv(const FieldSample& f, const DomainGraph& d);

}  // namespace gfflab
