#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gfflab/domain.hpp"
#include "gfflab/kernel.hpp"

namespace gfflab {

enum class GreenMode { automatic, dirichlet, mixed, neumann };
const char* to_string(GreenMode m);

class SparseFactor;

// Green's function of the conductance Laplacian on the free vertices.
// dirichlet/mixed: G = L^{-1}. neumann: pseudo-inverse on zero-mean vectors,
// represented through the Laplacian grounded at the marked point.
class GreenMatrix {
 public:
  GreenMatrix(const DomainGraph& domain, GreenMode mode, bool with_dense);

  GreenMode mode() const { return mode_; }
  int size() const { return n_; }
  // Free index of the grounded vertex (neumann mode).
  int ground() const { return ground_; }

  bool has_dense() const { return dense_ != nullptr; }
  const Eigen::MatrixXd& dense() const;
  double entry(int i, int j) const;
  Eigen::VectorXd column(int j) const;
  // G f; in neumann mode f is projected to zero mean first and the result has zero mean.
  Eigen::VectorXd apply(const Eigen::VectorXd& f) const;
  double pairing(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const;

  // Length of the standard-normal vector consumed by correlate().
  int noise_dim() const;
  // Centered Gaussian vector with covariance G (neumann: gauge value 0 at ground()).
  Eigen::VectorXd correlate(const Eigen::VectorXd& z) const;
  double logdet() const;

 private:
  Eigen::VectorXd solve_grounded(const Eigen::VectorXd& b) const;

  GreenMode mode_;
  int n_;
  int ground_ = -1;
  std::shared_ptr<const SparseFactor> factor_;
  std::shared_ptr<const Eigen::MatrixXd> dense_;
};

// Mode resolution: automatic picks neumann without dirichlet vertices, mixed
// when neumann vertices are present, dirichlet otherwise.
GreenMatrix green(const DomainGraph& domain, GreenMode mode = GreenMode::automatic, bool with_dense = true);

// Green matrix as CSV rows "row,col,value".
std::string green_csv(const GreenMatrix& g);

// log det of a symmetric positive definite sparse matrix.
double logdet_spd(const SparseMatrix& m);
SparseMatrix principal_submatrix(const SparseMatrix& m, const std::vector<char>& keep);

// F(S) = -log det(I - P restricted to the complement of S), S given as free indices.
double avoid_logdet(const TransitionKernel& kernel, const std::vector<int>& s);

// Mass of walk loops visiting both A and B for disjoint A, B, via Schur
// complements onto the smaller set (no large cancellation).
double hitting_mass_schur(const TransitionKernel& kernel, const std::vector<int>& a, const std::vector<int>& b);

}  // namespace gfflab
