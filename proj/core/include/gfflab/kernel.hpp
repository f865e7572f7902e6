#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gfflab/domain.hpp"

namespace gfflab {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

// Substochastic nearest-neighbour kernel P(x,y) = c(x,y)/deg(x) on the free
// vertices; weight sent to dirichlet vertices is killing mass.
class TransitionKernel {
 public:
  explicit TransitionKernel(const DomainGraph& domain);

  int size() const { return static_cast<int>(deg_.size()); }
  double degree(int i) const { return deg_[i]; }
  const std::vector<double>& degrees() const { return deg_; }
  double killing(int i) const { return kill_[i]; }

  // CSR rows over free indices: neighbours, conductances and probabilities.
  int row_begin(int i) const { return start_[i]; }
  int row_end(int i) const { return start_[i + 1]; }
  int col(int k) const { return col_[k]; }
  double conductance(int k) const { return cond_[k]; }
  double prob(int k) const { return prob_[k]; }
  double p(int i, int j) const;

  // M = D - C restricted to free vertices (the conductance Laplacian).
  const SparseMatrix& laplacian() const { return lap_; }
  Eigen::MatrixXd dense() const;
  bool has_killing() const;

 private:
  std::vector<double> deg_;
  std::vector<double> kill_;
  std::vector<int> start_;
  std::vector<int> col_;
  std::vector<double> cond_;
  std::vector<double> prob_;
  SparseMatrix lap_;
};

TransitionKernel transition_kernel(const DomainGraph& domain);

}  // namespace gfflab
