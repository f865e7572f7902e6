#include "gfflab/kernel.hpp"

#include <algorithm>
#include <numeric>

namespace gfflab {

TransitionKernel::TransitionKernel(const DomainGraph& d) {
  const int n = d.free_count();
  deg_.resize(n);
  kill_.assign(n, 0.0);
  start_.assign(n + 1, 0);
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < n; ++i) {
    const int v = d.free_vertices()[i];
    deg_[i] = d.degree(v);
    std::vector<std::pair<int, double>> row;
    for (int e : d.incident(v)) {
      int j = d.free_index(d.other(e, v));
      double c = d.edges()[e].c;
      if (j < 0)
        kill_[i] += c;
      else
        row.push_back({j, c});
    }
    std::sort(row.begin(), row.end());
    for (auto [j, c] : row) {
      col_.push_back(j);
      cond_.push_back(c);
      prob_.push_back(c / deg_[i]);
      trip.emplace_back(i, j, -c);
    }
    kill_[i] /= deg_[i];
    trip.emplace_back(i, i, deg_[i]);
    start_[i + 1] = static_cast<int>(col_.size());
  }
  lap_.resize(n, n);
  lap_.setFromTriplets(trip.begin(), trip.end());
  lap_.makeCompressed();
}

double TransitionKernel::p(int i, int j) const {
  auto b = col_.begin() + start_[i], e = col_.begin() + start_[i + 1];
  auto it = std::lower_bound(b, e, j);
  return (it != e && *it == j) ? prob_[it - col_.begin()] : 0.0;
}

Eigen::MatrixXd TransitionKernel::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size(), size());
  for (int i = 0; i < size(); ++i)
    for (int k = start_[i]; k < start_[i + 1]; ++k) m(i, col_[k]) = prob_[k];
  return m;
}

bool TransitionKernel::has_killing() const {
  return std::any_of(kill_.begin(), kill_.end(), [](double k) { return k > 0.0; });
}

TransitionKernel transition_kernel(const DomainGraph& domain) { return TransitionKernel(domain); }

}  // namespace gfflab
