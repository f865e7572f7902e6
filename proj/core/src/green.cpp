#include "gfflab/green.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include "gfflab/errors.hpp"

namespace gfflab {

const char* to_string(GreenMode m) {
  switch (m) {
    case GreenMode::automatic: return "automatic";
    case GreenMode::dirichlet: return "dirichlet";
    case GreenMode::mixed: return "mixed";
    case GreenMode::neumann: return "neumann";
  }
  return "?";
}

class SparseFactor {
 public:
  explicit SparseFactor(const SparseMatrix& m) {
    llt.compute(m);
    if (llt.info() != Eigen::Success) throw SingularSystemError("sparse Cholesky failed: matrix not positive definite");
  }
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
};

double logdet_spd(const SparseMatrix& m) {
  if (m.rows() == 0) return 0.0;
  SparseFactor f(m);
  const SparseMatrix& l = f.llt.matrixL();
  double s = 0.0;
  for (int j = 0; j < l.outerSize(); ++j) {
    // Lower-triangular, column major: the first stored entry of column j is the diagonal.
    SparseMatrix::InnerIterator it(l, j);
    s += 2.0 * std::log(it.value());
  }
  return s;
}

SparseMatrix principal_submatrix(const SparseMatrix& m, const std::vector<char>& keep) {
  std::vector<int> idx(m.rows(), -1);
  int k = 0;
  for (int i = 0; i < m.rows(); ++i)
    if (keep[i]) idx[i] = k++;
  std::vector<Eigen::Triplet<double>> t;
  for (int j = 0; j < m.outerSize(); ++j) {
    if (idx[j] < 0) continue;
    for (SparseMatrix::InnerIterator it(m, j); it; ++it)
      if (idx[it.row()] >= 0) t.emplace_back(idx[it.row()], idx[j], it.value());
  }
  SparseMatrix s(k, k);
  s.setFromTriplets(t.begin(), t.end());
  s.makeCompressed();
  return s;
}

GreenMatrix::GreenMatrix(const DomainGraph& domain, GreenMode mode, bool with_dense) : mode_(mode) {
  TransitionKernel k(domain);
  n_ = k.size();
  if (mode_ == GreenMode::automatic)
    mode_ = !domain.has_dirichlet() ? GreenMode::neumann : domain.has_neumann() ? GreenMode::mixed : GreenMode::dirichlet;
  if (mode_ == GreenMode::neumann) {
    if (domain.has_dirichlet()) throw DomainError("neumann mode requested on a domain with dirichlet vertices");
    ground_ = domain.free_index(domain.marked_point());
    std::vector<char> keep(n_, 1);
    keep[ground_] = 0;
    factor_ = std::make_shared<SparseFactor>(principal_submatrix(k.laplacian(), keep));
  } else {
    if (!domain.has_dirichlet())
      throw SingularSystemError(std::string(to_string(mode_)) + " mode requires at least one dirichlet vertex");
    factor_ = std::make_shared<SparseFactor>(k.laplacian());
  }
  if (with_dense) {
    auto d = std::make_shared<Eigen::MatrixXd>(n_, n_);
    for (int j = 0; j < n_; ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n_);
      e(j) = 1.0;
      d->col(j) = apply(e);
    }
    // Symmetrize round-off.
    *d = 0.5 * (*d + d->transpose()).eval();
    dense_ = d;
  }
}

const Eigen::MatrixXd& GreenMatrix::dense() const {
  if (!dense_) throw Error("dense Green matrix not materialized");
  return *dense_;
}

Eigen::VectorXd GreenMatrix::solve_grounded(const Eigen::VectorXd& b) const {
  if (mode_ != GreenMode::neumann) return factor_->llt.solve(b);
  Eigen::VectorXd r(n_ - 1);
  for (int i = 0, k = 0; i < n_; ++i)
    if (i != ground_) r(k++) = b(i);
  Eigen::VectorXd s = factor_->llt.solve(r);
  Eigen::VectorXd x(n_);
  for (int i = 0, k = 0; i < n_; ++i) x(i) = (i == ground_) ? 0.0 : s(k++);
  return x;
}

Eigen::VectorXd GreenMatrix::apply(const Eigen::VectorXd& f) const {
  if (mode_ != GreenMode::neumann) return solve_grounded(f);
  Eigen::VectorXd g = f.array() - f.mean();
  Eigen::VectorXd x = solve_grounded(g);
  return x.array() - x.mean();
}

double GreenMatrix::entry(int i, int j) const {
  if (dense_) return (*dense_)(i, j);
  return column(j)(i);
}

Eigen::VectorXd GreenMatrix::column(int j) const {
  if (dense_) return dense_->col(j);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n_);
  e(j) = 1.0;
  return apply(e);
}

double GreenMatrix::pairing(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
  if (dense_) {
    if (mode_ == GreenMode::neumann) {
      Eigen::VectorXd fc = f.array() - f.mean();
      return fc.dot(*dense_ * g);
    }
    return f.dot(*dense_ * g);
  }
  return f.dot(apply(g));
}

int GreenMatrix::noise_dim() const { return mode_ == GreenMode::neumann ? n_ - 1 : n_; }

Eigen::VectorXd GreenMatrix::correlate(const Eigen::VectorXd& z) const {
  // P A P^T = L L^T  =>  x = P^T L^{-T} z has covariance A^{-1}.
  const auto& llt = factor_->llt;
  Eigen::VectorXd y = llt.matrixU().solve(z);
  Eigen::VectorXd x = llt.permutationPinv() * y;
  if (mode_ != GreenMode::neumann) return x;
  Eigen::VectorXd out(n_);
  for (int i = 0, k = 0; i < n_; ++i) out(i) = (i == ground_) ? 0.0 : x(k++);
  return out;
}

double GreenMatrix::logdet() const {
  const SparseMatrix& l = factor_->llt.matrixL();
  double s = 0.0;
  for (int j = 0; j < l.outerSize(); ++j) s += 2.0 * std::log(SparseMatrix::InnerIterator(l, j).value());
  return -s;
}

GreenMatrix green(const DomainGraph& domain, GreenMode mode, bool with_dense) {
  return GreenMatrix(domain, mode, with_dense);
}

std::string green_csv(const GreenMatrix& g) {
  std::ostringstream os;
  os.precision(17);
  os << "row,col,value\n";
  for (int j = 0; j < g.size(); ++j) {
    Eigen::VectorXd c = g.column(j);
    for (int i = 0; i < g.size(); ++i) os << i << ',' << j << ',' << c(i) << '\n';
  }
  return os.str();
}

double avoid_logdet(const TransitionKernel& kernel, const std::vector<int>& s) {
  std::vector<char> keep(kernel.size(), 1);
  for (int x : s) {
    if (x < 0 || x >= kernel.size()) throw Error("avoid_logdet: vertex out of range");
    keep[x] = 0;
  }
  double logdeg = 0.0;
  for (int i = 0; i < kernel.size(); ++i)
    if (keep[i]) logdeg += std::log(kernel.degree(i));
  return logdeg - logdet_spd(principal_submatrix(kernel.laplacian(), keep));
}

namespace {
// log det of (M^{-1})_{BB}, M restricted to `keep`, b given in the original indexing.
double logdet_inverse_block(const SparseMatrix& lap, const std::vector<char>& keep, const std::vector<int>& b) {
  std::vector<int> idx(keep.size(), -1);
  int k = 0;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) idx[i] = k++;
  SparseFactor f(principal_submatrix(lap, keep));
  const int nb = static_cast<int>(b.size());
  Eigen::MatrixXd blk(nb, nb);
  for (int j = 0; j < nb; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(k);
    e(idx[b[j]]) = 1.0;
    Eigen::VectorXd col = f.llt.solve(e);
    for (int i = 0; i < nb; ++i) blk(i, j) = col(idx[b[i]]);
  }
  blk = 0.5 * (blk + blk.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> c(blk);
  if (c.info() != Eigen::Success) throw SingularSystemError("Schur block not positive definite");
  return 2.0 * c.matrixLLT().diagonal().array().log().sum();
}
}  // namespace

double hitting_mass_schur(const TransitionKernel& kernel, const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty() || b.empty()) return 0.0;
  const std::vector<int>& small = b.size() <= a.size() ? b : a;
  const std::vector<int>& large = b.size() <= a.size() ? a : b;
  std::vector<char> in_large(kernel.size(), 0);
  for (int x : large) in_large[x] = 1;
  for (int x : small)
    if (in_large[x]) throw Error("hitting_mass_schur requires disjoint sets");
  std::vector<char> all(kernel.size(), 1), without(kernel.size(), 1);
  for (int x : large) without[x] = 0;
  // m = logdet Schur_B(M_{A^c}) - logdet Schur_B(M) = logdet (M^{-1})_BB - logdet (M_{A^c}^{-1})_BB
  return logdet_inverse_block(kernel.laplacian(), all, small) - logdet_inverse_block(kernel.laplacian(), without, small);
}

}  // namespace gfflab
