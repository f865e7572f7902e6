#include "gfflab/loopsoup.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include "gfflab/errors.hpp"
#include "gfflab/green.hpp"

namespace gfflab {

void canonicalize(Loop& loop) {
  // Booth's least rotation.
  const auto& s = loop.v;
  const int n = static_cast<int>(s.size());
  if (n < 2) return;
  std::vector<int> f(2 * n, -1);
  int k = 0;
  for (int j = 1; j < 2 * n; ++j) {
    int sj = s[j % n];
    int i = f[j - k - 1];
    while (i != -1 && sj != s[(k + i + 1) % n]) {
      if (sj < s[(k + i + 1) % n]) k = j - i - 1;
      i = f[i];
    }
    if (i == -1 && sj != s[(k + i + 1) % n]) {
      if (sj < s[(k + i + 1) % n]) k = j;
      f[j - k] = -1;
    } else {
      f[j - k] = i + 1;
    }
  }
  std::rotate(loop.v.begin(), loop.v.begin() + k, loop.v.end());
}

double loop_mass(const TransitionKernel& kernel) {
  if (!kernel.has_killing()) throw SingularSystemError("loop mass is infinite: kernel has no killing");
  return avoid_logdet(kernel, {});
}

struct SoupSampler::Excursion {
  std::vector<int> pos;    // elimination position per free vertex
  std::vector<double> q;   // return probability within the allowed set
  std::vector<int> order;  // free vertex at each position
};

struct SoupSampler::Spectral {
  Eigen::MatrixXd u;
  Eigen::VectorXd theta;
  std::vector<double> sqrt_deg;
  std::vector<double> cdf;  // cumulative length weights for n = 2, 3, ...
  double total = 0.0;
};

SoupSampler::SoupSampler(const TransitionKernel& kernel, double c, SoupMethod method, std::size_t length_cap)
    : kernel_(&kernel), c_(c), method_(method) {
  if (!(c >= 0.0) || !std::isfinite(c)) throw Error("soup intensity must be a finite nonnegative number");
  const int n = kernel.size();
  mass_ = loop_mass(kernel);
  if (method == SoupMethod::excursion) {
    exc_ = std::make_unique<Excursion>();
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(kernel.laplacian());
    if (ldlt.info() != Eigen::Success) throw SingularSystemError("LDL^T factorization failed");
    const auto& perm = ldlt.permutationP().indices();
    Eigen::VectorXd d = ldlt.vectorD();
    exc_->pos.resize(n);
    exc_->q.resize(n);
    exc_->order.resize(n);
    for (int i = 0; i < n; ++i) {
      int p = perm(i);
      exc_->pos[i] = p;
      exc_->order[p] = i;
      exc_->q[i] = std::clamp(1.0 - d(p) / kernel.degree(i), 0.0, 1.0);
    }
    return;
  }
  if (n > 2000) throw Error("length_bridge sampler limited to 2000 vertices");
  spec_ = std::make_unique<Spectral>();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  spec_->sqrt_deg.resize(n);
  for (int i = 0; i < n; ++i) spec_->sqrt_deg[i] = std::sqrt(kernel.degree(i));
  for (int i = 0; i < n; ++i)
    for (int k = kernel.row_begin(i); k < kernel.row_end(i); ++k)
      s(i, kernel.col(k)) = kernel.conductance(k) / (spec_->sqrt_deg[i] * spec_->sqrt_deg[kernel.col(k)]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  spec_->u = es.eigenvectors();
  spec_->theta = es.eigenvalues();
  const double rho = spec_->theta.cwiseAbs().maxCoeff();
  if (!(rho < 1.0)) throw SingularSystemError("spectral radius >= 1");
  // Certified tail: sum_{m>N} n rho^m / m <= n rho^{N+1} / ((N+1)(1-rho)).
  double acc = 0.0;
  Eigen::ArrayXd pw = spec_->theta.array().square();
  for (std::size_t m = 2;; ++m) {
    double tr = std::max(0.0, pw.sum());
    acc += tr / static_cast<double>(m);
    spec_->cdf.push_back(acc);
    double tail = n * std::pow(rho, static_cast<double>(m + 1)) / ((m + 1) * (1.0 - rho));
    if (tail < 1e-12 * mass_) break;
    if (m >= length_cap)
      throw Error("loop length cutoff exceeds the configured cap (" + std::to_string(length_cap) + ")");
    pw *= spec_->theta.array();
  }
  spec_->total = acc;
}

SoupSampler::~SoupSampler() = default;
SoupSampler::SoupSampler(SoupSampler&&) noexcept = default;

std::size_t SoupSampler::length_cutoff() const { return spec_ ? spec_->cdf.size() + 1 : 0; }

namespace {
// One step of the walk from x: returns the next free vertex or -1 if killed.
inline int step(const TransitionKernel& k, int x, Rng& rng) {
  double u = uniform01(rng);
  for (int j = k.row_begin(x); j < k.row_end(x); ++j) {
    u -= k.prob(j);
    if (u < 0.0) return k.col(j);
  }
  return -1;
}
}  // namespace

void SoupSampler::sample_excursion(Rng& rng, LoopSoup& out) const {
  const TransitionKernel& k = *kernel_;
  const double alpha = 0.5 * c_;
  std::vector<int> table;
  std::vector<int> sizes;
  std::vector<int> exc;
  for (int p = 0; p < k.size(); ++p) {
    const int x = exc_->order[p];
    const double q = exc_->q[x];
    if (q <= 0.0) continue;
    const double mix = gamma_draw(rng, alpha, 1.0);
    const std::uint64_t visits = poisson_draw(rng, mix * q / (1.0 - q));
    if (visits == 0) continue;
    // Chinese restaurant partition of the visits into loops.
    table.assign(visits, 0);
    sizes.clear();
    for (std::uint64_t i = 0; i < visits; ++i) {
      if (i == 0 || uniform01(rng) * (alpha + i) < alpha) {
        table[i] = static_cast<int>(sizes.size());
        sizes.push_back(1);
      } else {
        table[i] = table[uniform_index(rng, i)];
        ++sizes[table[i]];
      }
    }
    for (int sz : sizes) {
      Loop loop;
      for (int e = 0; e < sz; ++e) {
        // Excursion from x inside positions <= p, conditioned to return.
        for (;;) {
          exc.clear();
          exc.push_back(x);
          int y = x;
          bool ok = true;
          for (;;) {
            y = step(k, y, rng);
            if (y < 0 || exc_->pos[y] > p) {
              ok = false;
              break;
            }
            if (y == x) break;
            exc.push_back(y);
          }
          if (ok) break;
        }
        loop.v.insert(loop.v.end(), exc.begin(), exc.end());
      }
      canonicalize(loop);
      out.loops.push_back(std::move(loop));
    }
  }
}

void SoupSampler::sample_bridges(Rng& rng, LoopSoup& out) const {
  const TransitionKernel& k = *kernel_;
  const Spectral& s = *spec_;
  const int n = k.size();
  const std::uint64_t count = poisson_draw(rng, 0.5 * c_ * s.total);
  Eigen::MatrixXd pw;
  for (std::uint64_t l = 0; l < count; ++l) {
    // Length: n with probability tr(P^n)/n / total.
    double u = uniform01(rng) * s.total;
    const int len = static_cast<int>(std::upper_bound(s.cdf.begin(), s.cdf.end(), u) - s.cdf.begin()) + 2;
    // Root: x with probability P^len(x,x)/tr(P^len).
    Eigen::ArrayXd tl = s.theta.array().pow(len);
    std::vector<double> w(n);
    double tot = 0.0;
    for (int x = 0; x < n; ++x) {
      w[x] = std::max(0.0, (s.u.row(x).array().square().transpose() * tl).sum());
      tot += w[x];
    }
    double r = uniform01(rng) * tot;
    int root = n - 1;
    for (int x = 0; x < n; ++x) {
      r -= w[x];
      if (r < 0.0) {
        root = x;
        break;
      }
    }
    // pw(k, m) = u(root,k) theta_k^m for m < len.
    pw.resize(n, len);
    pw.col(0) = s.u.row(root).transpose();
    for (int m = 1; m < len; ++m) pw.col(m) = pw.col(m - 1).cwiseProduct(s.theta);
    Loop loop;
    loop.v.reserve(len);
    int y = root;
    for (int i = 0; i < len; ++i) {
      loop.v.push_back(y);
      const int rem = len - i - 1;  // steps left after the next one
      if (rem == 0) break;
      double wt = 0.0;
      std::vector<std::pair<int, double>> cand;
      for (int j = k.row_begin(y); j < k.row_end(y); ++j) {
        const int z = k.col(j);
        // S^rem(z,root) scaled to P^rem(z,root).
        double srz = s.u.row(z).dot(pw.col(rem));
        double v = k.prob(j) * std::max(0.0, srz) * s.sqrt_deg[root] / s.sqrt_deg[z];
        cand.push_back({z, v});
        wt += v;
      }
      double t = uniform01(rng) * wt;
      int next = cand.back().first;
      for (auto [z, v] : cand) {
        t -= v;
        if (t < 0.0) {
          next = z;
          break;
        }
      }
      y = next;
    }
    canonicalize(loop);
    out.loops.push_back(std::move(loop));
  }
}

LoopSoup SoupSampler::sample(Rng& rng) const {
  LoopSoup soup;
  soup.c = c_;
  const TransitionKernel& k = *kernel_;
  soup.point_time.resize(k.size());
  if (c_ == 0.0) return soup;
  for (int x = 0; x < k.size(); ++x) soup.point_time[x] = gamma_draw(rng, 0.5 * c_, k.degree(x));
  if (method_ == SoupMethod::excursion)
    sample_excursion(rng, soup);
  else
    sample_bridges(rng, soup);
  return soup;
}

LoopSoup sample_soup(const TransitionKernel& kernel, double c, Rng& rng, SoupMethod method) {
  return SoupSampler(kernel, c, method).sample(rng);
}

OccupationField occupation(const LoopSoup& soup, const TransitionKernel& kernel, Rng& rng) {
  const int n = kernel.size();
  if (static_cast<int>(soup.point_time.size()) != n) throw Error("soup does not belong to this kernel");
  std::vector<std::uint64_t> visits(n, 0);
  for (const auto& l : soup.loops)
    for (int x : l.v) ++visits[x];
  OccupationField occ;
  occ.c = soup.c;
  occ.l = soup.point_time;
  for (int x = 0; x < n; ++x)
    if (visits[x]) occ.l[x] += gamma_draw(rng, static_cast<double>(visits[x]), kernel.degree(x));
  return occ;
}

double hitting_mass(const TransitionKernel& kernel, const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::vector<int> ab(a);
  ab.insert(ab.end(), b.begin(), b.end());
  std::sort(ab.begin(), ab.end());
  ab.erase(std::unique(ab.begin(), ab.end()), ab.end());
  return avoid_logdet(kernel, {}) - avoid_logdet(kernel, a) - avoid_logdet(kernel, b) + avoid_logdet(kernel, ab);
}

LoopSoup fold_soup(const LoopSoup& soup, const DomainGraph& unfolded, const Folded& folded) {
  const DomainGraph& fd = folded.domain;
  if (static_cast<int>(soup.point_time.size()) != unfolded.free_count()) throw Error("soup/map domain mismatch");
  if (static_cast<int>(folded.map.image.size()) != unfolded.vertex_count()) throw Error("soup/map domain mismatch");
  auto img = [&](int i) { return fd.free_index(folded.map.image[unfolded.free_vertices()[i]]); };
  LoopSoup out;
  out.c = 2.0 * soup.c;
  out.point_time.assign(fd.free_count(), 0.0);
  for (int i = 0; i < unfolded.free_count(); ++i) {
    int j = img(i);
    out.point_time[j] += soup.point_time[i] * unfolded.degree(unfolded.free_vertices()[i]) / fd.degree(fd.free_vertices()[j]);
  }
  out.loops.reserve(soup.loops.size());
  for (const auto& l : soup.loops) {
    Loop m;
    m.v.reserve(l.v.size());
    for (int x : l.v) m.v.push_back(img(x));
    canonicalize(m);
    out.loops.push_back(std::move(m));
  }
  return out;
}

std::string soup_records(const LoopSoup& soup) {
  std::ostringstream os;
  for (std::size_t i = 0; i < soup.loops.size(); ++i) {
    os << i << ':';
    for (int x : soup.loops[i].v) os << ' ' << x;
    os << '\n';
  }
  return os.str();
}

}  // namespace gfflab
