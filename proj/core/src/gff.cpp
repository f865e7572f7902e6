#include "gfflab/gff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gfflab/errors.hpp"

namespace gfflab {

double value_at(const FieldSample& f, const DomainGraph& d, int v) {
  int i = d.free_index(v);
  if (i >= 0) return f.values[i];
  const auto& dv = d.dirichlet_vertices();
  auto it = std::lower_bound(dv.begin(), dv.end(), v);
  std::size_t k = static_cast<std::size_t>(it - dv.begin());
  return k < f.boundary.size() ? f.boundary[k] : 0.0;
}

TestFunction make_test_function(std::vector<double> w) {
  double s = std::accumulate(w.begin(), w.end(), 0.0);
  double scale = 0.0;
  for (double x : w) scale += std::abs(x);
  TestFunction t{std::move(w), false};
  t.zero_sum = std::abs(s) <= 1e-12 * std::max(1.0, scale);
  return t;
}

std::vector<double> harmonic_extension(const GreenMatrix& g, const DomainGraph& d, const std::vector<double>& boundary) {
  const int n = d.free_count();
  if (boundary.empty()) return std::vector<double>(n, 0.0);
  if (boundary.size() != d.dirichlet_vertices().size()) throw Error("boundary data size mismatch");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  bool any = false;
  for (std::size_t k = 0; k < boundary.size(); ++k) {
    if (boundary[k] == 0.0) continue;
    any = true;
    int v = d.dirichlet_vertices()[k];
    for (int e : d.incident(v)) {
      int i = d.free_index(d.other(e, v));
      if (i >= 0) rhs(i) += d.edges()[e].c * boundary[k];
    }
  }
  if (!any) return std::vector<double>(n, 0.0);
  Eigen::VectorXd h = g.apply(rhs);
  return std::vector<double>(h.data(), h.data() + n);
}

FieldSample sample_gff_noise(const GreenMatrix& g, const DomainGraph& d, const std::vector<double>& boundary,
                             Gauge gauge, const Eigen::VectorXd& z) {
  if (g.size() != d.free_count()) throw Error("green/domain dimension mismatch");
  if (!boundary.empty() && boundary.size() != d.dirichlet_vertices().size())
    throw Error("boundary data size mismatch");
  if (z.size() != g.noise_dim()) throw Error("noise vector dimension mismatch");
  FieldSample f;
  f.mode = g.mode();
  Eigen::VectorXd x = g.correlate(z);
  f.values.assign(x.data(), x.data() + x.size());
  if (g.mode() == GreenMode::neumann) {
    if (gauge == Gauge::zero_mean) {
      double m = std::accumulate(f.values.begin(), f.values.end(), 0.0) / f.values.size();
      for (double& v : f.values) v -= m;
    }
    return f;
  }
  f.boundary = boundary.empty() ? std::vector<double>(d.dirichlet_vertices().size(), 0.0) : boundary;
  std::vector<double> h = harmonic_extension(g, d, boundary);
  for (std::size_t i = 0; i < h.size(); ++i) f.values[i] += h[i];
  return f;
}

FieldSample sample_gff(const GreenMatrix& g, const DomainGraph& d, const std::vector<double>& boundary, Gauge gauge,
                       Rng& rng) {
  Eigen::VectorXd z(g.noise_dim());
  for (int i = 0; i < z.size(); ++i) z(i) = std_normal(rng);
  return sample_gff_noise(g, d, boundary, gauge, z);
}

double bridge_hit_probability(double a, double b, double c) {
  if (a == 0.0 || b == 0.0 || (a > 0) != (b > 0)) return 1.0;
  return std::exp(-2.0 * std::abs(a) * std::abs(b) * c);
}

double bridge_stay_probability(double a, double b, double lo, double hi, double c) {
  if (!(a > lo && a < hi && b > lo && b < hi)) return 0.0;
  const double w = hi - lo, x = a - lo, y = b - lo;
  // Duration of the bridge is the resistance 1/c.
  double p = 1.0 - std::exp(-2.0 * x * y * c);
  for (int k = 1; k < 64; ++k) {
    double t = std::exp(-2.0 * k * w * (k * w + y - x) * c) + std::exp(-2.0 * k * w * (k * w - y + x) * c) -
               std::exp(-2.0 * (x + k * w) * (y + k * w) * c) - std::exp(-2.0 * (k * w - x) * (k * w - y) * c);
    p += t;
    if (std::abs(t) < 1e-17) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

EdgeZeroMarks cable_zero_marks(const FieldSample& f, const DomainGraph& d, Rng& rng) {
  const auto& es = d.edges();
  EdgeZeroMarks m;
  m.hit.resize(es.size());
  m.sign_u.resize(es.size());
  m.sign_v.resize(es.size());
  for (std::size_t e = 0; e < es.size(); ++e) {
    double a = value_at(f, d, es[e].u), b = value_at(f, d, es[e].v);
    m.sign_u[e] = static_cast<std::int8_t>((a > 0) - (a < 0));
    m.sign_v[e] = static_cast<std::int8_t>((b > 0) - (b < 0));
    double p = bridge_hit_probability(a, b, es[e].c);
    m.hit[e] = p >= 1.0 ? 1 : (uniform01(rng) < p);
  }
  return m;
}

double pairing(const FieldSample& f, const TestFunction& t) {
  if (t.w.size() != f.values.size()) throw Error("test function dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < t.w.size(); ++i) s += t.w[i] * f.values[i];
  return s;
}

CovarianceEstimate covariance_of_pairs(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw Error("covariance needs at least two paired samples");
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  std::vector<double> prod(n);
  for (std::size_t i = 0; i < n; ++i) prod[i] = (x[i] - mx) * (y[i] - my);
  CovarianceEstimate r;
  r.estimate = std::accumulate(prod.begin(), prod.end(), 0.0) / (n - 1);
  std::size_t batches = std::min<std::size_t>(50, n);
  std::size_t size = n / batches;
  std::vector<double> bm(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t i = b * size; i < (b + 1) * size; ++i) bm[b] += prod[i];
    bm[b] /= size;
  }
  double mb = std::accumulate(bm.begin(), bm.end(), 0.0) / batches;
  double v = 0.0;
  for (double b : bm) v += (b - mb) * (b - mb);
  r.stderr_ = batches > 1 ? std::sqrt(v / (batches - 1) / batches) : 0.0;
  return r;
}

CovarianceEstimate empirical_covariance(const std::vector<FieldSample>& samples, const TestFunction& f,
                                        const TestFunction& g) {
  if (samples.size() < 2) throw Error("empirical_covariance needs at least two samples");
  if (samples.front().mode == GreenMode::neumann && (!f.zero_sum || !g.zero_sum))
    throw Error("neumann pairings require zero-sum test functions");
  std::vector<double> x, y;
  x.reserve(samples.size());
  y.reserve(samples.size());
  for (const auto& s : samples) {
    x.push_back(pairing(s, f));
    y.push_back(pairing(s, g));
  }
  return covariance_of_pairs(x, y);
}

std::string field_csv(const FieldSample& f, const DomainGraph& d) {
  std::ostringstream os;
  os.precision(17);
  os << "vertex,x,y,value\n";
  for (int v = 0; v < d.vertex_count(); ++v)
    os << v << ',' << d.vertices()[v].x << ',' << d.vertices()[v].y << ',' << value_at(f, d, v) << '\n';
  return os.str();
}

}  // namespace gfflab
