#include "gfflab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gfflab/errors.hpp"

namespace gfflab {

const char* to_string(TestKind k) {
  switch (k) {
    case TestKind::z: return "z";
    case TestKind::ks: return "KS";
    case TestKind::count: return "count";
    case TestKind::bound: return "bound";
    case TestKind::range: return "range";
  }
  return "?";
}

TestKind test_kind_from_string(const std::string& s) {
  if (s == "z") return TestKind::z;
  if (s == "KS") return TestKind::ks;
  if (s == "count") return TestKind::count;
  if (s == "bound") return TestKind::bound;
  if (s == "range") return TestKind::range;
  throw Error("unknown test kind '" + s + "'");
}

bool recompute_pass(const StatVerdict& v) {
  switch (v.kind) {
    case TestKind::z: return std::abs(v.score) <= v.threshold;
    case TestKind::ks: return v.score >= v.threshold;
    case TestKind::count: return v.estimate <= v.threshold;
    case TestKind::bound: return v.score <= v.threshold;
    case TestKind::range: return v.estimate >= v.target && v.estimate <= v.target_hi;
  }
  return false;
}

MeanEstimate batch_mean(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n == 0) throw Error("batch_mean of an empty sample");
  MeanEstimate r;
  r.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const std::size_t batches = std::min<std::size_t>(50, n);
  if (batches < 2) return r;
  const std::size_t size = n / batches;
  std::vector<double> bm(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t i = b * size; i < (b + 1) * size; ++i) bm[b] += x[i];
    bm[b] /= size;
  }
  double mb = std::accumulate(bm.begin(), bm.end(), 0.0) / batches;
  double v = 0.0;
  for (double b : bm) v += (b - mb) * (b - mb);
  r.stderr_ = std::sqrt(v / (batches - 1) / batches);
  return r;
}

double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double t = 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? t : -t);
    if (t < 1e-16) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

KsResult ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  KsResult r;
  r.d = d;
  const double ne = na * nb / (na + nb);
  const double sq = std::sqrt(ne);
  r.p = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
  return r;
}

StatVerdict ks_two_sample(const std::string& name, const std::vector<double>& a, const std::vector<double>& b,
                          double alpha) {
  if (a.size() < 50 || b.size() < 50) throw Error("ks_two_sample needs at least 50 observations per sample");
  KsResult k = ks_statistic(a, b);
  StatVerdict v;
  v.name = name;
  v.kind = TestKind::ks;
  v.estimate = k.d;
  v.target = 0.0;
  v.score = k.p;
  v.threshold = alpha;
  v.pass = recompute_pass(v);
  return v;
}

StatVerdict z_verdict(const std::string& name, double estimate, double stderr_, double target, double tol) {
  StatVerdict v;
  v.name = name;
  v.kind = TestKind::z;
  v.estimate = estimate;
  v.stderr_ = stderr_;
  v.target = target;
  double diff = estimate - target;
  v.score = stderr_ > 0.0 ? diff / stderr_ : (diff == 0.0 ? 0.0 : std::copysign(1e300, diff));
  v.threshold = tol;
  v.pass = recompute_pass(v);
  return v;
}

StatVerdict moment_ztest(const std::string& name, const std::vector<double>& sample, double target, double tol) {
  MeanEstimate m = batch_mean(sample);
  return z_verdict(name, m.mean, m.stderr_, target, tol);
}

StatVerdict count_verdict(const std::string& name, double count, double allowed) {
  StatVerdict v;
  v.name = name;
  v.kind = TestKind::count;
  v.estimate = count;
  v.threshold = allowed;
  v.pass = recompute_pass(v);
  return v;
}

StatVerdict bound_verdict(const std::string& name, double estimate, double target, double score, double bound) {
  StatVerdict v;
  v.name = name;
  v.kind = TestKind::bound;
  v.estimate = estimate;
  v.target = target;
  v.score = score;
  v.threshold = bound;
  v.pass = recompute_pass(v);
  return v;
}

StatVerdict range_verdict(const std::string& name, double estimate, double lo, double hi) {
  StatVerdict v;
  v.name = name;
  v.kind = TestKind::range;
  v.estimate = estimate;
  v.target = lo;
  v.target_hi = hi;
  v.pass = recompute_pass(v);
  return v;
}

}  // namespace gfflab
