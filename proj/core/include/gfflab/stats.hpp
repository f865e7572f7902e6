#pragma once

#include <string>
#include <vector>

namespace gfflab {

// z: pass iff |score| <= threshold (score is a z-score).
// ks: pass iff score >= threshold (score is a p-value, threshold the level).
// count: pass iff estimate <= threshold.
// bound: pass iff score <= threshold (score is a relative error or similar).
// range: pass iff target_lo <= estimate <= target_hi.
enum class TestKind { z, ks, count, bound, range };
const char* to_string(TestKind k);
TestKind test_kind_from_string(const std::string& s);

struct StatVerdict {
  std::string name;
  double estimate = 0.0;
  double stderr_ = 0.0;
  double target = 0.0;
  TestKind kind = TestKind::z;
  double score = 0.0;
  double threshold = 0.0;
  double target_hi = 0.0;  // upper end for range verdicts
  bool pass = false;
};

bool recompute_pass(const StatVerdict& v);

struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

// Mean with batch-means standard error (50 batches, fewer for small samples).
MeanEstimate batch_mean(const std::vector<double>& x);

// Survival function of the Kolmogorov distribution.
double kolmogorov_q(double lambda);

struct KsResult {
  double d = 0.0;
  double p = 1.0;
};
KsResult ks_statistic(std::vector<double> a, std::vector<double> b);

StatVerdict ks_two_sample(const std::string& name, const std::vector<double>& a, const std::vector<double>& b,
                          double alpha);
StatVerdict moment_ztest(const std::string& name, const std::vector<double>& sample, double target, double tol);
StatVerdict z_verdict(const std::string& name, double estimate, double stderr_, double target, double tol);
StatVerdict count_verdict(const std::string& name, double count, double allowed);
StatVerdict bound_verdict(const std::string& name, double estimate, double target, double score, double bound);
StatVerdict range_verdict(const std::string& name, double estimate, double lo, double hi);

}  // namespace gfflab
