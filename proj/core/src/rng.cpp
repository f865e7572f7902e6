#include "gfflab/rng.hpp"

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace gfflab {

namespace {
constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}
}  // namespace

Philox4x32::Philox4x32(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

Philox4x32::block_type Philox4x32::block(block_type c, key_type k) {
  for (int r = 0; r < 10; ++r) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

void Philox4x32::refill() {
  block_type ctr = {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                    static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  key_type key = {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  buf_ = block(ctr, key);
  ++block_;
  avail_ = 2;
}

Philox4x32::result_type Philox4x32::operator()() {
  if (avail_ == 0) refill();
  int i = 2 - avail_;
  --avail_;
  ++drawn_;
  return static_cast<std::uint64_t>(buf_[2 * i]) | (static_cast<std::uint64_t>(buf_[2 * i + 1]) << 32);
}

void Philox4x32::discard(std::uint64_t n) {
  while (n > 0 && avail_ > 0) {
    (*this)();
    --n;
  }
  block_ += n / 2;
  drawn_ += (n / 2) * 2;
  if (n % 2) (*this)();
}

Rng rng_stream(std::uint64_t seed, std::uint64_t stream_id) { return Rng(seed, stream_id); }

double uniform01(Rng& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

double std_normal(Rng& rng) { return boost::random::normal_distribution<double>(0.0, 1.0)(rng); }

double exponential1(Rng& rng) { return boost::random::exponential_distribution<double>(1.0)(rng); }

double gamma_draw(Rng& rng, double shape, double rate) {
  if (shape <= 0.0) return 0.0;
  return boost::random::gamma_distribution<double>(shape, 1.0)(rng) / rate;
}

std::uint64_t poisson_draw(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  return boost::random::poisson_distribution<std::uint64_t, double>(mean)(rng);
}

bool bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform01(rng) < p;
}

std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return boost::random::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
}

}  // namespace gfflab
