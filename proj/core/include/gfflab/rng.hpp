#pragma once

#include <array>
#include <cstdint>

namespace gfflab {

// Philox4x32-10 counter-based generator. A stream is addressed by
// (seed, stream id); the 128-bit counter is (block index, stream id).
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using block_type = std::array<std::uint32_t, 4>;
  using key_type = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();
  void discard(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  // 64-bit draws consumed so far.
  std::uint64_t position() const { return drawn_; }

  static block_type block(block_type ctr, key_type key);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;  // next block to generate
  block_type buf_{};
  int avail_ = 0;  // 64-bit words left in buf_
  std::uint64_t drawn_ = 0;
};

using Rng = Philox4x32;

Rng rng_stream(std::uint64_t seed, std::uint64_t stream_id);

// Open interval (0,1), 53 bits.
double uniform01(Rng& rng);
double std_normal(Rng& rng);
double exponential1(Rng& rng);
// Gamma with given shape and rate; shape 0 gives 0.
double gamma_draw(Rng& rng, double shape, double rate);
std::uint64_t poisson_draw(Rng& rng, double mean);
bool bernoulli(Rng& rng, double p);
// Uniform integer in [0, n).
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

}  // namespace gfflab
