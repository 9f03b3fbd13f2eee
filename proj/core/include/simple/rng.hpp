#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace simple {

// Counter-based deterministic RNG.
//
// Every draw is a pure function mix(key, counter); streams never share state,
// so reordering draws in one stream cannot perturb another. A stream is fully
// described by (key, counter), which is what checkpoints persist.
//
// mix is SplitMix64's finalizer applied to key ^ golden-ratio-scrambled
// counter. Passes practical equidistribution needs for simulation work at
// this scale; not cryptographic.

std::uint64_t mix64(std::uint64_t key, std::uint64_t counter);

// FNV-1a, used to derive per-purpose stream keys from human-readable names.
std::uint64_t fnv1a64(std::string_view s);

class RngStream {
 public:
  RngStream() : key_(0), counter_(0) {}
  explicit RngStream(std::uint64_t key, std::uint64_t counter = 0)
      : key_(key), counter_(counter) {}

  // Derive a stream for a named purpose from a run seed. Distinct names give
  // unrelated streams for the same seed.
  static RngStream derive(std::uint64_t seed, std::string_view name);

  std::uint64_t next_u64();

  // Uniform in [0, 1). 53-bit mantissa resolution.
  double uniform();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Uniform integer in [0, n). n must be > 0. Rejection-free modulo is fine
  // here: n is always tiny relative to 2^64 so bias is < 2^-50.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller. Consumes exactly two counter ticks per
  // call (no caching of the second variate, keeps state minimal).
  double normal();
  double normal(double mean, double stddev);

  // Bernoulli(p).
  bool bernoulli(double p);

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i + 1));
      std::swap(v[i], v[j]);
    }
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t c) { counter_ = c; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

// A permutation of [0, n) keyed by (key, epoch). Stateless: the same inputs
// always give the same permutation, so mid-epoch resume needs no saved
// permutation, only the global step.
std::vector<std::size_t> keyed_permutation(std::uint64_t key,
                                           std::uint64_t epoch, std::size_t n);

}  // namespace simple
