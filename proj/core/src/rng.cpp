#include "simple/rng.hpp"

#include <cmath>
#include <numbers>

#include "simple/errors.hpp"

namespace simple {

std::uint64_t mix64(std::uint64_t key, std::uint64_t counter) {
  // counter + 1 keeps the all-zero input off the finalizer's fixed point
  std::uint64_t z = key + (counter + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

RngStream RngStream::derive(std::uint64_t seed, std::string_view name) {
  return RngStream(mix64(seed, fnv1a64(name)));
}

std::uint64_t RngStream::next_u64() { return mix64(key_, counter_++); }

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::uint64_t RngStream::uniform_int(std::uint64_t n) {
  if (n == 0) throw ValueError("uniform_int: n must be positive");
  return next_u64() % n;
}

double RngStream::normal() {
  // u1 must be strictly positive for the log; uniform() can return 0.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::normal(double mean, double stddev) {
  return mean + stddev * normal();
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

std::vector<std::size_t> keyed_permutation(std::uint64_t key,
                                           std::uint64_t epoch,
                                           std::size_t n) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  RngStream s(mix64(key, epoch));
  s.shuffle(perm);
  return perm;
}

}  // namespace simple
