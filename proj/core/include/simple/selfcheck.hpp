#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace simple {

struct PropertyOptions {
  std::uint64_t theorem_samples = 100000;  // simplex pairs, split across dims
  std::size_t pair_batches = 200;
  std::size_t gradcheck_seeds = 50;
  std::uint64_t seed = 0x5e1fc8ec;
};

struct PropertyResult {
  std::string family;
  bool passed = false;
  std::uint64_t cases = 0;  // individual checks that actually ran
  std::string detail;       // counterexample on failure, note otherwise
};

// Confidence-bound theorem: for random simplex pairs across dimensions
// {2,10,100} and thresholds {0.95,0.75}x{0.9,0.7}, whenever the anchor
// passes the confidence gate and the pair passes the similarity gate, the
// partner's confidence exceeds confidence_bound(tau_c, tau_s) - 1e-12.
// Fails as vacuous if too few pairs pass the gates to mean anything.
PropertyResult check_theorem_bound(std::uint64_t samples, std::uint64_t seed);

// Vectorized pair_loss against the exhaustive double-loop oracle.
PropertyResult check_pair_loss_oracle(std::size_t batches, std::uint64_t seed);

// Central finite differences (h = 1e-4) against reverse-mode gradients for
// every differentiable op, plus a directional probe of the fully composed
// training loss. Relative error threshold 1e-4 with unit floor.
PropertyResult check_gradients(std::size_t seeds, std::uint64_t seed);

// Frozen hand values for sharpening, similarity, thresholds, losses, and the
// closed-form confidence bound.
PropertyResult check_sharpen_similarity_units();

// Shadow after t constant-parameter updates equals the decay^t interpolation
// within 1e-12, for t up to 1000.
PropertyResult check_ema_closed_form();

// Stream determinism, stream independence, permutation validity, and the
// two-ticks-per-normal counter contract.
PropertyResult check_rng_determinism();

std::vector<PropertyResult> run_property_suites(const PropertyOptions& opt);

}  // namespace simple
