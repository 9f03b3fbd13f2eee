#pragma once

#include <cstddef>
#include <vector>

#include "simple/rng.hpp"
#include "simple/tensor.hpp"

namespace simple {

// Weak policy: reflect-pad by `pad` pixels, crop back to the original size,
// then horizontal flip with probability flip_p.
struct WeakAugPolicy {
  std::size_t pad = 4;
  double flip_p = 0.5;
};

// One image's weak draw. dy/dx are crop displacements from center in
// [-pad, pad]; (0,0, no flip) is the identity.
struct WeakSample {
  int dy = 0;
  int dx = 0;
  bool flip = false;
};

// Strong policy, applied in this fixed order: horizontal flip, resized crop,
// Gaussian blur, contrast jitter, random erasing, random affine. Outputs are
// clamped to [0,1] after every transform. Collapsing all probabilities to 0
// and all ranges to their identity points makes the pipeline exactly the
// identity.
struct StrongAugPolicy {
  double flip_p = 0.5;
  // Square crop with area fraction in [crop_scale_min, crop_scale_max]
  // (aspect ratio fixed at 1), resized back bilinearly.
  double crop_scale_min = 0.8;
  double crop_scale_max = 1.0;
  // 3x3 Gaussian, reflected borders.
  double blur_p = 0.5;
  double blur_sigma = 1.5;
  // Blend with the grayscale mean: out = mean + f*(x - mean).
  double contrast_min = 0.75;
  double contrast_max = 1.5;
  // Zero out one rectangle; up to 10 placement attempts.
  double erase_p = 0.1;
  double erase_area_min = 0.02;
  double erase_area_max = 0.33;
  double erase_aspect_min = 0.3;
  double erase_aspect_max = 3.3;
  // Center-invariant affine, bilinear, zero fill. Shear acts on x only.
  double affine_degrees = 25.0;
  double affine_translate = 0.2;
  double affine_scale_min = 0.8;
  double affine_scale_max = 1.2;
  double affine_shear = 8.0;
};

struct StrongSample {
  bool flip = false;
  std::size_t crop_top = 0, crop_left = 0, crop_size = 0;
  bool blur = false;
  double blur_sigma = 1.5;
  double contrast = 1.0;
  bool erase = false;
  std::size_t erase_top = 0, erase_left = 0, erase_h = 0, erase_w = 0;
  double angle_deg = 0.0;
  int translate_x = 0, translate_y = 0;
  double scale = 1.0;
  double shear_deg = 0.0;
};

// Draw one image's parameters. The rng tick sequence is fixed per policy, so
// a seed pins the whole batch. Sampling is split from application so tests
// can force specific draws.
WeakSample sample_weak(const WeakAugPolicy& p, RngStream& rng);
StrongSample sample_strong(const StrongAugPolicy& p, std::size_t h,
                           std::size_t w, RngStream& rng);

// Apply given samples to a [n,c,h,w] batch (samples.size() == n).
Tensor apply_weak(const Tensor& batch, const std::vector<WeakSample>& samples);
Tensor apply_strong(const Tensor& batch,
                    const std::vector<StrongSample>& samples);

// Sample-and-apply with one independent draw per image.
Tensor weak_augment(const Tensor& batch, const WeakAugPolicy& p,
                    RngStream& rng);
Tensor strong_augment(const Tensor& batch, const StrongAugPolicy& p,
                      RngStream& rng);

}  // namespace simple
