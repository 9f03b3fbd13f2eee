#include "simple/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "simple/errors.hpp"

namespace simple {

namespace {

// Reflect an out-of-range coordinate back into [0, n) without repeating the
// edge sample (the 'abcba' reflection).
std::size_t reflect101(std::ptrdiff_t i, std::size_t n) {
  const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(n) - 1;
  if (i < 0) i = -i;
  if (i > last) i = 2 * last - i;
  return static_cast<std::size_t>(i);
}

void clamp01(double* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] = std::clamp(v[i], 0.0, 1.0);
}

void hflip_inplace(double* img, std::size_t c, std::size_t h, std::size_t w) {
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      double* row = img + (ch * h + y) * w;
      std::reverse(row, row + w);
    }
  }
}

// Bilinear resize of the square crop [top..top+size) x [left..left+size)
// back to h x w, half-pixel centers, edge-replicated taps.
void crop_resize(const double* src, double* dst, std::size_t c, std::size_t h,
                 std::size_t w, std::size_t top, std::size_t left,
                 std::size_t size) {
  const double sy_scale = static_cast<double>(size) / static_cast<double>(h);
  const double sx_scale = static_cast<double>(size) / static_cast<double>(w);
  const std::ptrdiff_t lo_y = static_cast<std::ptrdiff_t>(top);
  const std::ptrdiff_t hi_y = static_cast<std::ptrdiff_t>(top + size) - 1;
  const std::ptrdiff_t lo_x = static_cast<std::ptrdiff_t>(left);
  const std::ptrdiff_t hi_x = static_cast<std::ptrdiff_t>(left + size) - 1;
  for (std::size_t y = 0; y < h; ++y) {
    const double sy = (static_cast<double>(y) + 0.5) * sy_scale - 0.5 +
                      static_cast<double>(top);
    const double fy = std::floor(sy);
    const double wy = sy - fy;
    const std::ptrdiff_t y0 = std::clamp(static_cast<std::ptrdiff_t>(fy), lo_y, hi_y);
    const std::ptrdiff_t y1 = std::clamp(static_cast<std::ptrdiff_t>(fy) + 1, lo_y, hi_y);
    for (std::size_t x = 0; x < w; ++x) {
      const double sx = (static_cast<double>(x) + 0.5) * sx_scale - 0.5 +
                        static_cast<double>(left);
      const double fx = std::floor(sx);
      const double wx = sx - fx;
      const std::ptrdiff_t x0 = std::clamp(static_cast<std::ptrdiff_t>(fx), lo_x, hi_x);
      const std::ptrdiff_t x1 = std::clamp(static_cast<std::ptrdiff_t>(fx) + 1, lo_x, hi_x);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double* plane = src + ch * h * w;
        const double v00 = plane[y0 * w + x0];
        const double v01 = plane[y0 * w + x1];
        const double v10 = plane[y1 * w + x0];
        const double v11 = plane[y1 * w + x1];
        dst[(ch * h + y) * w + x] = (1.0 - wy) * ((1.0 - wx) * v00 + wx * v01) +
                                    wy * ((1.0 - wx) * v10 + wx * v11);
      }
    }
  }
}

// Separable 3-tap Gaussian with reflected borders.
void blur3_inplace(double* img, double* tmp, std::size_t c, std::size_t h,
                   std::size_t w, double sigma) {
  const double k1 = std::exp(-1.0 / (2.0 * sigma * sigma));
  const double norm = 1.0 / (1.0 + 2.0 * k1);
  const double w0 = norm, w1 = k1 * norm;
  for (std::size_t ch = 0; ch < c; ++ch) {
    double* plane = img + ch * h * w;
    // horizontal pass into tmp
    for (std::size_t y = 0; y < h; ++y) {
      const double* row = plane + y * w;
      double* out = tmp + y * w;
      for (std::size_t x = 0; x < w; ++x) {
        const double a = row[reflect101(static_cast<std::ptrdiff_t>(x) - 1, w)];
        const double b = row[reflect101(static_cast<std::ptrdiff_t>(x) + 1, w)];
        out[x] = w0 * row[x] + w1 * (a + b);
      }
    }
    // vertical pass back into the plane
    for (std::size_t y = 0; y < h; ++y) {
      const double* up = tmp + reflect101(static_cast<std::ptrdiff_t>(y) - 1, h) * w;
      const double* dn = tmp + reflect101(static_cast<std::ptrdiff_t>(y) + 1, h) * w;
      const double* mid = tmp + y * w;
      double* out = plane + y * w;
      for (std::size_t x = 0; x < w; ++x) {
        out[x] = w0 * mid[x] + w1 * (up[x] + dn[x]);
      }
    }
  }
}

void contrast_inplace(double* img, std::size_t c, std::size_t h, std::size_t w,
                      double f) {
  // f == 1 must be the exact identity, so skip the blend arithmetic.
  if (f == 1.0) return;
  const std::size_t plane = h * w;
  double mean = 0.0;
  if (c == 3) {
    const double* r = img;
    const double* g = img + plane;
    const double* b = img + 2 * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      mean += 0.2989 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    }
    mean /= static_cast<double>(plane);
  } else {
    for (std::size_t i = 0; i < c * plane; ++i) mean += img[i];
    mean /= static_cast<double>(c * plane);
  }
  for (std::size_t i = 0; i < c * plane; ++i) {
    img[i] = mean + f * (img[i] - mean);
  }
}

void erase_inplace(double* img, std::size_t c, std::size_t h, std::size_t w,
                   std::size_t top, std::size_t left, std::size_t eh,
                   std::size_t ew) {
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = top; y < top + eh; ++y) {
      double* row = img + (ch * h + y) * w + left;
      std::fill(row, row + ew, 0.0);
    }
  }
}

// Inverse-mapped affine with bilinear sampling and zero fill, torchvision
// matrix conventions (x-axis shear, center invariant, translation applied
// after the centered rotate/scale/shear).
void affine_apply(const double* src, double* dst, std::size_t c, std::size_t h,
                  std::size_t w, double angle_deg, int tx, int ty,
                  double scale, double shear_deg) {
  const double rot = angle_deg * std::numbers::pi / 180.0;
  const double sh = shear_deg * std::numbers::pi / 180.0;
  const double a = std::cos(rot);
  const double b = -std::cos(rot) * std::tan(sh) - std::sin(rot);
  const double cc = std::sin(rot);
  const double d = -std::sin(rot) * std::tan(sh) + std::cos(rot);
  const double inv00 = d / scale, inv01 = -b / scale;
  const double inv10 = -cc / scale, inv11 = a / scale;
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;

  for (std::size_t y = 0; y < h; ++y) {
    const double yc = static_cast<double>(y) - cy - static_cast<double>(ty);
    for (std::size_t x = 0; x < w; ++x) {
      const double xc = static_cast<double>(x) - cx - static_cast<double>(tx);
      const double sx = inv00 * xc + inv01 * yc + cx;
      const double sy = inv10 * xc + inv11 * yc + cy;
      const double fx = std::floor(sx);
      const double fy = std::floor(sy);
      const double wx = sx - fx;
      const double wy = sy - fy;
      const std::ptrdiff_t x0 = static_cast<std::ptrdiff_t>(fx);
      const std::ptrdiff_t y0 = static_cast<std::ptrdiff_t>(fy);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double* plane = src + ch * h * w;
        auto tap = [&](std::ptrdiff_t yy, std::ptrdiff_t xx) -> double {
          if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(h) || xx < 0 ||
              xx >= static_cast<std::ptrdiff_t>(w)) {
            return 0.0;  // fill
          }
          return plane[yy * static_cast<std::ptrdiff_t>(w) + xx];
        };
        dst[(ch * h + y) * w + x] =
            (1.0 - wy) * ((1.0 - wx) * tap(y0, x0) + wx * tap(y0, x0 + 1)) +
            wy * ((1.0 - wx) * tap(y0 + 1, x0) + wx * tap(y0 + 1, x0 + 1));
      }
    }
  }
}

void check_batch(const Tensor& batch, const char* op) {
  if (batch.ndim() != 4) {
    throw ShapeError(std::string(op) + ": want [n,c,h,w], got " +
                     shape_str(batch.shape()));
  }
  if (batch.shape()[2] < 8 || batch.shape()[3] < 8) {
    throw ShapeError(std::string(op) + ": images must be at least 8x8");
  }
  if (batch.tracked()) {
    throw ContractError(std::string(op) + ": augmentation input must be detached");
  }
}

}  // namespace

WeakSample sample_weak(const WeakAugPolicy& p, RngStream& rng) {
  WeakSample s;
  const std::uint64_t span = 2 * p.pad + 1;
  s.dy = static_cast<int>(rng.uniform_int(span)) - static_cast<int>(p.pad);
  s.dx = static_cast<int>(rng.uniform_int(span)) - static_cast<int>(p.pad);
  s.flip = rng.bernoulli(p.flip_p);
  return s;
}

StrongSample sample_strong(const StrongAugPolicy& p, std::size_t h,
                           std::size_t w, RngStream& rng) {
  StrongSample s;
  s.flip = rng.bernoulli(p.flip_p);

  const double area = rng.uniform(p.crop_scale_min, p.crop_scale_max) *
                      static_cast<double>(h * w);
  const std::size_t max_side = std::min(h, w);
  s.crop_size = static_cast<std::size_t>(
      std::clamp<long>(std::lround(std::sqrt(area)), 1, static_cast<long>(max_side)));
  s.crop_top = rng.uniform_int(h - s.crop_size + 1);
  s.crop_left = rng.uniform_int(w - s.crop_size + 1);

  s.blur = rng.bernoulli(p.blur_p);
  s.blur_sigma = p.blur_sigma;
  s.contrast = rng.uniform(p.contrast_min, p.contrast_max);

  s.erase = rng.bernoulli(p.erase_p);
  if (s.erase) {
    bool placed = false;
    for (int attempt = 0; attempt < 10 && !placed; ++attempt) {
      const double target = rng.uniform(p.erase_area_min, p.erase_area_max) *
                            static_cast<double>(h * w);
      const double aspect = std::exp(
          rng.uniform(std::log(p.erase_aspect_min), std::log(p.erase_aspect_max)));
      const long eh = std::lround(std::sqrt(target * aspect));
      const long ew = std::lround(std::sqrt(target / aspect));
      if (eh >= 1 && ew >= 1 && eh <= static_cast<long>(h) &&
          ew <= static_cast<long>(w)) {
        s.erase_h = static_cast<std::size_t>(eh);
        s.erase_w = static_cast<std::size_t>(ew);
        s.erase_top = rng.uniform_int(h - s.erase_h + 1);
        s.erase_left = rng.uniform_int(w - s.erase_w + 1);
        placed = true;
      }
    }
    if (!placed) s.erase = false;
  }

  s.angle_deg = rng.uniform(-p.affine_degrees, p.affine_degrees);
  s.translate_x = static_cast<int>(std::lround(
      rng.uniform(-p.affine_translate, p.affine_translate) * static_cast<double>(w)));
  s.translate_y = static_cast<int>(std::lround(
      rng.uniform(-p.affine_translate, p.affine_translate) * static_cast<double>(h)));
  s.scale = rng.uniform(p.affine_scale_min, p.affine_scale_max);
  s.shear_deg = rng.uniform(-p.affine_shear, p.affine_shear);
  return s;
}

Tensor apply_weak(const Tensor& batch, const std::vector<WeakSample>& samples) {
  check_batch(batch, "apply_weak");
  const std::size_t n = batch.shape()[0], c = batch.shape()[1],
                    h = batch.shape()[2], w = batch.shape()[3];
  if (samples.size() != n) {
    throw ShapeError("apply_weak: sample count does not match batch size");
  }
  const auto& src = batch.data();
  std::vector<double> out(src.size());
  for (std::size_t img = 0; img < n; ++img) {
    const WeakSample& s = samples[img];
    const double* in = src.data() + img * c * h * w;
    double* o = out.data() + img * c * h * w;
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* plane = in + ch * h * w;
      double* oplane = o + ch * h * w;
      for (std::size_t y = 0; y < h; ++y) {
        const std::size_t sy =
            reflect101(static_cast<std::ptrdiff_t>(y) + s.dy, h);
        for (std::size_t x = 0; x < w; ++x) {
          const std::size_t cx = s.flip ? w - 1 - x : x;
          const std::size_t sx =
              reflect101(static_cast<std::ptrdiff_t>(cx) + s.dx, w);
          oplane[y * w + x] = plane[sy * w + sx];
        }
      }
    }
    clamp01(o, c * h * w);
  }
  return Tensor::from(batch.shape(), std::move(out));
}

Tensor apply_strong(const Tensor& batch,
                    const std::vector<StrongSample>& samples) {
  check_batch(batch, "apply_strong");
  const std::size_t n = batch.shape()[0], c = batch.shape()[1],
                    h = batch.shape()[2], w = batch.shape()[3];
  if (samples.size() != n) {
    throw ShapeError("apply_strong: sample count does not match batch size");
  }
  const auto& src = batch.data();
  std::vector<double> out(src.size());
  std::vector<double> cur(c * h * w), tmp(c * h * w);
  for (std::size_t img = 0; img < n; ++img) {
    const StrongSample& s = samples[img];
    const std::size_t sz = c * h * w;
    std::copy_n(src.data() + img * sz, sz, cur.data());

    if (s.flip) hflip_inplace(cur.data(), c, h, w);
    clamp01(cur.data(), sz);

    crop_resize(cur.data(), tmp.data(), c, h, w, s.crop_top, s.crop_left,
                s.crop_size);
    std::swap(cur, tmp);
    clamp01(cur.data(), sz);

    if (s.blur) blur3_inplace(cur.data(), tmp.data(), c, h, w, s.blur_sigma);
    clamp01(cur.data(), sz);

    contrast_inplace(cur.data(), c, h, w, s.contrast);
    clamp01(cur.data(), sz);

    if (s.erase) {
      erase_inplace(cur.data(), c, h, w, s.erase_top, s.erase_left, s.erase_h,
                    s.erase_w);
    }
    clamp01(cur.data(), sz);

    affine_apply(cur.data(), tmp.data(), c, h, w, s.angle_deg, s.translate_x,
                 s.translate_y, s.scale, s.shear_deg);
    std::swap(cur, tmp);
    clamp01(cur.data(), sz);

    std::copy_n(cur.data(), sz, out.data() + img * sz);
  }
  return Tensor::from(batch.shape(), std::move(out));
}

Tensor weak_augment(const Tensor& batch, const WeakAugPolicy& p,
                    RngStream& rng) {
  check_batch(batch, "weak_augment");
  std::vector<WeakSample> samples;
  samples.reserve(batch.shape()[0]);
  for (std::size_t i = 0; i < batch.shape()[0]; ++i) {
    samples.push_back(sample_weak(p, rng));
  }
  return apply_weak(batch, samples);
}

Tensor strong_augment(const Tensor& batch, const StrongAugPolicy& p,
                      RngStream& rng) {
  check_batch(batch, "strong_augment");
  const std::size_t h = batch.shape()[2], w = batch.shape()[3];
  std::vector<StrongSample> samples;
  samples.reserve(batch.shape()[0]);
  for (std::size_t i = 0; i < batch.shape()[0]; ++i) {
    samples.push_back(sample_strong(p, h, w, rng));
  }
  return apply_strong(batch, samples);
}

}  // namespace simple
