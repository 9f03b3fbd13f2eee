#include "simple/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "simple/errors.hpp"
#include "simple/rng.hpp"

namespace simple {

void LabeledDataset::validate() const {
  if (num_classes < 2 || num_classes > 255) {
    throw ConfigError("dataset: class count must be in [2,255]");
  }
  if (pixels.size() != size() * image_bytes()) {
    throw FormatError("dataset: pixel store does not match record count");
  }
  for (std::uint8_t l : labels) {
    if (l >= num_classes) throw FormatError("dataset: label out of range");
  }
}

Tensor LabeledDataset::gather(const std::vector<std::size_t>& indices) const {
  const std::size_t stride = image_bytes();
  std::vector<double> out(indices.size() * stride);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size()) throw ShapeError("dataset: record index out of range");
    const std::uint8_t* src = pixels.data() + indices[i] * stride;
    double* dst = out.data() + i * stride;
    for (std::size_t k = 0; k < stride; ++k) {
      dst[k] = static_cast<double>(src[k]) / 255.0;
    }
  }
  return Tensor::from({indices.size(), channels, height, width}, std::move(out));
}

std::size_t LabeledDataset::label_of(std::size_t index) const {
  if (index >= size()) throw ShapeError("dataset: record index out of range");
  return labels[index];
}

namespace {

// Signed distance proxy for a regular polygon: a point is inside when its
// projection on every edge normal stays within the apothem.
bool in_polygon(double px, double py, double cx, double cy, double apothem,
                double rot, std::size_t sides) {
  for (std::size_t e = 0; e < sides; ++e) {
    const double phi =
        rot + 2.0 * std::numbers::pi * static_cast<double>(e) /
                  static_cast<double>(sides);
    const double d = (px - cx) * std::cos(phi) + (py - cy) * std::sin(phi);
    if (d > apothem) return false;
  }
  return true;
}

std::uint8_t quantize(double x) {
  const double c = std::clamp(x, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

}  // namespace

LabeledDataset generate_toy_shapes(std::size_t num_classes,
                                   std::size_t n_per_class, std::size_t size,
                                   std::uint64_t seed) {
  if (num_classes < 2 || num_classes > 255) {
    throw ConfigError("toy shapes: class count must be in [2,255]");
  }
  if (size < 16) throw ConfigError("toy shapes: size must be >= 16");
  if (n_per_class == 0) throw ConfigError("toy shapes: empty classes");

  LabeledDataset ds;
  ds.num_classes = num_classes;
  ds.channels = 3;
  ds.height = size;
  ds.width = size;
  ds.pixels.resize(num_classes * n_per_class * ds.image_bytes());
  ds.labels.resize(num_classes * n_per_class);

  RngStream rng = RngStream::derive(seed, "toy_shapes");
  const double fsize = static_cast<double>(size);
  const std::size_t plane = size * size;

  std::size_t rec = 0;
  for (std::size_t cls = 0; cls < num_classes; ++cls) {
    const std::size_t sides = 3 + cls / 2;
    const bool outline = (cls % 2) == 1;
    for (std::size_t s = 0; s < n_per_class; ++s, ++rec) {
      const double rot = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double cx = rng.uniform(0.42, 0.58) * fsize;
      const double cy = rng.uniform(0.42, 0.58) * fsize;
      const double radius = rng.uniform(0.28, 0.42) * fsize;
      const double bg = rng.uniform(0.10, 0.45);
      const double fg = rng.uniform(0.55, 0.95);
      double bg_tint[3], fg_tint[3];
      for (int c = 0; c < 3; ++c) bg_tint[c] = rng.uniform(-0.08, 0.08);
      for (int c = 0; c < 3; ++c) fg_tint[c] = rng.uniform(-0.08, 0.08);

      const double apothem =
          radius * std::cos(std::numbers::pi / static_cast<double>(sides));
      const double ring = std::max(1.8, 0.2 * radius);
      const double inner = std::max(0.0, apothem - ring);

      std::uint8_t* img = ds.pixels.data() + rec * ds.image_bytes();
      for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
          // 2x2 supersampled coverage for smooth edges.
          int hits = 0;
          for (int sy = 0; sy < 2; ++sy) {
            for (int sx = 0; sx < 2; ++sx) {
              const double py = static_cast<double>(y) + 0.25 + 0.5 * sy;
              const double px = static_cast<double>(x) + 0.25 + 0.5 * sx;
              bool in = in_polygon(px, py, cx, cy, apothem, rot, sides);
              if (in && outline) {
                in = !in_polygon(px, py, cx, cy, inner, rot, sides);
              }
              if (in) ++hits;
            }
          }
          const double cov = hits / 4.0;
          for (int c = 0; c < 3; ++c) {
            const double base = bg + bg_tint[c];
            const double shape = fg + fg_tint[c];
            const double value =
                base + (shape - base) * cov + rng.normal(0.0, 0.04);
            img[c * plane + y * size + x] = quantize(value);
          }
        }
      }
      ds.labels[rec] = static_cast<std::uint8_t>(cls);
    }
  }
  ds.validate();
  return ds;
}

namespace {

LabeledDataset load_cifar_files(const std::vector<std::string>& paths) {
  constexpr std::size_t kRecord = 3073;
  LabeledDataset ds;
  ds.num_classes = 10;
  ds.channels = 3;
  ds.height = 32;
  ds.width = 32;
  for (const std::string& path : paths) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cifar10: cannot open " + path);
    f.seekg(0, std::ios::end);
    const std::streamoff bytes = f.tellg();
    f.seekg(0, std::ios::beg);
    if (bytes <= 0 || bytes % static_cast<std::streamoff>(kRecord) != 0) {
      throw FormatError("cifar10: " + path + " is " + std::to_string(bytes) +
                        " bytes, not a multiple of 3073");
    }
    const std::size_t n = static_cast<std::size_t>(bytes) / kRecord;
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(bytes));
    if (!f.read(reinterpret_cast<char*>(buf.data()), bytes)) {
      throw IoError("cifar10: short read on " + path);
    }
    for (std::size_t r = 0; r < n; ++r) {
      const std::uint8_t* rec = buf.data() + r * kRecord;
      if (rec[0] >= 10) {
        throw FormatError("cifar10: label " + std::to_string(rec[0]) +
                          " out of range in " + path);
      }
      ds.labels.push_back(rec[0]);
      ds.pixels.insert(ds.pixels.end(), rec + 1, rec + kRecord);
    }
  }
  ds.validate();
  return ds;
}

}  // namespace

Cifar10 load_cifar10_binary(const std::string& dir) {
  std::vector<std::string> train_paths;
  for (int i = 1; i <= 5; ++i) {
    train_paths.push_back(dir + "/data_batch_" + std::to_string(i) + ".bin");
  }
  Cifar10 out;
  out.train = load_cifar_files(train_paths);
  out.test = load_cifar_files({dir + "/test_batch.bin"});
  return out;
}

std::vector<std::uint8_t> encode_cifar10_record(const LabeledDataset& ds,
                                                std::size_t index) {
  if (index >= ds.size()) throw ShapeError("cifar10: record index out of range");
  std::vector<std::uint8_t> rec;
  rec.reserve(1 + ds.image_bytes());
  rec.push_back(ds.labels[index]);
  const std::uint8_t* src = ds.pixels.data() + index * ds.image_bytes();
  rec.insert(rec.end(), src, src + ds.image_bytes());
  return rec;
}

Tensor DatasetView::batch(const std::vector<std::size_t>& local) const {
  if (!ds) throw ContractError("DatasetView: empty view");
  std::vector<std::size_t> global(local.size());
  for (std::size_t i = 0; i < local.size(); ++i) {
    if (local[i] >= indices.size()) {
      throw ShapeError("DatasetView: index out of range");
    }
    global[i] = indices[local[i]];
  }
  return ds->gather(global);
}

std::size_t DatasetView::label(std::size_t local) const {
  if (!ds) throw ContractError("DatasetView: empty view");
  if (local >= indices.size()) throw ShapeError("DatasetView: index out of range");
  return ds->label_of(indices[local]);
}

SplitResult stratified_split(const LabeledDataset& ds, const SplitSpec& spec) {
  ds.validate();
  const std::size_t L = ds.num_classes;
  std::vector<std::vector<std::size_t>> by_class(L);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);

  // Validation is stratified too; when the size does not divide evenly the
  // remainder goes to the lowest class indices.
  std::vector<std::size_t> val_per_class(L, spec.validation_size / L);
  for (std::size_t c = 0; c < spec.validation_size % L; ++c) ++val_per_class[c];

  for (std::size_t c = 0; c < L; ++c) {
    if (spec.labels_per_class + val_per_class[c] > by_class[c].size()) {
      throw ConfigError(
          "split: class " + std::to_string(c) + " has " +
          std::to_string(by_class[c].size()) + " samples, needs " +
          std::to_string(spec.labels_per_class + val_per_class[c]));
    }
  }

  RngStream rng = RngStream::derive(spec.seed, "split");
  SplitResult out;
  out.labeled.ds = &ds;
  out.validation.ds = &ds;
  std::vector<std::size_t> unlabeled_idx;
  for (std::size_t c = 0; c < L; ++c) {
    std::vector<std::size_t>& pool = by_class[c];
    rng.shuffle(pool);
    std::size_t k = 0;
    for (; k < spec.labels_per_class; ++k) out.labeled.indices.push_back(pool[k]);
    for (; k < spec.labels_per_class + val_per_class[c]; ++k) {
      out.validation.indices.push_back(pool[k]);
    }
    for (; k < pool.size(); ++k) unlabeled_idx.push_back(pool[k]);
  }
  out.unlabeled = UnlabeledView(&ds, std::move(unlabeled_idx));
  return out;
}

}  // namespace simple
