#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simple/tensor.hpp"

namespace simple {

// Immutable labeled image store. Pixels are kept as bytes (the CIFAR-10
// native encoding; the toy renderer quantizes to match) and scaled to
// [0,1] doubles only when a batch is materialized, which keeps a full
// CIFAR-10 train split around 150MB instead of 1.2GB.
struct LabeledDataset {
  std::size_t num_classes = 0;
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;  // size() * channels*height*width, CHW planes
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t image_bytes() const { return channels * height * width; }
  void validate() const;

  // [n,c,h,w] tensor of the given records, each byte / 255.
  Tensor gather(const std::vector<std::size_t>& indices) const;
  std::size_t label_of(std::size_t index) const;
};

// Balanced procedural dataset: class k is a regular polygon with 3 + k/2
// sides, filled for even k and drawn as an outline ring for odd k, under
// random rotation, position, scale, fg/bg color, and pixel noise. All class
// distributions are mirror-symmetric, so horizontal flips never change the
// label. Rendering is 2x2 supersampled and bit-deterministic per seed.
LabeledDataset generate_toy_shapes(std::size_t num_classes,
                                   std::size_t n_per_class, std::size_t size,
                                   std::uint64_t seed);

struct Cifar10 {
  LabeledDataset train;  // 50000 records over data_batch_{1..5}.bin
  LabeledDataset test;   // 10000 records from test_batch.bin
};

// Standard binary format: 3073-byte records, 1 label byte then 3072 bytes of
// row-major R, G, B planes. Missing files raise IoError naming the path;
// a file size that is not a multiple of 3073 raises FormatError.
Cifar10 load_cifar10_binary(const std::string& dir);

// Re-serialize one record in the original byte layout (round-trip oracle).
std::vector<std::uint8_t> encode_cifar10_record(const LabeledDataset& ds,
                                                std::size_t index);

// Read-only index view of a dataset subset, with labels exposed.
struct DatasetView {
  const LabeledDataset* ds = nullptr;
  std::vector<std::size_t> indices;

  std::size_t size() const { return indices.size(); }
  Tensor batch(const std::vector<std::size_t>& local) const;
  std::size_t label(std::size_t local) const;
};

// Unlabeled subset. Labels survive only behind an explicitly named accessor
// so the training path cannot pick them up by accident; only the
// false-positive pair diagnostic reads them.
class UnlabeledView {
 public:
  UnlabeledView() = default;
  UnlabeledView(const LabeledDataset* ds, std::vector<std::size_t> indices)
      : view_{ds, std::move(indices)} {}

  std::size_t size() const { return view_.size(); }
  Tensor batch(const std::vector<std::size_t>& local) const {
    return view_.batch(local);
  }
  std::size_t truth_for_diagnostics(std::size_t local) const {
    return view_.label(local);
  }

 private:
  DatasetView view_;
};

struct SplitSpec {
  std::size_t labels_per_class = 0;
  std::size_t validation_size = 0;
  std::uint64_t seed = 0;
};

struct SplitResult {
  DatasetView labeled;
  UnlabeledView unlabeled;
  DatasetView validation;
};

// Class-stratified three-way partition: exactly labels_per_class labeled
// samples per class, a stratified validation block (remainder spread over
// the lowest class indices when not divisible), and the rest unlabeled. The
// three index sets are pairwise disjoint and deterministic per seed.
SplitResult stratified_split(const LabeledDataset& ds, const SplitSpec& spec);

}  // namespace simple
