#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simple/nn.hpp"

namespace simple {

struct RngCounterEntry {
  std::string name;
  std::uint64_t key = 0;
  std::uint64_t counter = 0;
};

struct OptBufferEntry {
  std::string name;
  std::vector<double> values;
};

// Everything needed to continue a run exactly: model, EMA shadow, optimizer
// buffers, and per-stream RNG positions. config_digest ties the file to the
// producing configuration; loaders reject a mismatch unless told otherwise.
struct Checkpoint {
  std::uint64_t config_digest = 0;
  std::uint64_t step = 0;
  ParamSet params;
  ParamSet ema;
  std::vector<OptBufferEntry> opt_state;
  std::vector<RngCounterEntry> rng_streams;
};

// Byte layout is documented in docs/checkpoint_format.md. All integers and
// doubles are little-endian regardless of host order.
void save_checkpoint(const std::string& path, const Checkpoint& ck);

// Throws IoError if the file cannot be read, FormatError on bad magic,
// unsupported version, or truncation.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace simple
