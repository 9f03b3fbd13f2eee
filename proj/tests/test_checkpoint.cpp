#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include "simple/checkpoint.hpp"
#include "simple/errors.hpp"
#include "simple/tensor.hpp"

#include "test_support.hpp"

using namespace simple;
namespace fs = std::filesystem;

namespace {

Checkpoint sample_checkpoint() {
  Checkpoint ck;
  ck.config_digest = 0xDEADBEEFCAFE1234ull;
  ck.step = 417;
  // values that stress the encoding: signed zero, denormal, non-dyadic
  ck.params.add("w", Tensor::from({2, 2}, {0.1, -0.0, 5e-324, -1.5}));
  ck.params.add("b", Tensor::from({3}, {0.0, 1e300, -2.5e-10}));
  ck.ema.add("w", Tensor::from({2, 2}, {0.1000000001, 0.0, 2.0, 4.0}));
  ck.ema.add("b", Tensor::from({3}, {1.0 / 3.0, 2.0 / 3.0, 1.0}));
  ck.opt_state.push_back({"velocity/w", {0.25, -0.5, 0.75, 1.0}});
  ck.opt_state.push_back({"velocity/b", {-0.125, 0.0, 3.0}});
  ck.rng_streams.push_back({"init", 12345, 678});
  ck.rng_streams.push_back({"strong_aug", 999, 0});
  return ck;
}

}  // namespace

TEST_CASE("checkpoints round-trip bitwise") {
  const fs::path dir = testsupport::fresh_dir("ckpt");
  const std::string p = (dir / "a.ckpt").string();
  const Checkpoint ck = sample_checkpoint();
  save_checkpoint(p, ck);
  const Checkpoint back = load_checkpoint(p);

  CHECK(back.config_digest == ck.config_digest);
  CHECK(back.step == ck.step);
  REQUIRE(back.params.count() == 2);
  REQUIRE(back.ema.count() == 2);
  for (std::size_t i = 0; i < ck.params.count(); ++i) {
    const auto& a = ck.params.items()[i];
    const auto& b = back.params.items()[i];
    CHECK(a.name == b.name);
    CHECK(a.value.shape() == b.value.shape());
    REQUIRE(a.value.size() == b.value.size());
    for (std::size_t e = 0; e < a.value.size(); ++e) {
      // bit equality, not ==: distinguishes -0.0 from 0.0
      CHECK(std::signbit(a.value.at(e)) == std::signbit(b.value.at(e)));
      CHECK(a.value.at(e) == b.value.at(e));
    }
  }
  REQUIRE(back.opt_state.size() == 2);
  CHECK(back.opt_state[0].name == "velocity/w");
  CHECK(back.opt_state[0].values == ck.opt_state[0].values);
  CHECK(back.opt_state[1].values == ck.opt_state[1].values);
  REQUIRE(back.rng_streams.size() == 2);
  CHECK(back.rng_streams[0].name == "init");
  CHECK(back.rng_streams[0].key == 12345);
  CHECK(back.rng_streams[0].counter == 678);
  CHECK(back.rng_streams[1].name == "strong_aug");

  // saving again produces identical bytes
  const std::string p2 = (dir / "b.ckpt").string();
  save_checkpoint(p2, back);
  std::ifstream f1(p, std::ios::binary), f2(p2, std::ios::binary);
  const std::vector<char> b1((std::istreambuf_iterator<char>(f1)), {});
  const std::vector<char> b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
  fs::remove_all(dir);
}

TEST_CASE("checkpoint loader rejects damaged files") {
  const fs::path dir = testsupport::fresh_dir("ckpt_bad");
  const std::string good = (dir / "good.ckpt").string();
  save_checkpoint(good, sample_checkpoint());

  CHECK_THROWS_AS(load_checkpoint((dir / "missing.ckpt").string()), IoError);

  std::ifstream in(good, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
  in.close();
  REQUIRE(bytes.size() > 64);

  auto write_bytes = [&](const std::string& path, const std::vector<char>& b) {
    std::ofstream out(path, std::ios::binary);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
  };

  // bad magic
  std::vector<char> bad = bytes;
  bad[0] = 'X';
  write_bytes((dir / "magic.ckpt").string(), bad);
  CHECK_THROWS_AS(load_checkpoint((dir / "magic.ckpt").string()), FormatError);

  // unsupported version (little-endian u32 right after the 8-byte magic)
  bad = bytes;
  bad[8] = 99;
  write_bytes((dir / "ver.ckpt").string(), bad);
  CHECK_THROWS_AS(load_checkpoint((dir / "ver.ckpt").string()), FormatError);

  // truncation at several depths
  for (std::size_t keep :
       {std::size_t{12}, std::size_t{40}, bytes.size() - 1}) {
    std::vector<char> cut(bytes.begin(),
                          bytes.begin() + static_cast<std::ptrdiff_t>(keep));
    write_bytes((dir / "cut.ckpt").string(), cut);
    CHECK_THROWS_AS(load_checkpoint((dir / "cut.ckpt").string()), FormatError);
  }

  // trailing garbage
  bad = bytes;
  bad.push_back(0);
  write_bytes((dir / "tail.ckpt").string(), bad);
  CHECK_THROWS_AS(load_checkpoint((dir / "tail.ckpt").string()), FormatError);

  // the pristine file still loads
  CHECK(load_checkpoint(good).step == 417);
  fs::remove_all(dir);
}
