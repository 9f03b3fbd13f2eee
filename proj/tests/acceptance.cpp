// Acceptance gate: every release criterion as one pass/fail line, with the
// pinned tolerances and time budgets printed next to what was measured.
// Exits nonzero when any line fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "simple/checkpoint.hpp"
#include "simple/config.hpp"
#include "simple/dataset.hpp"
#include "simple/rng.hpp"
#include "simple/selfcheck.hpp"
#include "simple/trainer.hpp"

#include "test_support.hpp"

using namespace simple;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

template <typename F>
void criterion(int id, const std::string& title, double limit_s, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double dt = seconds_since(t0);
  const bool timely = limit_s <= 0.0 || dt <= limit_s;
  const bool pass = o.pass && timely;
  if (!pass) ++g_failures;
  std::string timing = limit_s > 0.0
                           ? (std::to_string(dt).substr(0, 5) + "s of " +
                              std::to_string(limit_s).substr(0, 5) + "s budget")
                           : (std::to_string(dt).substr(0, 5) + "s");
  std::printf("%s %2d %s [%s]%s%s\n", pass ? "PASS" : "FAIL", id, title.c_str(),
              timing.c_str(), o.detail.empty() ? "" : ": ",
              o.detail.c_str());
  if (o.pass && !timely) {
    std::printf("        over time budget: %.1fs > %.1fs\n", dt, limit_s);
  }
  std::fflush(stdout);
}

Outcome from_property(const PropertyResult& r) {
  Outcome o;
  o.pass = r.passed;
  o.detail = std::to_string(r.cases) + " checks; " + r.detail;
  return o;
}

bool same_bytes(const std::string& a, const std::string& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  const std::vector<char> ba((std::istreambuf_iterator<char>(fa)), {});
  const std::vector<char> bb((std::istreambuf_iterator<char>(fb)), {});
  return !ba.empty() && ba == bb;
}

bool bitwise_equal_sets(const ParamSet& a, const ParamSet& b) {
  if (a.count() != b.count()) return false;
  for (std::size_t i = 0; i < a.count(); ++i) {
    if (a.items()[i].name != b.items()[i].name) return false;
    if (a.items()[i].value.data() != b.items()[i].value.data()) return false;
  }
  return true;
}

// ---- criterion 4: zero-weight run equals the supervised reference ----

Outcome check_zero_weight_equivalence() {
  TrainConfig cfg = preset_config("toy");
  cfg.lambda_u = 0.0;
  cfg.lambda_p = 0.0;
  cfg.total_steps = 100;
  cfg.eval_every = 50;
  cfg.eval_test = false;
  cfg.validate();
  const auto data = load_run_data(cfg);

  const std::string dir = testsupport::fresh_dir("acc_zero");
  auto run_to = [&](std::uint64_t stop) {
    RunOutputs out;
    out.checkpoint_dir = dir;
    run_training(cfg, *data, out, nullptr, stop);
    return load_checkpoint(dir + "/last.ckpt");
  };

  for (std::uint64_t steps : {std::uint64_t{50}, std::uint64_t{100}}) {
    const Checkpoint ck = run_to(steps == 100 ? 0 : steps);
    const ModelState ref = run_supervised_reference(cfg, *data, steps);
    if (ck.step != steps) {
      return {false, "checkpoint stopped at step " + std::to_string(ck.step)};
    }
    if (!bitwise_equal_sets(ck.params, ref.params)) {
      return {false, "parameters diverge at step " + std::to_string(steps)};
    }
    if (!bitwise_equal_sets(ck.ema, ref.ema)) {
      return {false, "ema shadow diverges at step " + std::to_string(steps)};
    }
  }
  fs::remove_all(dir);
  return {true, "parameters and ema bitwise equal at steps 50 and 100"};
}

// ---- criterion 5: toy preset reruns are byte-identical ----

Outcome check_toy_determinism() {
  const TrainConfig cfg = preset_config("toy");
  const auto data = load_run_data(cfg);
  const std::string d1 = testsupport::fresh_dir("acc_det1");
  const std::string d2 = testsupport::fresh_dir("acc_det2");
  for (const std::string& d : {d1, d2}) {
    RunOutputs out;
    out.metrics_csv = d + "/metrics.csv";
    out.checkpoint_dir = d + "/ckpt";
    run_training(cfg, *data, out);
  }
  const bool csv_same = same_bytes(d1 + "/metrics.csv", d2 + "/metrics.csv");
  const bool ckpt_same =
      same_bytes(d1 + "/ckpt/last.ckpt", d2 + "/ckpt/last.ckpt");
  fs::remove_all(d1);
  fs::remove_all(d2);
  if (!csv_same) return {false, "metrics CSVs differ between identical runs"};
  if (!ckpt_same) return {false, "final checkpoints differ between identical runs"};
  return {true, "metrics CSV and final checkpoint byte-identical across reruns"};
}

// ---- criteria 6 and 7: the toy benchmark ----

struct BenchRun {
  double best_val = 0.0;
  double final_high_conf = -1.0;
  double final_pair_pass = -1.0;
};

struct BenchResults {
  std::vector<BenchRun> full, ablated, supervised;
  double mean_full = 0.0, mean_abl = 0.0, mean_sup = 0.0;
  std::string detail;
};

BenchRun bench_run(TrainConfig cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.validate();
  const auto data = load_run_data(cfg);
  const RunResult r = run_training(cfg, *data, RunOutputs{});
  BenchRun out;
  out.best_val = r.best.val_acc;
  if (!r.history.empty()) {
    const MetricsRow& last = r.history.back();
    if (last.high_conf_ratio) out.final_high_conf = *last.high_conf_ratio;
    if (last.pair_pass_ratio) out.final_pair_pass = *last.pair_pass_ratio;
  }
  return out;
}

BenchResults run_toy_benchmark(const std::vector<std::uint64_t>& seeds) {
  BenchResults b;
  TrainConfig full = preset_config("toy");
  TrainConfig abl = full;
  abl.lambda_p = 0.0;
  TrainConfig sup = full;
  sup.lambda_u = 0.0;
  sup.lambda_p = 0.0;
  auto mean = [](const std::vector<BenchRun>& v) {
    double s = 0.0;
    for (const auto& r : v) s += r.best_val;
    return s / static_cast<double>(v.size());
  };
  for (std::uint64_t s : seeds) {
    b.full.push_back(bench_run(full, s));
    b.ablated.push_back(bench_run(abl, s));
    b.supervised.push_back(bench_run(sup, s));
  }
  b.mean_full = mean(b.full);
  b.mean_abl = mean(b.ablated);
  b.mean_sup = mean(b.supervised);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "mean best val: full %.4f, lambda_p=0 %.4f, supervised %.4f",
                b.mean_full, b.mean_abl, b.mean_sup);
  b.detail = buf;
  return b;
}

// ---- criterion 10: full-size CIFAR-10 binary round-trip ----

std::uint8_t cifar_byte(std::uint64_t file, std::uint64_t record,
                        std::uint64_t offset) {
  return static_cast<std::uint8_t>(
      mix64(file << 40, (record << 16) ^ offset) & 0xFF);
}

std::uint8_t cifar_label(std::uint64_t file, std::uint64_t record) {
  return static_cast<std::uint8_t>(mix64(file << 24, record ^ 0x1abe1) % 10);
}

void write_cifar_split(const std::string& path, std::uint64_t file_id,
                       std::size_t records) {
  std::vector<std::uint8_t> buf;
  buf.reserve(records * 3073);
  for (std::size_t r = 0; r < records; ++r) {
    buf.push_back(cifar_label(file_id, r));
    for (std::uint64_t i = 0; i < 3072; ++i) {
      buf.push_back(cifar_byte(file_id, r, i));
    }
  }
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
}

Outcome check_cifar_loader() {
  const std::string dir = testsupport::fresh_dir("acc_cifar");
  for (std::uint64_t f = 1; f <= 5; ++f) {
    write_cifar_split(dir + "/data_batch_" + std::to_string(f) + ".bin", f,
                      10000);
  }
  write_cifar_split(dir + "/test_batch.bin", 0, 10000);

  const Cifar10 c = load_cifar10_binary(dir);
  if (c.train.size() != 50000) {
    return {false, "train count " + std::to_string(c.train.size())};
  }
  if (c.test.size() != 10000) {
    return {false, "test count " + std::to_string(c.test.size())};
  }
  c.train.validate();
  c.test.validate();

  // spot round-trips against the generating formula, spread over all files
  RngStream pick = RngStream::derive(77, "cifar_pick");
  std::size_t checked = 0;
  for (int k = 0; k < 200; ++k) {
    const bool test_split = (k % 4 == 0);
    const LabeledDataset& ds = test_split ? c.test : c.train;
    const std::size_t r = pick.uniform_int(ds.size());
    const std::uint64_t file_id = test_split ? 0 : r / 10000 + 1;
    const std::uint64_t local = test_split ? r : r % 10000;
    const std::vector<std::uint8_t> enc = encode_cifar10_record(ds, r);
    if (enc.size() != 3073) return {false, "record is not 3073 bytes"};
    if (enc[0] != cifar_label(file_id, local)) {
      return {false, "label mismatch at record " + std::to_string(r)};
    }
    for (std::uint64_t i = 0; i < 3072; ++i) {
      if (enc[1 + i] != cifar_byte(file_id, local, i)) {
        return {false, "byte mismatch at record " + std::to_string(r) +
                           " offset " + std::to_string(i)};
      }
    }
    ++checked;
  }
  fs::remove_all(dir);
  return {true, "50000 train + 10000 test records; " +
                    std::to_string(checked) + " records re-encoded bitwise"};
}

}  // namespace

int main() {
  const PropertyOptions opt;

  criterion(1, "confidence bound theorem on random simplex pairs", 10.0, [&] {
    return from_property(check_theorem_bound(opt.theorem_samples, opt.seed));
  });

  criterion(2, "pair loss matches the exhaustive oracle within 1e-9", 30.0,
            [&] {
              return from_property(
                  check_pair_loss_oracle(opt.pair_batches, opt.seed));
            });

  criterion(3, "finite-difference gradient checks, 50 seeds", 120.0, [&] {
    return from_property(check_gradients(opt.gradcheck_seeds, opt.seed));
  });

  criterion(4, "zero-weight run equals the supervised reference bitwise", 0.0,
            [] { return check_zero_weight_equivalence(); });

  criterion(5, "toy preset reruns byte-identical", 0.0,
            [] { return check_toy_determinism(); });

  // criteria 6 and 7 share one benchmark: 3 seeds x {full, lambda_p=0,
  // supervised-only} on the toy preset
  BenchResults bench;
  criterion(6, "toy benchmark: +5pp over supervised, not behind lambda_p=0",
            900.0, [&] {
              bench = run_toy_benchmark({1, 2, 3});
              Outcome o;
              const bool beats_sup = bench.mean_full >= bench.mean_sup + 0.05;
              const bool not_behind = bench.mean_full >= bench.mean_abl;
              o.pass = beats_sup && not_behind;
              o.detail = bench.detail;
              if (!beats_sup) o.detail += "; fails the +5pp margin";
              if (!not_behind) o.detail += "; behind the lambda_p=0 ablation";
              return o;
            });

  criterion(7, "pair gates engage: final diagnostics not lower on 2 of 3 seeds",
            0.0, [&] {
              if (bench.full.empty()) {
                return Outcome{false, "benchmark did not run"};
              }
              int ok = 0;
              std::string per_seed;
              for (std::size_t i = 0; i < bench.full.size(); ++i) {
                const BenchRun& f = bench.full[i];
                const BenchRun& a = bench.ablated[i];
                const bool diag_present = f.final_high_conf >= 0.0 &&
                                          a.final_high_conf >= 0.0 &&
                                          f.final_pair_pass >= 0.0 &&
                                          a.final_pair_pass >= 0.0;
                const bool seed_ok = diag_present &&
                                     f.final_high_conf >= a.final_high_conf &&
                                     f.final_pair_pass >= a.final_pair_pass;
                ok += seed_ok ? 1 : 0;
                char buf[96];
                std::snprintf(buf, sizeof buf,
                              "%sseed%zu %s (hc %.3f vs %.3f, pp %.3f vs %.3f)",
                              i ? "; " : "", i + 1, seed_ok ? "ok" : "lower",
                              f.final_high_conf, a.final_high_conf,
                              f.final_pair_pass, a.final_pair_pass);
                per_seed += buf;
              }
              return Outcome{ok >= 2, per_seed};
            });

  criterion(8, "sharpening and similarity hand values", 0.0, [] {
    return from_property(check_sharpen_similarity_units());
  });

  criterion(9, "ema shadow matches the closed form after 1000 updates", 0.0,
            [] { return from_property(check_ema_closed_form()); });

  criterion(10, "cifar-10 binary loader: counts and record round-trip", 0.0,
            [] { return check_cifar_loader(); });

  if (g_failures == 0) {
    std::printf("acceptance: all criteria pass\n");
    return 0;
  }
  std::printf("acceptance: %d criteria failing\n", g_failures);
  return 1;
}
