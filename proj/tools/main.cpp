// Command-line driver: train / eval / ablate / verify.
// Exit codes: 0 success, 1 config error, 2 runtime failure, 3 property
// violation.

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "simple/checkpoint.hpp"
#include "simple/config.hpp"
#include "simple/errors.hpp"
#include "simple/manifest.hpp"
#include "simple/selfcheck.hpp"
#include "simple/trainer.hpp"

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string now_iso8601() {
  const std::time_t t = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

// Flag overrides; unset fields keep the preset/file value.
struct Overrides {
  std::optional<double> tau_c, tau_s, lambda_u, lambda_p, lr, temperature,
      ema_decay, momentum, weight_decay, cosine_rate;
  std::optional<std::uint64_t> seed, total_steps, eval_every;
  std::optional<std::size_t> batch_size, k_weak, k_strong, labels_per_class,
      validation_size, image_size;
  std::optional<std::string> optimizer, dataset, data_dir;
  std::optional<bool> eval_test;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--tau-c", o.tau_c, "confidence threshold, (0,1]");
  cmd->add_option("--tau-s", o.tau_s, "similarity threshold, (0,1]");
  cmd->add_option("--lambda-u", o.lambda_u, "unsupervised loss weight");
  cmd->add_option("--lambda-p", o.lambda_p, "pair loss weight");
  cmd->add_option("--lr", o.lr, "base learning rate");
  cmd->add_option("--temperature", o.temperature, "sharpening temperature");
  cmd->add_option("--ema-decay", o.ema_decay, "EMA decay per step");
  cmd->add_option("--momentum", o.momentum, "SGD momentum");
  cmd->add_option("--weight-decay", o.weight_decay, "decoupled weight decay");
  cmd->add_option("--cosine-rate", o.cosine_rate, "cosine schedule rate");
  cmd->add_option("--seed", o.seed, "run seed");
  cmd->add_option("--total-steps", o.total_steps, "training steps");
  cmd->add_option("--eval-every", o.eval_every, "evaluation period in steps");
  cmd->add_option("--batch-size", o.batch_size, "labeled/unlabeled batch size");
  cmd->add_option("--k-weak", o.k_weak, "weak views per unlabeled image");
  cmd->add_option("--k-strong", o.k_strong, "strong views per unlabeled image");
  cmd->add_option("--labels-per-class", o.labels_per_class,
                  "labeled examples per class");
  cmd->add_option("--validation-size", o.validation_size,
                  "validation rows held out of train");
  cmd->add_option("--image-size", o.image_size, "square image side");
  cmd->add_option("--optimizer", o.optimizer, "sgd_nesterov or adamw");
  cmd->add_option("--dataset", o.dataset, "toy or cifar10");
  cmd->add_option("--data-dir", o.data_dir, "cifar10 binary batches directory");
  cmd->add_option("--eval-test", o.eval_test, "also evaluate the test split");
}

// Pure resolution: preset, then file keys, then flags.
simple::TrainConfig resolve_config(const std::string& preset,
                                   const std::string& config_path,
                                   const Overrides& o) {
  simple::TrainConfig cfg = simple::preset_config(preset);
  if (!config_path.empty()) cfg = simple::load_config_file(config_path, cfg);
  if (o.tau_c) cfg.tau_c = *o.tau_c;
  if (o.tau_s) cfg.tau_s = *o.tau_s;
  if (o.lambda_u) cfg.lambda_u = *o.lambda_u;
  if (o.lambda_p) cfg.lambda_p = *o.lambda_p;
  if (o.lr) cfg.lr = *o.lr;
  if (o.temperature) cfg.temperature = *o.temperature;
  if (o.ema_decay) cfg.ema_decay = *o.ema_decay;
  if (o.momentum) cfg.momentum = *o.momentum;
  if (o.weight_decay) cfg.weight_decay = *o.weight_decay;
  if (o.cosine_rate) cfg.cosine_rate = *o.cosine_rate;
  if (o.seed) cfg.seed = *o.seed;
  if (o.total_steps) cfg.total_steps = *o.total_steps;
  if (o.eval_every) cfg.eval_every = *o.eval_every;
  if (o.batch_size) cfg.batch_size = *o.batch_size;
  if (o.k_weak) cfg.k_weak = *o.k_weak;
  if (o.k_strong) cfg.k_strong = *o.k_strong;
  if (o.labels_per_class) cfg.labels_per_class = *o.labels_per_class;
  if (o.validation_size) cfg.validation_size = *o.validation_size;
  if (o.image_size) cfg.image_size = *o.image_size;
  if (o.optimizer) cfg.optimizer = *o.optimizer;
  if (o.dataset) cfg.dataset = *o.dataset;
  if (o.data_dir) cfg.data_dir = *o.data_dir;
  if (o.eval_test) cfg.eval_test = *o.eval_test;
  cfg.validate();
  return cfg;
}

void write_run_manifest(const std::string& dir, const simple::TrainConfig& cfg,
                        const std::string& started,
                        const std::string& finished) {
  simple::RunManifest m;
  m.config = cfg;
  m.tool_version = kToolVersion;
  m.started_at = started;
  m.finished_at = finished;
  simple::save_manifest(dir + "/manifest.json", m);
}

std::string acc_str(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

int cmd_train(const simple::TrainConfig& cfg, const std::string& out_dir,
              const std::string& resume_path, std::uint64_t stop_after) {
  std::filesystem::create_directories(out_dir);
  const std::string started = now_iso8601();
  write_run_manifest(out_dir, cfg, started, "");

  std::unique_ptr<simple::RunData> data = simple::load_run_data(cfg);
  std::optional<simple::Checkpoint> resume;
  if (!resume_path.empty()) resume = simple::load_checkpoint(resume_path);

  simple::RunOutputs outs{out_dir + "/metrics.csv", out_dir + "/checkpoints"};
  simple::RunResult r = simple::run_training(cfg, *data, outs,
                                             resume ? &*resume : nullptr,
                                             stop_after);
  write_run_manifest(out_dir, cfg, started, now_iso8601());

  const std::string best_val =
      r.best.val_acc >= 0.0 ? acc_str(r.best.val_acc) : "nan";
  const std::string test =
      r.best_test_acc ? acc_str(*r.best_test_acc) : "nan";
  const std::uint64_t conv =
      r.history.empty() ? r.best.step : simple::convergence_step(r.history);
  std::printf("best_val=%s test=%s convergence_step=%llu\n", best_val.c_str(),
              test.c_str(), static_cast<unsigned long long>(conv));
  return 0;
}

int cmd_eval(const simple::TrainConfig& cfg, const std::string& ckpt_path) {
  const simple::Checkpoint ck = simple::load_checkpoint(ckpt_path);
  std::unique_ptr<simple::RunData> data = simple::load_run_data(cfg);
  simple::ModelState st = simple::model_from_checkpoint(
      cfg, data->train.channels, data->train.num_classes, ck);
  const double val = simple::evaluate(st.bcfg, st.ema, data->validation);
  const double test = simple::evaluate(st.bcfg, st.ema, data->test_view);
  std::printf("step=%llu val_acc=%s test_acc=%s\n",
              static_cast<unsigned long long>(st.step), acc_str(val).c_str(),
              acc_str(test).c_str());
  return 0;
}

struct CellResult {
  double best_val_mean = 0.0, best_val_std = 0.0;
  double test_mean = 0.0, test_std = 0.0;
  double convergence_mean = 0.0;
};

void mean_std(const std::vector<double>& xs, double& mean, double& stddev) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) {
    stddev = std::nan("");
    return;
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

int cmd_ablate(const simple::TrainConfig& base, const std::string& out_dir,
               std::vector<double> grid_lambda_p, std::vector<double> grid_tau_c,
               std::vector<double> grid_tau_s, std::vector<std::size_t> grid_k,
               std::size_t seeds) {
  if (grid_lambda_p.empty() && grid_tau_c.empty() && grid_tau_s.empty() &&
      grid_k.empty()) {
    throw simple::ConfigError(
        "ablate: empty grid; pass at least one of --grid-lambda-p, "
        "--grid-tau-c, --grid-tau-s, --grid-k");
  }
  if (seeds == 0) throw simple::ConfigError("ablate: --seeds must be positive");
  // An absent axis contributes the base value as its only cell.
  if (grid_lambda_p.empty()) grid_lambda_p.push_back(base.lambda_p);
  if (grid_tau_c.empty()) grid_tau_c.push_back(base.tau_c);
  if (grid_tau_s.empty()) grid_tau_s.push_back(base.tau_s);
  if (grid_k.empty()) grid_k.push_back(base.k_weak);

  std::filesystem::create_directories(out_dir);
  std::ofstream table(out_dir + "/ablation.csv", std::ios::trunc);
  if (!table) throw simple::IoError("cannot write ablation table");
  table << "lambda_p,tau_c,tau_s,k_weak,seeds,best_val_mean,best_val_std,"
           "test_mean,test_std,convergence_mean\n";
  table.flush();

  for (double lp : grid_lambda_p) {
    for (double tc : grid_tau_c) {
      for (double ts : grid_tau_s) {
        for (std::size_t k : grid_k) {
          std::vector<double> vals, tests, convs;
          for (std::size_t si = 0; si < seeds; ++si) {
            simple::TrainConfig cfg = base;
            cfg.lambda_p = lp;
            cfg.tau_c = tc;
            cfg.tau_s = ts;
            cfg.k_weak = k;
            cfg.seed = base.seed + si;
            cfg.validate();

            char cell[160];
            std::snprintf(cell, sizeof cell,
                          "%s/lp%g_tc%g_ts%g_k%zu/seed%llu", out_dir.c_str(),
                          lp, tc, ts, k,
                          static_cast<unsigned long long>(cfg.seed));
            std::filesystem::create_directories(cell);
            write_run_manifest(cell, cfg, now_iso8601(), "");
            std::unique_ptr<simple::RunData> data = simple::load_run_data(cfg);
            // Per-cell metrics only; checkpoints would swamp the grid.
            simple::RunOutputs outs{std::string(cell) + "/metrics.csv", ""};
            simple::RunResult r = simple::run_training(cfg, *data, outs);
            write_run_manifest(cell, cfg, now_iso8601(), now_iso8601());
            vals.push_back(r.best.val_acc);
            tests.push_back(r.best_test_acc ? *r.best_test_acc
                                            : std::nan(""));
            convs.push_back(
                static_cast<double>(simple::convergence_step(r.history)));
          }
          CellResult c;
          mean_std(vals, c.best_val_mean, c.best_val_std);
          mean_std(tests, c.test_mean, c.test_std);
          double ignored;
          mean_std(convs, c.convergence_mean, ignored);
          char row[256];
          std::snprintf(row, sizeof row,
                        "%.17g,%.17g,%.17g,%zu,%zu,%.6f,%.6f,%.6f,%.6f,%.1f",
                        lp, tc, ts, k, seeds, c.best_val_mean, c.best_val_std,
                        c.test_mean, c.test_std, c.convergence_mean);
          table << row << "\n";
          table.flush();
          std::printf("cell lambda_p=%g tau_c=%g tau_s=%g k=%zu: "
                      "best_val=%.4f +- %.4f\n",
                      lp, tc, ts, k, c.best_val_mean, c.best_val_std);
        }
      }
    }
  }
  return 0;
}

int cmd_verify(const simple::PropertyOptions& opt) {
  const std::vector<simple::PropertyResult> results =
      simple::run_property_suites(opt);
  bool all = true;
  for (const auto& r : results) {
    std::printf("%s %s (%llu cases): %s\n", r.passed ? "PASS" : "FAIL",
                r.family.c_str(), static_cast<unsigned long long>(r.cases),
                r.detail.c_str());
    all = all && r.passed;
  }
  return all ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semi-supervised image classifier with augmentation anchoring "
               "and pair loss"};
  app.require_subcommand(1);

  std::string config_path, preset = "toy", out_dir = "run";
  Overrides o;

  auto* train = app.add_subcommand("train", "run the training loop");
  train->add_option("--config", config_path, "JSON config file");
  train->add_option("--preset", preset, "base preset: toy or cifar10");
  train->add_option("--out", out_dir, "output directory");
  std::string resume_path;
  std::uint64_t stop_after = 0;
  train->add_option("--resume", resume_path, "checkpoint to continue from");
  train->add_option("--stop-after", stop_after,
                    "stop once this step completes (testing hook)");
  add_override_flags(train, o);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--config", config_path, "JSON config file");
  eval->add_option("--preset", preset, "base preset: toy or cifar10");
  std::string ckpt_path;
  eval->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  add_override_flags(eval, o);

  auto* ablate = app.add_subcommand("ablate", "run a threshold/weight grid");
  ablate->add_option("--config", config_path, "JSON config file");
  ablate->add_option("--preset", preset, "base preset: toy or cifar10");
  ablate->add_option("--out", out_dir, "output directory");
  std::vector<double> grid_lambda_p, grid_tau_c, grid_tau_s;
  std::vector<std::size_t> grid_k;
  std::size_t seeds = 3;
  ablate->add_option("--grid-lambda-p", grid_lambda_p,
                     "pair-loss weights to sweep")->delimiter(',');
  ablate->add_option("--grid-tau-c", grid_tau_c,
                     "confidence thresholds to sweep")->delimiter(',');
  ablate->add_option("--grid-tau-s", grid_tau_s,
                     "similarity thresholds to sweep")->delimiter(',');
  ablate->add_option("--grid-k", grid_k, "weak view counts to sweep")
      ->delimiter(',');
  ablate->add_option("--seeds", seeds, "seeds per cell (base seed + i)");
  add_override_flags(ablate, o);

  auto* verify = app.add_subcommand("verify", "run the property suites");
  simple::PropertyOptions popt;
  verify->add_option("--samples", popt.theorem_samples,
                     "random simplex pairs for the bound suite");
  verify->add_option("--pair-batches", popt.pair_batches,
                     "random batches for the pair-loss oracle");
  verify->add_option("--gradcheck-seeds", popt.gradcheck_seeds,
                     "finite-difference seeds");
  verify->add_option("--check-seed", popt.seed, "property suite seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (verify->parsed()) return cmd_verify(popt);
    const simple::TrainConfig cfg = resolve_config(preset, config_path, o);
    if (train->parsed()) return cmd_train(cfg, out_dir, resume_path, stop_after);
    if (eval->parsed()) return cmd_eval(cfg, ckpt_path);
    if (ablate->parsed()) {
      return cmd_ablate(cfg, out_dir, grid_lambda_p, grid_tau_c, grid_tau_s,
                        grid_k, seeds);
    }
  } catch (const simple::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
