#include "simple/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <deque>
#include <fstream>
#include <numeric>

#include "simple/errors.hpp"
#include "simple/ops.hpp"

namespace simple {

RunStreams RunStreams::derive(std::uint64_t seed) {
  RunStreams s;
  s.init = RngStream::derive(seed, "init");
  s.labeled_order = RngStream::derive(seed, "labeled_order");
  s.unlabeled_order = RngStream::derive(seed, "unlabeled_order");
  s.weak_labeled = RngStream::derive(seed, "weak_labeled");
  s.weak_unlabeled = RngStream::derive(seed, "weak_unlabeled");
  s.strong_aug = RngStream::derive(seed, "strong_aug");
  return s;
}

std::vector<RngCounterEntry> RunStreams::snapshot() const {
  return {
      {"init", init.key(), init.counter()},
      {"labeled_order", labeled_order.key(), labeled_order.counter()},
      {"unlabeled_order", unlabeled_order.key(), unlabeled_order.counter()},
      {"weak_labeled", weak_labeled.key(), weak_labeled.counter()},
      {"weak_unlabeled", weak_unlabeled.key(), weak_unlabeled.counter()},
      {"strong_aug", strong_aug.key(), strong_aug.counter()},
  };
}

void RunStreams::restore(const std::vector<RngCounterEntry>& entries) {
  auto apply = [&](const char* name, RngStream& s) {
    for (const auto& e : entries) {
      if (e.name == name) {
        if (e.key != s.key()) {
          throw FormatError(std::string("checkpoint rng stream \"") + name +
                            "\" has a different key (other seed?)");
        }
        s.set_counter(e.counter);
        return;
      }
    }
    throw FormatError(std::string("checkpoint is missing rng stream \"") + name + "\"");
  };
  apply("init", init);
  apply("labeled_order", labeled_order);
  apply("unlabeled_order", unlabeled_order);
  apply("weak_labeled", weak_labeled);
  apply("weak_unlabeled", weak_unlabeled);
  apply("strong_aug", strong_aug);
}

ModelState init_model(const BackboneConfig& bcfg, const OptimizerConfig& ocfg,
                      RngStream& init_stream) {
  bcfg.validate();
  ParamSet params = init_backbone(bcfg, init_stream);
  // Tensor copies share storage; the shadow needs its own so ema_update
  // does not write through into the raw parameters.
  ParamSet ema;
  for (const auto& p : params.items()) {
    ema.add(p.name, Tensor::from(p.value.shape(), p.value.data()));
  }
  return ModelState{bcfg, std::move(params), std::move(ema), Optimizer(ocfg), 0};
}

std::unique_ptr<RunData> load_run_data(const TrainConfig& cfg) {
  cfg.validate();
  auto data = std::make_unique<RunData>();
  if (cfg.dataset == "toy") {
    data->train = generate_toy_shapes(cfg.toy_classes, cfg.toy_per_class,
                                      cfg.image_size,
                                      mix64(cfg.seed, fnv1a64("toy_train")));
    data->test = generate_toy_shapes(cfg.toy_classes, cfg.toy_test_per_class,
                                     cfg.image_size,
                                     mix64(cfg.seed, fnv1a64("toy_test")));
  } else {
    if (cfg.image_size != 32) throw ConfigError("cifar10 images are 32x32");
    Cifar10 c = load_cifar10_binary(cfg.data_dir);
    data->train = std::move(c.train);
    data->test = std::move(c.test);
  }
  SplitResult split = stratified_split(
      data->train, SplitSpec{cfg.labels_per_class, cfg.validation_size, cfg.seed});
  data->labeled = std::move(split.labeled);
  data->validation = std::move(split.validation);
  data->unlabeled = std::move(split.unlabeled);
  std::vector<std::size_t> ti(data->test.size());
  std::iota(ti.begin(), ti.end(), std::size_t{0});
  data->test_view = DatasetView{&data->test, std::move(ti)};
  return data;
}

std::vector<std::size_t> cyclic_indices(std::uint64_t key, std::uint64_t start,
                                        std::size_t count, std::size_t n) {
  if (n == 0) throw ValueError("cyclic_indices: empty pool");
  std::vector<std::size_t> out(count);
  std::uint64_t epoch = start / n;
  std::vector<std::size_t> perm = keyed_permutation(key, epoch, n);
  for (std::size_t t = 0; t < count; ++t) {
    const std::uint64_t g = start + t;
    const std::uint64_t e = g / n;
    if (e != epoch) {
      epoch = e;
      perm = keyed_permutation(key, epoch, n);
    }
    out[t] = perm[static_cast<std::size_t>(g % n)];
  }
  return out;
}

ProbBatch one_hot(const std::vector<std::size_t>& classes,
                  std::size_t num_classes) {
  if (classes.empty()) throw ValueError("one_hot: empty batch");
  if (num_classes == 0) throw ValueError("one_hot: num_classes must be positive");
  std::vector<double> v(classes.size() * num_classes, 0.0);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] >= num_classes) {
      throw ValueError("one_hot: class index out of range");
    }
    v[i * num_classes + classes[i]] = 1.0;
  }
  return ProbBatch(
      Tensor::from({classes.size(), num_classes}, std::move(v)));
}

namespace {

Tensor concat_batch(const std::vector<Tensor>& parts) {
  if (parts.size() == 1) return parts[0];
  std::vector<std::size_t> shape = parts[0].shape();
  std::size_t rows = 0;
  std::vector<double> v;
  for (const Tensor& p : parts) {
    rows += p.shape()[0];
    v.insert(v.end(), p.data().begin(), p.data().end());
  }
  shape[0] = rows;
  return Tensor::from(std::move(shape), std::move(v));
}

ProbBatch replicate_rows(const ProbBatch& q, std::size_t times) {
  if (times == 1) return q;
  const auto& d = q.tensor().data();
  std::vector<double> v;
  v.reserve(d.size() * times);
  for (std::size_t t = 0; t < times; ++t) v.insert(v.end(), d.begin(), d.end());
  return ProbBatch(Tensor::from({q.rows() * times, q.classes()}, std::move(v)));
}

}  // namespace

LossBreakdown train_step(ModelState& st, RunStreams& streams,
                         const Tensor& labeled_images,
                         const ProbBatch& labeled_targets,
                         const Tensor& unlabeled_images,
                         const std::vector<std::size_t>* unlabeled_truth,
                         const TrainConfig& cfg, double lr) {
  if (labeled_images.ndim() != 4 ||
      labeled_images.shape()[0] != cfg.batch_size) {
    throw ShapeError("train_step: labeled batch size mismatch");
  }
  if (labeled_targets.rows() != cfg.batch_size) {
    throw ShapeError("train_step: label batch size mismatch");
  }
  const bool unsup = !(cfg.lambda_u == 0.0 && cfg.lambda_p == 0.0);
  if (unsup && (!unlabeled_images.defined() ||
                unlabeled_images.shape()[0] != cfg.batch_size)) {
    throw ShapeError("train_step: unlabeled batch size mismatch");
  }

  const WeakAugPolicy weak_policy{};
  const StrongAugPolicy strong_policy{};

  Tensor weak_l = weak_augment(labeled_images, weak_policy, streams.weak_labeled);

  std::optional<ProbBatch> pseudo;
  Tensor strong_all;
  if (unsup) {
    std::vector<Tensor> weak_views;
    weak_views.reserve(cfg.k_weak);
    for (std::size_t k = 0; k < cfg.k_weak; ++k) {
      weak_views.push_back(
          weak_augment(unlabeled_images, weak_policy, streams.weak_unlabeled));
    }
    pseudo.emplace(guess_labels(st.bcfg, st.ema, weak_views, cfg.temperature));
    std::vector<Tensor> strong_views;
    strong_views.reserve(cfg.k_strong);
    for (std::size_t k = 0; k < cfg.k_strong; ++k) {
      strong_views.push_back(
          strong_augment(unlabeled_images, strong_policy, streams.strong_aug));
    }
    strong_all = concat_batch(strong_views);
  }

  Tape tape;
  ParamSet w = watch_all(tape, st.params);
  Tensor probs_l = softmax_rows(backbone_forward(st.bcfg, w, weak_l));
  Tensor l_x = supervised_loss(labeled_targets, ProbBatch(probs_l));

  LossBreakdown lb;
  if (unsup) {
    ProbBatch rep = replicate_rows(*pseudo, cfg.k_strong);
    Tensor probs_u = softmax_rows(backbone_forward(st.bcfg, w, strong_all));
    ProbBatch preds_u(probs_u);
    Tensor l_u = unsupervised_loss(rep, preds_u, cfg.tau_c, st.bcfg.num_classes);
    bool degenerate = false;
    Tensor l_p = pair_loss(rep, preds_u, cfg.thresholds(), &degenerate);
    lb = total_loss(l_x, l_u, l_p, cfg.loss_weights());
    std::vector<std::size_t> rep_truth;
    const std::vector<std::size_t>* truth_ptr = nullptr;
    if (unlabeled_truth) {
      rep_truth.reserve(unlabeled_truth->size() * cfg.k_strong);
      for (std::size_t t = 0; t < cfg.k_strong; ++t) {
        rep_truth.insert(rep_truth.end(), unlabeled_truth->begin(),
                         unlabeled_truth->end());
      }
      truth_ptr = &rep_truth;
    }
    lb.diagnostics = pair_diagnostics(rep, cfg.thresholds(), truth_ptr);
    lb.diagnostics.degenerate_pair_batch |= degenerate;
  } else {
    lb.total = l_x;
    lb.l_x = l_x.item();
    lb.l_u = 0.0;
    lb.l_p = 0.0;
    lb.total_value = lb.l_x;
  }
  if (!std::isfinite(lb.total_value)) {
    throw ValueError("train_step: non-finite loss");
  }

  GradientMap g = backward(lb.total);
  std::vector<std::vector<double>> grads;
  grads.reserve(w.count());
  for (const Param& p : w.items()) grads.push_back(g.at(p.value));
  st.opt.step(st.params, grads, lr);
  ema_update(st.ema, st.params, cfg.ema_decay);
  ++st.step;
  return lb;
}

double evaluate(const BackboneConfig& bcfg, const ParamSet& model,
                const DatasetView& split, std::size_t eval_batch) {
  if (split.size() == 0) throw ValueError("evaluate: empty split");
  if (eval_batch == 0) throw ConfigError("evaluate: eval_batch must be positive");
  std::size_t correct = 0;
  for (std::size_t start = 0; start < split.size(); start += eval_batch) {
    const std::size_t nb = std::min(eval_batch, split.size() - start);
    std::vector<std::size_t> locals(nb);
    std::iota(locals.begin(), locals.end(), start);
    Tensor probs =
        softmax_rows(backbone_forward(bcfg, model, split.batch(locals)));
    const std::vector<std::size_t> pred = argmax_rows(probs);
    for (std::size_t i = 0; i < nb; ++i) {
      if (pred[i] == split.label(start + i)) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

std::uint64_t convergence_step(const std::vector<MetricsRow>& history) {
  if (history.empty()) throw ValueError("convergence_step: empty history");
  double peak = 0.0;
  for (const auto& r : history) peak = std::max(peak, r.val_acc);
  for (const auto& r : history) {
    if (r.val_acc >= 0.95 * peak) return r.step;
  }
  return history.back().step;  // unreachable: the peak row qualifies
}

std::string metrics_csv_header() {
  return "step,l_x,l_u,l_p,total,lr,val_acc,test_acc,high_conf_ratio,"
         "pair_pass_ratio,fp_pair_rate";
}

namespace {

void append_field(std::string& s, const std::optional<double>& v) {
  s.push_back(',');
  if (!v.has_value() || std::isnan(*v)) {
    s += "nan";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  s += buf;
}

}  // namespace

std::string format_metrics_row(const MetricsRow& r) {
  std::string s = std::to_string(r.step);
  append_field(s, r.l_x);
  append_field(s, r.l_u);
  append_field(s, r.l_p);
  append_field(s, r.total);
  append_field(s, r.lr);
  append_field(s, r.val_acc);
  append_field(s, r.test_acc);
  append_field(s, r.high_conf_ratio);
  append_field(s, r.pair_pass_ratio);
  append_field(s, r.fp_pair_rate);
  return s;
}

Checkpoint make_checkpoint(const ModelState& st, const RunStreams& streams,
                           std::uint64_t config_dig) {
  Checkpoint ck;
  ck.config_digest = config_dig;
  ck.step = st.step;
  ck.params = st.params;
  ck.ema = st.ema;
  std::vector<std::vector<double>> slots = st.opt.export_state();
  const bool adam = st.opt.config().kind == OptKind::adamw;
  std::size_t pi = 0;
  for (std::size_t i = 0; i < slots.size(); ++pi) {
    const std::string& pname = st.params.items()[pi].name;
    if (adam) {
      ck.opt_state.push_back({"m/" + pname, std::move(slots[i])});
      ck.opt_state.push_back({"v/" + pname, std::move(slots[i + 1])});
      i += 2;
    } else {
      ck.opt_state.push_back({"velocity/" + pname, std::move(slots[i])});
      i += 1;
    }
  }
  ck.rng_streams = streams.snapshot();
  return ck;
}

namespace {

// Applies a loaded checkpoint onto a freshly initialized state, verifying
// that names and shapes line up with the active configuration.
void restore_model(ModelState& st, const Checkpoint& ck) {
  auto apply_set = [](ParamSet& dst, const ParamSet& src, const char* what) {
    if (src.count() != dst.count()) {
      throw FormatError(std::string("resume: ") + what + " count mismatch");
    }
    for (const Param& p : src.items()) {
      dst.set(p.name, p.value);  // throws on unknown name or shape change
    }
  };
  apply_set(st.params, ck.params, "parameter");
  apply_set(st.ema, ck.ema, "ema parameter");

  const bool adam = st.opt.config().kind == OptKind::adamw;
  const std::size_t per = adam ? 2 : 1;
  if (!ck.opt_state.empty() &&
      ck.opt_state.size() != per * st.params.count()) {
    throw FormatError("resume: optimizer buffer count mismatch");
  }
  std::vector<std::vector<double>> slots;
  slots.reserve(ck.opt_state.size());
  for (std::size_t pi = 0; pi * per < ck.opt_state.size(); ++pi) {
    const std::string& pname = st.params.items()[pi].name;
    const auto& first = ck.opt_state[pi * per];
    if (adam) {
      const auto& second = ck.opt_state[pi * per + 1];
      if (first.name != "m/" + pname || second.name != "v/" + pname) {
        throw FormatError("resume: optimizer buffer names do not match parameters");
      }
      slots.push_back(first.values);
      slots.push_back(second.values);
    } else {
      if (first.name != "velocity/" + pname) {
        throw FormatError("resume: optimizer buffer names do not match parameters");
      }
      slots.push_back(first.values);
    }
  }
  st.opt.import_state(slots, ck.step);
  st.step = ck.step;
}

// Rolling window over the most recent kDiagWindow steps' per-batch ratios;
// evaluation rows report window means.
struct DiagWindow {
  static constexpr std::size_t kDiagWindow = 100;
  std::deque<PairDiagnostics> buf;

  void add(const PairDiagnostics& d) {
    buf.push_back(d);
    if (buf.size() > kDiagWindow) buf.pop_front();
  }
  void fill(MetricsRow& row) const {
    if (buf.empty()) return;
    double hi = 0.0, pass = 0.0, fp = 0.0;
    std::size_t nfp = 0;
    for (const auto& d : buf) {
      hi += d.high_conf_ratio;
      pass += d.pair_pass_ratio;
      if (d.false_positive_pair_rate) {
        fp += *d.false_positive_pair_rate;
        ++nfp;
      }
    }
    row.high_conf_ratio = hi / static_cast<double>(buf.size());
    row.pair_pass_ratio = pass / static_cast<double>(buf.size());
    if (nfp > 0) row.fp_pair_rate = fp / static_cast<double>(nfp);
  }
};

}  // namespace

ModelState model_from_checkpoint(const TrainConfig& cfg, std::size_t channels,
                                 std::size_t num_classes, const Checkpoint& ck) {
  cfg.validate();
  if (ck.config_digest != config_digest(cfg)) {
    throw ConfigError("checkpoint was produced by a different configuration");
  }
  RunStreams streams = RunStreams::derive(cfg.seed);
  ModelState st =
      init_model(cfg.backbone(channels, num_classes), cfg.optimizer_config(),
                 streams.init);
  restore_model(st, ck);
  return st;
}

RunResult run_training(const TrainConfig& cfg, const RunData& data,
                       const RunOutputs& out, const Checkpoint* resume,
                       std::uint64_t stop_after) {
  cfg.validate();
  const std::uint64_t digest = config_digest(cfg);
  RunStreams streams = RunStreams::derive(cfg.seed);
  BackboneConfig bcfg = cfg.backbone(data.train.channels, data.train.num_classes);
  ModelState st = init_model(bcfg, cfg.optimizer_config(), streams.init);
  if (resume) {
    if (resume->config_digest != digest) {
      throw ConfigError("resume: checkpoint was produced by a different configuration");
    }
    if (resume->step > cfg.total_steps) {
      throw ConfigError("resume: checkpoint step is past total_steps");
    }
    restore_model(st, *resume);
    streams.restore(resume->rng_streams);
  }

  if (!out.checkpoint_dir.empty()) {
    std::filesystem::create_directories(out.checkpoint_dir);
  }
  std::ofstream csv;
  if (!out.metrics_csv.empty()) {
    // Append so a resumed run extends the same file; header only when new.
    csv.open(out.metrics_csv, std::ios::app);
    if (!csv) throw IoError("cannot open metrics csv: " + out.metrics_csv);
    csv.seekp(0, std::ios::end);
    if (csv.tellp() == 0) {
      csv << metrics_csv_header() << "\n";
      csv.flush();
    }
  }

  RunResult result;
  result.best.config_digest = digest;

  DiagWindow agg;
  std::optional<LossBreakdown> last_lb;
  std::optional<double> last_lr;

  auto emit_row = [&](std::uint64_t at) {
    MetricsRow row;
    row.step = at;
    if (last_lb) {
      row.l_x = last_lb->l_x;
      row.l_u = last_lb->l_u;
      row.l_p = last_lb->l_p;
      row.total = last_lb->total_value;
      row.lr = last_lr;
    }
    row.val_acc = evaluate(bcfg, st.ema, data.validation);
    if (cfg.eval_test && data.test_view.size() > 0) {
      row.test_acc = evaluate(bcfg, st.ema, data.test_view);
    }
    agg.fill(row);
    result.history.push_back(row);
    if (csv.is_open()) {
      csv << format_metrics_row(row) << "\n";
      csv.flush();
    }
    if (row.val_acc > result.best.val_acc) {
      result.best.step = at;
      result.best.val_acc = row.val_acc;
      result.best_test_acc = row.test_acc;
      if (!out.checkpoint_dir.empty()) {
        result.best.path = out.checkpoint_dir + "/best.ckpt";
        save_checkpoint(result.best.path, make_checkpoint(st, streams, digest));
      }
    }
  };

  if (st.step == 0) emit_row(0);

  const std::uint64_t B = cfg.batch_size;
  const bool unsup = !(cfg.lambda_u == 0.0 && cfg.lambda_p == 0.0);
  const std::uint64_t end_step =
      stop_after == 0 ? cfg.total_steps : std::min(stop_after, cfg.total_steps);

  for (std::uint64_t s = st.step + 1; s <= end_step; ++s) {
    const double lr = cosine_lr(s - 1, cfg.total_steps, cfg.lr, cfg.cosine_rate);
    const std::vector<std::size_t> li = cyclic_indices(
        streams.labeled_order.key(), (s - 1) * B, B, data.labeled.size());
    Tensor lx = data.labeled.batch(li);
    std::vector<std::size_t> classes(li.size());
    for (std::size_t i = 0; i < li.size(); ++i) classes[i] = data.labeled.label(li[i]);
    ProbBatch ly = one_hot(classes, bcfg.num_classes);

    Tensor ux;
    std::vector<std::size_t> truth;
    if (unsup) {
      const std::vector<std::size_t> ui = cyclic_indices(
          streams.unlabeled_order.key(), (s - 1) * B, B, data.unlabeled.size());
      ux = data.unlabeled.batch(ui);
      truth.resize(ui.size());
      for (std::size_t i = 0; i < ui.size(); ++i) {
        truth[i] = data.unlabeled.truth_for_diagnostics(ui[i]);
      }
    }

    LossBreakdown lb;
    try {
      lb = train_step(st, streams, lx, ly, ux, unsup ? &truth : nullptr, cfg, lr);
    } catch (const std::exception& e) {
      if (csv.is_open()) csv.flush();
      throw ValueError("training aborted at step " + std::to_string(s) + ": " +
                       e.what());
    }
    last_lb = lb;
    last_lr = lr;
    if (unsup) agg.add(lb.diagnostics);

    if (s % cfg.eval_every == 0 || s == cfg.total_steps) emit_row(s);
  }

  if (!out.checkpoint_dir.empty()) {
    save_checkpoint(out.checkpoint_dir + "/last.ckpt",
                    make_checkpoint(st, streams, digest));
  }
  return result;
}

ModelState run_supervised_reference(const TrainConfig& cfg, const RunData& data,
                                    std::uint64_t steps) {
  cfg.validate();
  if (steps > cfg.total_steps) {
    throw ConfigError("run_supervised_reference: steps past total_steps");
  }
  RunStreams streams = RunStreams::derive(cfg.seed);
  BackboneConfig bcfg = cfg.backbone(data.train.channels, data.train.num_classes);
  ModelState st = init_model(bcfg, cfg.optimizer_config(), streams.init);
  const WeakAugPolicy weak_policy{};
  const std::uint64_t B = cfg.batch_size;

  for (std::uint64_t s = 1; s <= steps; ++s) {
    const double lr = cosine_lr(s - 1, cfg.total_steps, cfg.lr, cfg.cosine_rate);
    const std::vector<std::size_t> li = cyclic_indices(
        streams.labeled_order.key(), (s - 1) * B, B, data.labeled.size());
    Tensor x = data.labeled.batch(li);
    std::vector<std::size_t> classes(li.size());
    for (std::size_t i = 0; i < li.size(); ++i) classes[i] = data.labeled.label(li[i]);
    ProbBatch y = one_hot(classes, bcfg.num_classes);

    Tensor weak = weak_augment(x, weak_policy, streams.weak_labeled);
    Tape tape;
    ParamSet w = watch_all(tape, st.params);
    Tensor probs = softmax_rows(backbone_forward(bcfg, w, weak));
    Tensor l_x = supervised_loss(y, ProbBatch(probs));
    GradientMap g = backward(l_x);
    std::vector<std::vector<double>> grads;
    grads.reserve(w.count());
    for (const Param& p : w.items()) grads.push_back(g.at(p.value));
    st.opt.step(st.params, grads, lr);
    ema_update(st.ema, st.params, cfg.ema_decay);
    ++st.step;
  }
  return st;
}

}  // namespace simple
