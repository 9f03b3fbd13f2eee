#include "simple/ssl.hpp"

#include <algorithm>
#include <cmath>

#include "simple/errors.hpp"
#include "simple/ops.hpp"

namespace simple {

ProbBatch::ProbBatch(Tensor t) : t_(std::move(t)) {
  if (t_.ndim() != 2) {
    throw ShapeError("ProbBatch: want [n,l], got " + shape_str(t_.shape()));
  }
  const std::size_t n = t_.shape()[0], l = t_.shape()[1];
  const auto& v = t_.data();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < l; ++j) {
      const double x = v[i * l + j];
      if (x < 0.0) throw ValueError("ProbBatch: negative probability in row " + std::to_string(i));
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-6) {
      throw ValueError("ProbBatch: row " + std::to_string(i) + " sums to " +
                       std::to_string(s));
    }
  }
}

void Thresholds::validate() const {
  if (tau_c <= 0.0 || tau_c > 1.0 || tau_s <= 0.0 || tau_s > 1.0) {
    throw ConfigError("thresholds: tau_c and tau_s must be in (0,1]");
  }
}

void LossWeights::validate() const {
  if (lambda_u < 0.0 || lambda_p < 0.0) {
    throw ConfigError("loss weights: lambda_u and lambda_p must be >= 0");
  }
}

std::vector<double> sharpen(const std::vector<double>& p, double T) {
  if (T <= 0.0) throw ValueError("sharpen: T must be positive");
  std::vector<double> out(p.size());
  const double inv_t = 1.0 / T;
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0) throw ValueError("sharpen: negative probability");
    out[i] = std::pow(p[i], inv_t);
    s += out[i];
  }
  if (s <= 0.0) throw ValueError("sharpen: zero row sum");
  for (double& x : out) x /= s;
  return out;
}

Tensor sharpen_rows(const Tensor& p, double T) {
  if (p.ndim() != 2) {
    throw ShapeError("sharpen_rows: want [n,l], got " + shape_str(p.shape()));
  }
  if (p.tracked()) {
    throw ContractError("sharpen_rows: input must be detached (labels take no gradient)");
  }
  const std::size_t n = p.shape()[0], l = p.shape()[1];
  const auto& v = p.data();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(v.begin() + i * l, v.begin() + (i + 1) * l);
    std::vector<double> sh = sharpen(row, T);
    std::copy(sh.begin(), sh.end(), out.begin() + i * l);
  }
  return Tensor::from(p.shape(), std::move(out));
}

double confidence(const std::vector<double>& p) {
  if (p.empty()) throw ValueError("confidence: empty vector");
  return *std::max_element(p.begin(), p.end());
}

double hard_threshold(double x, double t) { return x > t ? x : 0.0; }

double bhattacharyya_sim(const std::vector<double>& p,
                         const std::vector<double>& q) {
  if (p.size() != q.size()) {
    throw ShapeError("bhattacharyya_sim: length mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::sqrt(p[i]) * std::sqrt(q[i]);
  return s;
}

double pair_distance(const std::vector<double>& p,
                     const std::vector<double>& q) {
  return 1.0 - bhattacharyya_sim(p, q);
}

double confidence_bound(double tau_c, double tau_s) {
  Thresholds{tau_c, tau_s}.validate();
  const double angle = std::acos(std::min(1.0, std::sqrt(tau_c))) + std::acos(tau_s);
  const double c = std::cos(angle);
  return c > 0.0 ? c * c : 0.0;
}

ProbBatch average_and_sharpen(const std::vector<ProbBatch>& preds, double T) {
  if (preds.empty()) throw ValueError("average_and_sharpen: no predictions");
  Tensor acc;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    if (preds[k].tensor().shape() != preds[0].tensor().shape()) {
      throw ShapeError("average_and_sharpen: batches differ in shape");
    }
    acc = k == 0 ? preds[k].tensor() : add(acc, preds[k].tensor());
  }
  Tensor mean_probs = scale(acc, 1.0 / static_cast<double>(preds.size()));
  return ProbBatch(sharpen_rows(mean_probs, T));
}

ProbBatch guess_labels(const BackboneConfig& cfg, const ParamSet& ema_params,
                       const std::vector<Tensor>& weak_views, double T) {
  if (weak_views.empty()) throw ValueError("guess_labels: no views");
  for (const Param& p : ema_params.items()) {
    if (p.value.tracked()) {
      throw ContractError("guess_labels: EMA parameters must be detached");
    }
  }
  std::vector<ProbBatch> preds;
  preds.reserve(weak_views.size());
  for (std::size_t k = 0; k < weak_views.size(); ++k) {
    if (weak_views[k].shape() != weak_views[0].shape()) {
      throw ShapeError("guess_labels: views differ in shape");
    }
    preds.emplace_back(
        softmax_rows(backbone_forward(cfg, ema_params, weak_views[k])));
  }
  return average_and_sharpen(preds, T);
}

Tensor supervised_loss(const ProbBatch& labels, const ProbBatch& preds) {
  if (labels.tensor().tracked()) {
    throw ContractError("supervised_loss: labels must be detached");
  }
  if (labels.tensor().shape() != preds.tensor().shape()) {
    throw ShapeError("supervised_loss: shape mismatch " +
                     shape_str(labels.tensor().shape()) + " vs " +
                     shape_str(preds.tensor().shape()));
  }
  const double n = static_cast<double>(labels.rows());
  Tensor logp = log_t(clamp_min(preds.tensor(), 1e-12));
  return scale(sum(mul(labels.tensor(), logp)), -1.0 / n);
}

Tensor unsupervised_loss(const ProbBatch& pseudo, const ProbBatch& preds,
                         double tau_c, std::size_t num_classes) {
  if (pseudo.tensor().tracked()) {
    throw ContractError("unsupervised_loss: pseudo labels must be detached");
  }
  if (pseudo.tensor().shape() != preds.tensor().shape()) {
    throw ShapeError("unsupervised_loss: shape mismatch " +
                     shape_str(pseudo.tensor().shape()) + " vs " +
                     shape_str(preds.tensor().shape()));
  }
  if (num_classes != pseudo.classes()) {
    throw ShapeError("unsupervised_loss: class count " +
                     std::to_string(num_classes) + " vs row length " +
                     std::to_string(pseudo.classes()));
  }
  const std::size_t n = pseudo.rows(), l = pseudo.classes();
  const auto& q = pseudo.tensor().data();
  std::vector<double> mask(n * l, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double m = q[i * l];
    for (std::size_t j = 1; j < l; ++j) m = std::max(m, q[i * l + j]);
    if (m > tau_c) std::fill(mask.begin() + i * l, mask.begin() + (i + 1) * l, 1.0);
  }
  Tensor mask_t = Tensor::from({n, l}, std::move(mask));
  Tensor d = sub(pseudo.tensor(), preds.tensor());
  Tensor masked_sq = mul(mul(d, d), mask_t);
  return scale(sum(masked_sq), 1.0 / static_cast<double>(l * n));
}

namespace {

// Pair gate weights w_ij = phi_tau_c(max q_i) * phi_tau_s(f_sim(q_i, q_j))
// folded into the per-partner constant A[j] = sum_{i != j} w_ij sqrt(q_i),
// so the loss reduces to (W_total - <A, sqrt P>) / C(n,2).
struct PairFold {
  std::vector<double> a;  // [n*l]
  double w_total = 0.0;
};

PairFold fold_pair_weights(const std::vector<double>& q, std::size_t n,
                           std::size_t l, const Thresholds& th) {
  PairFold f;
  f.a.assign(n * l, 0.0);
  std::vector<double> sqrt_q(n * l);
  for (std::size_t i = 0; i < n * l; ++i) sqrt_q[i] = std::sqrt(q[i]);
  std::vector<double> conf(n);
  for (std::size_t i = 0; i < n; ++i) {
    double m = q[i * l];
    for (std::size_t j = 1; j < l; ++j) m = std::max(m, q[i * l + j]);
    conf[i] = m;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double ci = hard_threshold(conf[i], th.tau_c);
    if (ci == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double sim = 0.0;
      for (std::size_t k = 0; k < l; ++k) {
        sim += sqrt_q[i * l + k] * sqrt_q[j * l + k];
      }
      const double w = ci * hard_threshold(sim, th.tau_s);
      if (w == 0.0) continue;
      f.w_total += w;
      for (std::size_t k = 0; k < l; ++k) {
        f.a[j * l + k] += w * sqrt_q[i * l + k];
      }
    }
  }
  return f;
}

}  // namespace

Tensor pair_loss(const ProbBatch& pseudo, const ProbBatch& strong_preds,
                 const Thresholds& th, bool* degenerate) {
  th.validate();
  if (pseudo.tensor().tracked()) {
    throw ContractError("pair_loss: pseudo labels must be detached");
  }
  if (pseudo.tensor().shape() != strong_preds.tensor().shape()) {
    throw ShapeError("pair_loss: shape mismatch " +
                     shape_str(pseudo.tensor().shape()) + " vs " +
                     shape_str(strong_preds.tensor().shape()));
  }
  if (degenerate) *degenerate = false;
  const std::size_t n = pseudo.rows(), l = pseudo.classes();
  if (n < 2) {
    if (degenerate) *degenerate = true;
    return Tensor::scalar(0.0);
  }
  PairFold f = fold_pair_weights(pseudo.tensor().data(), n, l, th);
  const double norm = 1.0 / (static_cast<double>(n) * (n - 1) / 2.0);
  Tensor a = Tensor::from({n, l}, std::move(f.a));
  Tensor dot = sum(mul(a, sqrt_t(strong_preds.tensor())));
  return scale(add_scalar(scale(dot, -1.0), f.w_total), norm);
}

double pair_loss_oracle(const ProbBatch& pseudo, const ProbBatch& strong_preds,
                        const Thresholds& th) {
  th.validate();
  const std::size_t n = pseudo.rows(), l = pseudo.classes();
  if (strong_preds.rows() != n || strong_preds.classes() != l) {
    throw ShapeError("pair_loss_oracle: shape mismatch");
  }
  if (n < 2) return 0.0;
  const auto& qv = pseudo.tensor().data();
  const auto& pv = strong_preds.tensor().data();
  auto row = [l](const std::vector<double>& v, std::size_t i) {
    return std::vector<double>(v.begin() + i * l, v.begin() + (i + 1) * l);
  };
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> qi = row(qv, i);
    const double gate_c = hard_threshold(confidence(qi), th.tau_c);
    if (gate_c == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const std::vector<double> qj = row(qv, j);
      const double gate_s = hard_threshold(bhattacharyya_sim(qi, qj), th.tau_s);
      if (gate_s == 0.0) continue;
      total += gate_c * gate_s * pair_distance(qi, row(pv, j));
    }
  }
  return total / (static_cast<double>(n) * (n - 1) / 2.0);
}

LossBreakdown total_loss(const Tensor& l_x, const Tensor& l_u,
                         const Tensor& l_p, const LossWeights& w) {
  w.validate();
  if (l_x.size() != 1 || l_u.size() != 1 || l_p.size() != 1) {
    throw ShapeError("total_loss: all loss terms must be scalars");
  }
  LossBreakdown b;
  b.total = add(add(l_x, scale(l_u, w.lambda_u)), scale(l_p, w.lambda_p));
  b.l_x = l_x.item();
  b.l_u = l_u.item();
  b.l_p = l_p.item();
  b.total_value = b.total.item();
  return b;
}

PairDiagnostics pair_diagnostics(const ProbBatch& pseudo, const Thresholds& th,
                                 const std::vector<std::size_t>* true_classes) {
  th.validate();
  const std::size_t n = pseudo.rows(), l = pseudo.classes();
  if (true_classes && true_classes->size() != n) {
    throw ShapeError("pair_diagnostics: truth length mismatch");
  }
  const auto& q = pseudo.tensor().data();
  std::vector<double> conf(n);
  for (std::size_t i = 0; i < n; ++i) {
    double m = q[i * l];
    for (std::size_t j = 1; j < l; ++j) m = std::max(m, q[i * l + j]);
    conf[i] = m;
  }
  PairDiagnostics d;
  if (n == 0) return d;
  std::size_t high = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (conf[i] > th.tau_c) ++high;
  }
  d.high_conf_ratio = static_cast<double>(high) / static_cast<double>(n);
  if (n < 2) {
    d.degenerate_pair_batch = true;
    if (true_classes) d.false_positive_pair_rate = 0.0;
    return d;
  }
  std::size_t pass = 0, fp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (conf[i] <= th.tau_c) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double sim = 0.0;
      for (std::size_t k = 0; k < l; ++k) {
        sim += std::sqrt(q[i * l + k]) * std::sqrt(q[j * l + k]);
      }
      if (sim > th.tau_s) {
        ++pass;
        if (true_classes && (*true_classes)[i] != (*true_classes)[j]) ++fp;
      }
    }
  }
  d.pair_pass_ratio =
      static_cast<double>(pass) / static_cast<double>(n * (n - 1));
  if (true_classes) {
    d.false_positive_pair_rate =
        pass == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(pass);
  }
  return d;
}

}  // namespace simple
