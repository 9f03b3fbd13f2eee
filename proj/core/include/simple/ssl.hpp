#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "simple/nn.hpp"
#include "simple/tensor.hpp"

namespace simple {

// Batch of probability rows [n, l]: nonnegative, each row summing to 1
// within 1e-6. Wraps a tensor that may be tracked (softmax predictions) or
// detached (pseudo labels).
class ProbBatch {
 public:
  explicit ProbBatch(Tensor t);
  const Tensor& tensor() const { return t_; }
  std::size_t rows() const { return t_.shape()[0]; }
  std::size_t classes() const { return t_.shape()[1]; }

 private:
  Tensor t_;
};

struct Thresholds {
  double tau_c = 0.95;
  double tau_s = 0.9;
  void validate() const;
};

struct LossWeights {
  double lambda_u = 75.0;
  double lambda_p = 75.0;
  void validate() const;
};

struct PairDiagnostics {
  // Fraction of pseudo labels with max(q) strictly above tau_c.
  double high_conf_ratio = 0.0;
  // Fraction of ordered pairs (i,j), i != j, passing both gates.
  double pair_pass_ratio = 0.0;
  // Among passing pairs, fraction whose ground-truth classes differ. Absent
  // when truth is not supplied; 0 when no pair passes.
  std::optional<double> false_positive_pair_rate;
  // Pair loss was skipped because the batch had fewer than two rows.
  bool degenerate_pair_batch = false;
};

struct LossBreakdown {
  Tensor total;  // scalar, tracked when any input loss is tracked
  double l_x = 0.0;
  double l_u = 0.0;
  double l_p = 0.0;
  double total_value = 0.0;
  PairDiagnostics diagnostics;
};

// Temperature sharpening p^(1/T) / sum(p^(1/T)). T > 0; fails on an all-zero
// row. T=1 is the identity; T<1 concentrates mass on the argmax.
std::vector<double> sharpen(const std::vector<double>& p, double T);
// Detached row-wise batch form.
Tensor sharpen_rows(const Tensor& p, double T);

// max_i p_i.
double confidence(const std::vector<double>& p);

// x if x > t (strict), else 0.
double hard_threshold(double x, double t);

// Bhattacharyya coefficient sum_i sqrt(p_i q_i), in [0,1], 1 iff p = q.
double bhattacharyya_sim(const std::vector<double>& p,
                         const std::vector<double>& q);

// 1 - bhattacharyya_sim.
double pair_distance(const std::vector<double>& p,
                     const std::vector<double>& q);

// Lower bound on the confidence of any label that can pass both gates when
// paired with an anchor: cos(acos(sqrt(tau_c)) + acos(tau_s))^2, clamped to 0
// once the combined angle exceeds pi/2.
double confidence_bound(double tau_c, double tau_s);

// Row-wise arithmetic mean of the prediction batches, then sharpen. The
// label-guessing arithmetic, separated from the model forward so it can be
// checked against hand values.
ProbBatch average_and_sharpen(const std::vector<ProbBatch>& preds, double T);

// Pseudo labels: sharpen(mean over views of softmax(forward(ema, view)), T).
// Views are weakly augmented copies of one unlabeled batch. The result is
// always detached; no gradient flows into label guessing.
ProbBatch guess_labels(const BackboneConfig& cfg, const ParamSet& ema_params,
                       const std::vector<Tensor>& weak_views, double T);

// Mean cross-entropy -1/n sum_i <y_i, log p_i> with p clamped at 1e-12
// inside the log. Labels must be detached; gradient flows through preds.
Tensor supervised_loss(const ProbBatch& labels, const ProbBatch& preds);

// Confidence-masked mean squared L2 distance, normalized by l*n where n
// counts every row including rejected ones:
//   1/(l*n) sum_i 1(max q_i > tau_c) ||q_i - p_i||^2.
Tensor unsupervised_loss(const ProbBatch& pseudo, const ProbBatch& preds,
                         double tau_c, std::size_t num_classes);

// Pair loss over ordered pairs (i,j), i != j, normalized by C(n,2):
//   1/C(n,2) sum phi_tau_c(max q_i) phi_tau_s(f_sim(q_i,q_j)) (1 - <sqrt q_i, sqrt p_j>).
// Gradient flows only through strong_preds. Fewer than two rows yields a
// detached zero and sets *degenerate.
Tensor pair_loss(const ProbBatch& pseudo, const ProbBatch& strong_preds,
                 const Thresholds& th, bool* degenerate = nullptr);

// Exhaustive O(n^2) scalar-loop evaluation of the same sum, kept free of the
// tensor path so it can serve as an independent oracle.
double pair_loss_oracle(const ProbBatch& pseudo, const ProbBatch& strong_preds,
                        const Thresholds& th);

// total = l_x + lambda_u*l_u + lambda_p*l_p, with the scalar breakdown
// recorded. Diagnostics are left default; the trainer fills them in.
LossBreakdown total_loss(const Tensor& l_x, const Tensor& l_u,
                         const Tensor& l_p, const LossWeights& w);

// Ratios over the batch's detached pseudo labels; `true_classes`, when
// given, supplies held-out ground truth for the false-positive rate.
PairDiagnostics pair_diagnostics(
    const ProbBatch& pseudo, const Thresholds& th,
    const std::vector<std::size_t>* true_classes = nullptr);

}  // namespace simple
