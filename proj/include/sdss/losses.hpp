#pragma once

#include "sdss/pretext.hpp"
#include "sdss/types.hpp"

namespace sdss {

/// How node-indexed loss terms are aggregated over their index set.
enum class Reduction { Mean, Sum };

struct LossConfig {
  double alpha = 0.1;  // weight of the pretext loss in the teacher objective
  double beta1 = 0.6;  // teacher share of classification distillation
  double beta2 = 0.3;  // teacher share of pretext distillation
  double tau = 2.0;    // softmax temperature of the soft labels
  double w_sd_nc = 1.0;
  double w_sd_ss = 1.0;
  double w_sd_m = 1.0;
  Reduction reduction = Reduction::Mean;
  /// Multiply KL terms by tau^2 (conventional distillation scaling).
  bool tau_squared = false;

  void validate() const;
};

/// Scalar loss and its gradient with respect to the scored matrix. Gradient
/// rows outside the index set are exactly zero.
struct LossValue {
  double value = 0.0;
  Matrix grad;
};

/// Softmax cross-entropy against integer class targets over rows `idx`.
LossValue cross_entropy(const Matrix& logits, const IndexList& targets, const IndexList& idx,
                        Reduction reduction = Reduction::Mean);

/// Smooth mean absolute error, summed over columns, aggregated over rows `idx`.
LossValue smooth_l1_loss(const Matrix& pred, const Matrix& target, const IndexList& idx,
                         Reduction reduction = Reduction::Mean);

/// KL(softmax(Z_t / tau) || softmax(Z_s / tau)) over rows `idx`; the
/// gradient is taken with respect to the student logits only.
LossValue kl_soft(const Matrix& student_logits, const Matrix& teacher_logits,
                  const IndexList& idx, double tau, Reduction reduction = Reduction::Mean);

/// Node classification loss: cross-entropy on labeled nodes.
LossValue loss_nc(const Matrix& logits, const IndexList& labels, const IndexList& idx,
                  Reduction reduction = Reduction::Mean);

/// Pretext loss: cross-entropy for classification tasks, smooth L1 for
/// regression tasks.
LossValue loss_ss(const Matrix& pretext_logits, const PretextTask& task, const IndexList& idx,
                  Reduction reduction = Reduction::Mean);

/// Rows the pretext losses are evaluated on: `labeled`, intersected with the
/// mask for completion tasks.
IndexList pretext_index(const PretextTask& task, const IndexList& labeled);

/// beta1 · KL(p_t || p_s) + (1 - beta1) · CE(y, softmax(Z_s)).
LossValue loss_sd_nc(const Matrix& student_logits, const Matrix& teacher_logits,
                     const IndexList& labels, const IndexList& idx, const LossConfig& cfg);

/// Classification tasks: beta2 · KL + (1 - beta2) · CE against pretext labels.
/// Regression tasks: beta2 · smoothL1(Ẑ_s, Ẑ_t) + (1 - beta2) · smoothL1(Ẑ_s, Ŷ).
LossValue loss_sd_ss(const Matrix& student_pretext, const Matrix& teacher_pretext,
                     const PretextTask& task, const IndexList& idx, const LossConfig& cfg);

/// Smooth L1 between student and teacher hidden representations.
LossValue loss_sd_m(const Matrix& student_hidden, const Matrix& teacher_hidden,
                    const IndexList& idx, Reduction reduction = Reduction::Mean);

}  // namespace sdss
