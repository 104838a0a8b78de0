#include "sdss/losses.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "sdss/dense.hpp"

namespace sdss {

void LossConfig::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (!(beta1 >= 0.0 && beta1 <= 1.0)) throw ConfigError("beta1 must lie in [0, 1]");
  if (!(beta2 >= 0.0 && beta2 <= 1.0)) throw ConfigError("beta2 must lie in [0, 1]");
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (!(w_sd_nc >= 0.0 && w_sd_ss >= 0.0 && w_sd_m >= 0.0)) {
    throw ConfigError("distillation term multipliers must be >= 0");
  }
}

namespace {

void check_index(const IndexList& idx, Index rows, const char* what) {
  if (idx.empty()) throw std::invalid_argument(std::string(what) + ": empty index set");
  for (Index i : idx) {
    if (i < 0 || i >= rows) {
      throw std::out_of_range(std::string(what) + ": row " + std::to_string(i) +
                              " out of range");
    }
  }
}

double scale_for(const IndexList& idx, Reduction r) {
  return r == Reduction::Mean ? 1.0 / static_cast<double>(idx.size()) : 1.0;
}

LossValue mix(double w_a, LossValue a, double w_b, const LossValue& b) {
  a.value = w_a * a.value + w_b * b.value;
  a.grad = w_a * a.grad + w_b * b.grad;
  return a;
}

}  // namespace

LossValue cross_entropy(const Matrix& logits, const IndexList& targets, const IndexList& idx,
                        Reduction reduction) {
  check_index(idx, logits.rows(), "cross_entropy");
  if (static_cast<Index>(targets.size()) != logits.rows()) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(logits.rows()) + " rows");
  }
  const double s = scale_for(idx, reduction);
  LossValue out{0.0, Matrix::Zero(logits.rows(), logits.cols())};
  for (Index i : idx) {
    const Index y = targets[i];
    if (y < 0 || y >= logits.cols()) throw std::out_of_range("cross_entropy: target out of range");
    const Matrix logp = log_softmax_rows(logits.row(i));
    out.value -= s * logp(0, y);
    out.grad.row(i) = s * logp.array().exp().matrix();
    out.grad(i, y) -= s;
  }
  return out;
}

LossValue smooth_l1_loss(const Matrix& pred, const Matrix& target, const IndexList& idx,
                         Reduction reduction) {
  require_same_shape(pred, target, "smooth_l1_loss");
  check_index(idx, pred.rows(), "smooth_l1_loss");
  const double s = scale_for(idx, reduction);
  LossValue out{0.0, Matrix::Zero(pred.rows(), pred.cols())};
  for (Index i : idx) {
    for (Index j = 0; j < pred.cols(); ++j) {
      const double r = pred(i, j) - target(i, j);
      out.value += s * smooth_l1(r);
      out.grad(i, j) = s * smooth_l1_grad(r);
    }
  }
  return out;
}

LossValue kl_soft(const Matrix& student_logits, const Matrix& teacher_logits, const IndexList& idx,
                  double tau, Reduction reduction) {
  require_same_shape(student_logits, teacher_logits, "kl_soft");
  check_index(idx, student_logits.rows(), "kl_soft");
  const double s = scale_for(idx, reduction);
  LossValue out{0.0, Matrix::Zero(student_logits.rows(), student_logits.cols())};
  for (Index i : idx) {
    const Matrix log_ps = log_softmax_rows(student_logits.row(i), tau);
    const Matrix log_pt = log_softmax_rows(teacher_logits.row(i), tau);
    const Matrix pt = log_pt.array().exp().matrix();
    out.value += s * (pt.array() * (log_pt - log_ps).array()).sum();
    out.grad.row(i) = (s / tau) * (log_ps.array().exp() - pt.array()).matrix();
  }
  return out;
}

LossValue loss_nc(const Matrix& logits, const IndexList& labels, const IndexList& idx,
                  Reduction reduction) {
  return cross_entropy(logits, labels, idx, reduction);
}

LossValue loss_ss(const Matrix& pretext_logits, const PretextTask& task, const IndexList& idx,
                  Reduction reduction) {
  if (task.is_classification()) {
    return cross_entropy(pretext_logits, task.class_targets, idx, reduction);
  }
  return smooth_l1_loss(pretext_logits, task.regression_targets, idx, reduction);
}

IndexList pretext_index(const PretextTask& task, const IndexList& labeled) {
  if (task.kind != PretextKind::Completion) return labeled;
  IndexList sorted = labeled;
  std::sort(sorted.begin(), sorted.end());
  IndexList out;
  std::set_intersection(sorted.begin(), sorted.end(), task.mask.begin(), task.mask.end(),
                        std::back_inserter(out));
  return out;
}

LossValue loss_sd_nc(const Matrix& student_logits, const Matrix& teacher_logits,
                     const IndexList& labels, const IndexList& idx, const LossConfig& cfg) {
  const double kl_weight = cfg.tau_squared ? cfg.tau * cfg.tau : 1.0;
  return mix(cfg.beta1 * kl_weight,
             kl_soft(student_logits, teacher_logits, idx, cfg.tau, cfg.reduction),
             1.0 - cfg.beta1, cross_entropy(student_logits, labels, idx, cfg.reduction));
}

LossValue loss_sd_ss(const Matrix& student_pretext, const Matrix& teacher_pretext,
                     const PretextTask& task, const IndexList& idx, const LossConfig& cfg) {
  if (task.is_classification()) {
    const double kl_weight = cfg.tau_squared ? cfg.tau * cfg.tau : 1.0;
    return mix(cfg.beta2 * kl_weight,
               kl_soft(student_pretext, teacher_pretext, idx, cfg.tau, cfg.reduction),
               1.0 - cfg.beta2,
               cross_entropy(student_pretext, task.class_targets, idx, cfg.reduction));
  }
  return mix(cfg.beta2, smooth_l1_loss(student_pretext, teacher_pretext, idx, cfg.reduction),
             1.0 - cfg.beta2,
             smooth_l1_loss(student_pretext, task.regression_targets, idx, cfg.reduction));
}

LossValue loss_sd_m(const Matrix& student_hidden, const Matrix& teacher_hidden,
                    const IndexList& idx, Reduction reduction) {
  return smooth_l1_loss(student_hidden, teacher_hidden, idx, reduction);
}

}  // namespace sdss
