#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sdss/dataset.hpp"
#include "sdss/losses.hpp"
#include "sdss/model.hpp"
#include "sdss/pretext.hpp"

namespace sdss {

struct TrainConfig {
  Index hidden = 64;
  double dropout = 0.5;
  double learning_rate = 0.01;
  double weight_decay = 0.001;
  Index max_epochs = 300;
  Index patience = 50;
  LossConfig loss;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamOptions {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Decoupled: params -= lr * weight_decay * params after the Adam step.
  double weight_decay = 0.0;
};

struct OptimizerState {
  Gradients m;
  Gradients v;
  Index step = 0;

  static OptimizerState for_params(const ModelParams& p);
};

void adam_step(ModelParams& params, const Gradients& grads, OptimizerState& state,
               const AdamOptions& opts);

/// Single-matrix Adam update; the building block of adam_step.
void adam_update(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v, Index step,
                 const AdamOptions& opts);

// ---------------------------------------------------------------------------
// Objectives
// ---------------------------------------------------------------------------

/// L_NC + alpha · L_SS and its partial derivatives.
struct TeacherLoss {
  double total = 0.0;
  double nc = 0.0;
  double ss = 0.0;
  Matrix d_logits;
  Matrix d_pretext_logits;  // empty when the pretext term is off
};

/// `task` may be null (no pretext head in use); alpha = 0 disables the term.
TeacherLoss loss_teacher(const ForwardTrace& trace, const IndexList& labels,
                         const PretextTask* task, const IndexList& labeled,
                         const LossConfig& cfg);

/// Frozen teacher outputs the student is distilled from.
struct TeacherOutputs {
  Matrix logits;
  Matrix pretext_logits;
  Matrix hidden;
};

/// w_nc · L_SD-NC + w_ss · L_SD-SS + w_m · L_SD-M and its partial derivatives.
struct StudentLoss {
  double total = 0.0;
  double sd_nc = 0.0;
  double sd_ss = 0.0;
  double sd_m = 0.0;
  Matrix d_logits;
  Matrix d_pretext_logits;
  Matrix d_hidden;
};

StudentLoss loss_student(const ForwardTrace& trace, const TeacherOutputs& teacher,
                         const IndexList& labels, const PretextTask* task,
                         const IndexList& labeled, const LossConfig& cfg);

// ---------------------------------------------------------------------------
// Training loops
// ---------------------------------------------------------------------------

struct EpochRecord {
  Index epoch = 0;
  double loss = 0.0;
  /// Named loss components, in a fixed order per stage.
  std::vector<std::pair<std::string, double>> terms;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct TrainReport {
  std::string stage;  // "teacher" or "student"
  std::vector<EpochRecord> epochs;
  Index best_epoch = 0;
  double best_val_acc = 0.0;
  double test_acc = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

/// Full-batch Adam on L_NC + alpha · L_SS with early stopping on validation
/// accuracy; returns the best-validation parameters.
TrainResult train_teacher(const Dataset& ds, const PretextTask* task, const TrainConfig& cfg,
                          std::uint64_t seed);

/// Trains a freshly initialized student against the frozen teacher.
TrainResult train_student(const Dataset& ds, const PretextTask* task, const ModelParams& teacher,
                          const TrainConfig& cfg, std::uint64_t seed);

/// Class predictions (row argmax, lowest index on ties).
IndexList predict(const Matrix& logits);
double accuracy(const Matrix& logits, const IndexList& labels, const IndexList& idx);

/// Eval-mode logits of a trained model on the dataset.
Matrix evaluate_logits(const ModelParams& params, const Dataset& ds);

/// Line-delimited records: one `record=epoch` line per epoch, a
/// `record=summary` line, and a `record=timing` line.
void write_report(std::ostream& out, const TrainReport& report);

}  // namespace sdss
