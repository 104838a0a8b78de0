#include "sdss/training.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include "sdss/dense.hpp"

namespace sdss {

void TrainConfig::validate() const {
  if (hidden < 1) throw ConfigError("hidden must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  loss.validate();
}

OptimizerState OptimizerState::for_params(const ModelParams& p) {
  return {Gradients::zeros_like(p), Gradients::zeros_like(p), 0};
}

void adam_update(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v, Index step,
                 const AdamOptions& opts) {
  require_same_shape(param, grad, "adam_update");
  m = opts.beta1 * m + (1.0 - opts.beta1) * grad;
  v = opts.beta2 * v + (1.0 - opts.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(step));
  param.array() -=
      opts.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + opts.epsilon);
  if (opts.weight_decay > 0.0) param *= 1.0 - opts.learning_rate * opts.weight_decay;
}

void adam_step(ModelParams& params, const Gradients& grads, OptimizerState& state,
               const AdamOptions& opts) {
  ++state.step;
  adam_update(params.w0, grads.w0, state.m.w0, state.v.w0, state.step, opts);
  adam_update(params.w1, grads.w1, state.m.w1, state.v.w1, state.step, opts);
  adam_update(params.w_hat, grads.w_hat, state.m.w_hat, state.v.w_hat, state.step, opts);
}

TeacherLoss loss_teacher(const ForwardTrace& trace, const IndexList& labels,
                         const PretextTask* task, const IndexList& labeled,
                         const LossConfig& cfg) {
  TeacherLoss out;
  LossValue nc = loss_nc(trace.logits, labels, labeled, cfg.reduction);
  out.nc = nc.value;
  out.total = nc.value;
  out.d_logits = std::move(nc.grad);
  if (task && cfg.alpha > 0.0) {
    LossValue ss = loss_ss(trace.pretext_logits, *task, pretext_index(*task, labeled),
                           cfg.reduction);
    out.ss = ss.value;
    out.total += cfg.alpha * ss.value;
    out.d_pretext_logits = cfg.alpha * ss.grad;
  }
  return out;
}

StudentLoss loss_student(const ForwardTrace& trace, const TeacherOutputs& teacher,
                         const IndexList& labels, const PretextTask* task,
                         const IndexList& labeled, const LossConfig& cfg) {
  StudentLoss out;
  if (cfg.w_sd_nc > 0.0) {
    LossValue nc = loss_sd_nc(trace.logits, teacher.logits, labels, labeled, cfg);
    out.sd_nc = nc.value;
    out.total += cfg.w_sd_nc * nc.value;
    out.d_logits = cfg.w_sd_nc * nc.grad;
  }
  if (task && cfg.w_sd_ss > 0.0) {
    LossValue ss = loss_sd_ss(trace.pretext_logits, teacher.pretext_logits, *task,
                              pretext_index(*task, labeled), cfg);
    out.sd_ss = ss.value;
    out.total += cfg.w_sd_ss * ss.value;
    out.d_pretext_logits = cfg.w_sd_ss * ss.grad;
  }
  if (cfg.w_sd_m > 0.0) {
    LossValue m = loss_sd_m(trace.hidden(), teacher.hidden, labeled, cfg.reduction);
    out.sd_m = m.value;
    out.total += cfg.w_sd_m * m.value;
    out.d_hidden = cfg.w_sd_m * m.grad;
  }
  return out;
}

IndexList predict(const Matrix& logits) {
  IndexList out(logits.rows());
  for (Index i = 0; i < logits.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < logits.cols(); ++j) {
      if (logits(i, j) > logits(i, best)) best = j;
    }
    out[i] = best;
  }
  return out;
}

double accuracy(const Matrix& logits, const IndexList& labels, const IndexList& idx) {
  if (idx.empty()) return 0.0;
  Index hits = 0;
  for (Index i : idx) {
    Index best = 0;
    for (Index j = 1; j < logits.cols(); ++j) {
      if (logits(i, j) > logits(i, best)) best = j;
    }
    hits += best == labels[i];
  }
  return static_cast<double>(hits) / static_cast<double>(idx.size());
}

Matrix evaluate_logits(const ModelParams& params, const Dataset& ds) {
  const NormalizedAdjacency L = normalize(ds.graph);
  return forward(params, L, propagate_inputs(L, ds.features), false, 0).logits;
}

namespace {

using Clock = std::chrono::steady_clock;

// Shared epoch loop. `step` runs one training forward/backward/update and
// returns the epoch record with loss fields filled in.
template <typename StepFn>
TrainResult run_epochs(const Dataset& ds, const TrainConfig& cfg, const NormalizedAdjacency& L,
                       const PropagatedInputs& inputs, ModelParams params, const char* stage,
                       StepFn&& step) {
  if (ds.split.val.empty()) throw DataError("training needs a non-empty validation split");
  const auto start = Clock::now();
  TrainResult result;
  result.report.stage = stage;
  result.params = params;
  OptimizerState state = OptimizerState::for_params(params);
  AdamOptions adam;
  adam.learning_rate = cfg.learning_rate;
  adam.weight_decay = cfg.weight_decay;

  double best_acc = -1.0;
  double best_loss = 0.0;
  Index stale = 0;
  for (Index epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    EpochRecord rec = step(params, state, adam, epoch);
    rec.epoch = epoch;
    const ForwardTrace eval = forward(params, L, inputs, false, 0);
    rec.train_acc = accuracy(eval.logits, ds.labels, ds.split.train);
    rec.val_acc = accuracy(eval.logits, ds.labels, ds.split.val);
    rec.val_loss = loss_nc(eval.logits, ds.labels, ds.split.val, cfg.loss.reduction).value;
    result.report.epochs.push_back(rec);

    if (rec.val_acc > best_acc || (rec.val_acc == best_acc && rec.val_loss < best_loss)) {
      best_acc = rec.val_acc;
      best_loss = rec.val_loss;
      result.params = params;
      result.report.best_epoch = epoch;
      result.report.best_val_acc = rec.val_acc;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  const ForwardTrace best = forward(result.params, L, inputs, false, 0);
  result.report.test_acc = accuracy(best.logits, ds.labels, ds.split.test);
  result.report.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

void check_task(const Dataset& ds, const PretextTask* task) {
  if (task && task->num_nodes() != ds.num_nodes()) {
    throw ShapeError("pretext task covers " + std::to_string(task->num_nodes()) +
                     " nodes, dataset has " + std::to_string(ds.num_nodes()));
  }
}

}  // namespace

TrainResult train_teacher(const Dataset& ds, const PretextTask* task, const TrainConfig& cfg,
                          std::uint64_t seed) {
  cfg.validate();
  check_task(ds, task);
  const bool use_task = task && cfg.loss.alpha > 0.0;
  if (use_task && pretext_index(*task, ds.split.train).empty()) {
    throw DataError("pretext loss has no labeled nodes (completion mask misses the train set)");
  }
  const NormalizedAdjacency L = normalize(ds.graph);
  const PropagatedInputs inputs =
      propagate_inputs(L, ds.features, use_task ? task->input_override : std::nullopt);
  ModelParams params = init_params(ds.num_features(), cfg.hidden, ds.num_classes,
                                   task ? task->output_dim : 1, cfg.dropout, derive_seed(seed, 1));
  const PretextTask* active = use_task ? task : nullptr;

  return run_epochs(ds, cfg, L, inputs, std::move(params), "teacher",
                    [&](ModelParams& p, OptimizerState& state, const AdamOptions& adam,
                        Index epoch) {
                      const ForwardTrace trace =
                          forward(p, L, inputs, true, derive_seed(seed, 1000 + epoch));
                      TeacherLoss loss =
                          loss_teacher(trace, ds.labels, active, ds.split.train, cfg.loss);
                      const Gradients g = backward(p, L, inputs, trace, loss.d_logits,
                                                   loss.d_pretext_logits, Matrix());
                      adam_step(p, g, state, adam);
                      EpochRecord rec;
                      rec.loss = loss.total;
                      rec.terms = {{"nc", loss.nc}, {"ss", loss.ss}};
                      return rec;
                    });
}

TrainResult train_student(const Dataset& ds, const PretextTask* task, const ModelParams& teacher,
                          const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  check_task(ds, task);
  const bool use_task = task && cfg.loss.w_sd_ss > 0.0;
  if (use_task && pretext_index(*task, ds.split.train).empty()) {
    throw DataError("pretext loss has no labeled nodes (completion mask misses the train set)");
  }
  if (teacher.num_features() != ds.num_features() || teacher.hidden() != cfg.hidden ||
      teacher.num_classes() != ds.num_classes) {
    throw ShapeError("teacher parameters do not match the dataset and configuration");
  }
  if (use_task && teacher.pretext_dim() != task->output_dim) {
    throw ShapeError("teacher pretext head does not match the pretext task");
  }
  const NormalizedAdjacency L = normalize(ds.graph);
  const PropagatedInputs inputs =
      propagate_inputs(L, ds.features, use_task ? task->input_override : std::nullopt);

  // The teacher is frozen, so its eval-mode outputs are the same every epoch.
  const ForwardTrace t = forward(teacher, L, inputs, false, 0);
  const TeacherOutputs frozen{t.logits, t.pretext_logits, t.hidden()};

  ModelParams params =
      init_params(ds.num_features(), cfg.hidden, ds.num_classes, teacher.pretext_dim(),
                  cfg.dropout, derive_seed(seed, 2));
  const PretextTask* active = use_task ? task : nullptr;

  return run_epochs(ds, cfg, L, inputs, std::move(params), "student",
                    [&](ModelParams& p, OptimizerState& state, const AdamOptions& adam,
                        Index epoch) {
                      const ForwardTrace trace =
                          forward(p, L, inputs, true, derive_seed(seed, 2000 + epoch));
                      StudentLoss loss =
                          loss_student(trace, frozen, ds.labels, active, ds.split.train, cfg.loss);
                      const Gradients g = backward(p, L, inputs, trace, loss.d_logits,
                                                   loss.d_pretext_logits, loss.d_hidden);
                      adam_step(p, g, state, adam);
                      EpochRecord rec;
                      rec.loss = loss.total;
                      rec.terms = {{"sd_nc", loss.sd_nc}, {"sd_ss", loss.sd_ss}, {"sd_m", loss.sd_m}};
                      return rec;
                    });
}

void write_report(std::ostream& out, const TrainReport& report) {
  for (const auto& e : report.epochs) {
    out << "record=epoch stage=" << report.stage << " epoch=" << e.epoch
        << " loss=" << format_double(e.loss);
    for (const auto& [name, value] : e.terms) out << ' ' << name << '=' << format_double(value);
    out << " train_acc=" << format_double(e.train_acc) << " val_loss=" << format_double(e.val_loss)
        << " val_acc=" << format_double(e.val_acc) << '\n';
  }
  out << "record=summary stage=" << report.stage << " epochs_run=" << report.epochs.size()
      << " best_epoch=" << report.best_epoch
      << " best_val_acc=" << format_double(report.best_val_acc)
      << " test_acc=" << format_double(report.test_acc) << '\n';
  out << "record=timing stage=" << report.stage
      << " wall_seconds=" << format_double(report.wall_seconds) << '\n';
}

}  // namespace sdss
