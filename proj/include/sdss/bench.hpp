#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdss/dataset.hpp"
#include "sdss/pretext.hpp"
#include "sdss/training.hpp"

namespace sdss {

/// Ablation arms: plain GCN, +self-supervision, +self-distillation, both.
enum class Mode { Baseline, SS, SD, SDSS };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view name);

/// Which distillation terms a student stage uses.
struct TermSet {
  bool nc = true;
  bool ss = true;
  bool m = true;

  std::string label() const;  // "nc", "nc+m", "nc+ss+m", ...
  static TermSet parse(std::string_view label);
};

struct RunConfig {
  std::string dataset_dir;  // empty: generate the synthetic benchmark
  PlantedPartitionSpec synthetic;
  bool row_normalize = false;
  SplitSpec split;

  PretextKind pretext = PretextKind::Clustering;
  Index pretext_k = 0;  // 0: number of classes
  double epsilon = 0.1;
  double mask_ratio = 0.1;
  Index pca_dim = 0;  // 0: min(32, f)
  Index kmeans_restarts = 10;

  TrainConfig train;
  Mode mode = Mode::SDSS;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out_dir = "runs";
  Index jobs = 0;  // 0: hardware concurrency

  std::vector<Mode> ablation_modes{Mode::Baseline, Mode::SS, Mode::SD, Mode::SDSS};
  std::vector<PretextKind> ablation_kinds{PretextKind::Degree, PretextKind::Clustering,
                                          PretextKind::Partitioning, PretextKind::Completion};
  std::vector<TermSet> ablation_terms{{true, false, false}, {true, false, true}, {true, true, true}};
  std::vector<Index> label_ratio_per_class{5, 10, 20, 50};

  /// Applies one `key=value` setting; throws ConfigError on unknown keys or
  /// bad values.
  void set(std::string_view key, std::string_view value);
  void validate() const;
  /// Canonical `key=value` listing of every setting, space separated.
  std::string to_text() const;
};

/// Parses a `key=value` config file (blank lines and `#` comments allowed).
RunConfig load_config(const std::filesystem::path& path);
/// Applies the config file (if any), then overrides, then the seed fallback:
/// without `seeds`, the master seed comes from $SDSS_SEED, else 0.
RunConfig resolve_config(const std::optional<std::filesystem::path>& file,
                         const std::vector<std::string>& overrides);

/// 16 hex digits of FNV-1a over `text`.
std::string config_hash(std::string_view text);

/// The run's dataset: loaded from `dataset_dir`, else generated.
Dataset load_run_dataset(const RunConfig& cfg);

PretextTask build_pretext(const Dataset& ds, const RunConfig& cfg, PretextKind kind,
                          std::uint64_t seed);

/// One (mode, pretext kind, term set, seed) training run.
struct RunSpec {
  Mode mode = Mode::SDSS;
  PretextKind kind = PretextKind::Clustering;
  TermSet terms;
  std::uint64_t seed = 0;
};

struct RunResult {
  RunSpec spec;
  TrainConfig teacher_cfg;
  std::optional<TrainConfig> student_cfg;
  TrainReport teacher;
  std::optional<TrainReport> student;
  ModelParams final_params;
  double test_acc = 0.0;
  double val_acc = 0.0;

  bool uses_pretext() const { return spec.mode == Mode::SS || spec.mode == Mode::SDSS; }
  bool two_stage() const { return spec.mode == Mode::SD || spec.mode == Mode::SDSS; }
  /// "degree", "clustering", ... or "none" when the mode has no pretext.
  std::string pretext_label() const;
  /// Term label, or "none" for single-stage modes.
  std::string terms_label() const;
  /// File stem: <mode>_<pretext>_<terms>_seed<seed>.
  std::string stem() const;
};

/// Teacher/student configurations a mode implies. Baseline and SD train the
/// teacher without the pretext term; SD also drops the SS distillation term.
TrainConfig teacher_config(const RunConfig& cfg, Mode mode);
TrainConfig student_config(const RunConfig& cfg, Mode mode, const TermSet& terms);

/// `task` is ignored by modes without self-supervision and may be null there.
RunResult run_single(const Dataset& ds, const PretextTask* task, const RunConfig& cfg,
                     const RunSpec& spec);

/// Full report of one run: config record, stage records, result record.
void write_run_report(std::ostream& out, const RunConfig& cfg, const RunResult& r);
/// `record=result ...` line for a run.
std::string result_record(const RunResult& r);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single run
  Index runs = 0;
};
MeanStd mean_std(const std::vector<double>& xs);

/// Runs `count` independent jobs on up to `jobs` threads; results keep job
/// order regardless of completion order.
void parallel_for(Index count, Index jobs, const std::function<void(Index)>& fn);

// ---------------------------------------------------------------------------
// Commands. Each returns its results and writes artifacts under out_dir.
// Artifacts are staged and only moved into out_dir once the command
// succeeds.
// ---------------------------------------------------------------------------

struct TrainSummary {
  std::vector<RunResult> runs;
  MeanStd test_acc;
};
TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log);

struct AblationRow {
  Mode mode = Mode::Baseline;
  std::string pretext;  // kind label or "none"
  std::string terms;    // term label or "none"
  TrainConfig teacher_cfg;
  std::optional<TrainConfig> student_cfg;
  MeanStd test_acc;
};
/// Grid: baseline once; ss per pretext kind; sd per term set without the SS
/// term; sdss per pretext kind and term set.
std::vector<AblationRow> cmd_ablation(const RunConfig& cfg, std::ostream& log);

struct LabelRatioPoint {
  Index per_class = 0;
  Mode mode = Mode::Baseline;
  MeanStd test_acc;
};
std::vector<LabelRatioPoint> cmd_label_ratio(const RunConfig& cfg, std::ostream& log);

/// Writes pretext targets (labels format for classification tasks, features
/// format for regression tasks), plus the masked inputs for completion.
PretextTask cmd_pretext_export(const RunConfig& cfg, std::ostream& log);

/// Writes the synthetic benchmark in the dataset directory format.
Dataset cmd_gen_synthetic(const RunConfig& cfg, std::ostream& log);

}  // namespace sdss
