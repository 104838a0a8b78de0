#include "sdss/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace sdss {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Names
// ---------------------------------------------------------------------------

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Baseline: return "baseline";
    case Mode::SS: return "ss";
    case Mode::SD: return "sd";
    case Mode::SDSS: return "sdss";
  }
  return "unknown";
}

Mode parse_mode(std::string_view name) {
  for (auto m : {Mode::Baseline, Mode::SS, Mode::SD, Mode::SDSS}) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError("unknown mode '" + std::string(name) +
                    "' (expected baseline, ss, sd or sdss)");
}

std::string TermSet::label() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(nc, "nc");
  add(ss, "ss");
  add(m, "m");
  return out.empty() ? "none" : out;
}

TermSet TermSet::parse(std::string_view label) {
  TermSet t{false, false, false};
  size_t start = 0;
  while (start <= label.size()) {
    size_t end = label.find('+', start);
    if (end == std::string_view::npos) end = label.size();
    const auto part = label.substr(start, end - start);
    if (part == "nc") {
      t.nc = true;
    } else if (part == "ss") {
      t.ss = true;
    } else if (part == "m") {
      t.m = true;
    } else {
      throw ConfigError("unknown distillation term '" + std::string(part) + "' in '" +
                        std::string(label) + "' (expected nc, ss, m joined by '+')");
    }
    start = end + 1;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t end = s.find(',', start);
    if (end == std::string_view::npos) end = s.size();
    auto item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(item);
    start = end + 1;
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw ConfigError("bad value '" + std::string(value) + "' for " + std::string(key) +
                    " (expected " + expected + ")");
}

double to_double(std::string_view key, std::string_view value) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v)) {
    bad_value(key, value, "a number");
  }
  return v;
}

Index to_index(std::string_view key, std::string_view value) {
  Index v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, "an integer");
  return v;
}

std::uint64_t to_u64(std::string_view key, std::string_view value) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    bad_value(key, value, "a non-negative integer");
  }
  return v;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "true or false");
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F&& fmt) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += fmt(xs[i]);
  }
  return out.empty() ? "-" : out;
}

}  // namespace

void RunConfig::set(std::string_view key_in, std::string_view value_in) {
  const std::string key = trim(key_in);
  const std::string value = trim(value_in);
  auto& loss = train.loss;
  if (key == "dataset") dataset_dir = value;
  else if (key == "synthetic.blocks") synthetic.blocks = to_index(key, value);
  else if (key == "synthetic.per_block") synthetic.per_block = to_index(key, value);
  else if (key == "synthetic.p_in") synthetic.p_in = to_double(key, value);
  else if (key == "synthetic.p_out") synthetic.p_out = to_double(key, value);
  else if (key == "synthetic.features") synthetic.num_features = to_index(key, value);
  else if (key == "synthetic.shift") synthetic.shift = to_double(key, value);
  else if (key == "synthetic.seed") synthetic.seed = to_u64(key, value);
  else if (key == "row_normalize") row_normalize = to_bool(key, value);
  else if (key == "split") {
    if (value == "public") split.mode = SplitSpec::Mode::PublicFile;
    else if (value == "sample") split.mode = SplitSpec::Mode::PerClassSample;
    else bad_value(key, value, "public or sample");
  }
  else if (key == "train_per_class") {
    split.train_per_class = to_index(key, value);
    synthetic.train_per_class = split.train_per_class;
  }
  else if (key == "val_per_class") {
    split.val_per_class = to_index(key, value);
    synthetic.val_per_class = split.val_per_class;
  }
  else if (key == "split_seed") split.seed = to_u64(key, value);
  else if (key == "pretext") pretext = parse_pretext_kind(value);
  else if (key == "pretext_k") pretext_k = to_index(key, value);
  else if (key == "epsilon") epsilon = to_double(key, value);
  else if (key == "mask_ratio") mask_ratio = to_double(key, value);
  else if (key == "pca_dim") pca_dim = to_index(key, value);
  else if (key == "kmeans_restarts") kmeans_restarts = to_index(key, value);
  else if (key == "hidden") train.hidden = to_index(key, value);
  else if (key == "dropout") train.dropout = to_double(key, value);
  else if (key == "lr") train.learning_rate = to_double(key, value);
  else if (key == "weight_decay") train.weight_decay = to_double(key, value);
  else if (key == "max_epochs") train.max_epochs = to_index(key, value);
  else if (key == "patience") train.patience = to_index(key, value);
  else if (key == "alpha") loss.alpha = to_double(key, value);
  else if (key == "beta1") loss.beta1 = to_double(key, value);
  else if (key == "beta2") loss.beta2 = to_double(key, value);
  else if (key == "tau") loss.tau = to_double(key, value);
  else if (key == "w_sd_nc") loss.w_sd_nc = to_double(key, value);
  else if (key == "w_sd_ss") loss.w_sd_ss = to_double(key, value);
  else if (key == "w_sd_m") loss.w_sd_m = to_double(key, value);
  else if (key == "loss_reduction") {
    if (value == "mean") loss.reduction = Reduction::Mean;
    else if (value == "sum") loss.reduction = Reduction::Sum;
    else bad_value(key, value, "mean or sum");
  }
  else if (key == "tau_squared") loss.tau_squared = to_bool(key, value);
  else if (key == "mode") mode = parse_mode(value);
  else if (key == "seeds") {
    seeds.clear();
    for (const auto& s : split_list(value)) seeds.push_back(to_u64(key, s));
  }
  else if (key == "out") out_dir = value;
  else if (key == "jobs") jobs = to_index(key, value);
  else if (key == "ablation.modes") {
    ablation_modes.clear();
    for (const auto& s : split_list(value)) ablation_modes.push_back(parse_mode(s));
  }
  else if (key == "ablation.kinds") {
    ablation_kinds.clear();
    for (const auto& s : split_list(value)) ablation_kinds.push_back(parse_pretext_kind(s));
  }
  else if (key == "ablation.terms") {
    ablation_terms.clear();
    for (const auto& s : split_list(value)) ablation_terms.push_back(TermSet::parse(s));
  }
  else if (key == "label_ratio.per_class") {
    label_ratio_per_class.clear();
    for (const auto& s : split_list(value)) label_ratio_per_class.push_back(to_index(key, s));
  }
  else throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::validate() const {
  train.validate();
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (mode == Mode::SS && !(train.loss.alpha > 0.0)) {
    throw ConfigError("mode ss needs alpha > 0");
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) throw ConfigError("mask_ratio must lie in (0, 1)");
  if (pretext_k < 0 || pca_dim < 0) throw ConfigError("pretext_k and pca_dim must be >= 0");
  if (kmeans_restarts < 1) throw ConfigError("kmeans_restarts must be >= 1");
  if (jobs < 0) throw ConfigError("jobs must be >= 0");
  if (split.train_per_class < 1 || split.val_per_class < 0) {
    throw ConfigError("train_per_class must be >= 1 and val_per_class >= 0");
  }
  for (const auto& t : ablation_terms) {
    if (!t.nc && !t.ss && !t.m) throw ConfigError("empty distillation term set");
  }
  for (Index c : label_ratio_per_class) {
    if (c < 1) throw ConfigError("label_ratio.per_class entries must be >= 1");
  }
}

std::string RunConfig::to_text() const {
  const auto& loss = train.loss;
  std::ostringstream o;
  o << "dataset=" << (dataset_dir.empty() ? "-" : dataset_dir)
    << " synthetic.blocks=" << synthetic.blocks << " synthetic.per_block=" << synthetic.per_block
    << " synthetic.p_in=" << format_double(synthetic.p_in)
    << " synthetic.p_out=" << format_double(synthetic.p_out)
    << " synthetic.features=" << synthetic.num_features
    << " synthetic.shift=" << format_double(synthetic.shift)
    << " synthetic.seed=" << synthetic.seed << " row_normalize=" << (row_normalize ? "true" : "false")
    << " split=" << (split.mode == SplitSpec::Mode::PublicFile ? "public" : "sample")
    << " train_per_class=" << split.train_per_class << " val_per_class=" << split.val_per_class
    << " split_seed=" << split.seed << " pretext=" << to_string(pretext)
    << " pretext_k=" << pretext_k << " epsilon=" << format_double(epsilon)
    << " mask_ratio=" << format_double(mask_ratio) << " pca_dim=" << pca_dim
    << " kmeans_restarts=" << kmeans_restarts << " hidden=" << train.hidden
    << " dropout=" << format_double(train.dropout) << " lr=" << format_double(train.learning_rate)
    << " weight_decay=" << format_double(train.weight_decay) << " max_epochs=" << train.max_epochs
    << " patience=" << train.patience << " alpha=" << format_double(loss.alpha)
    << " beta1=" << format_double(loss.beta1) << " beta2=" << format_double(loss.beta2)
    << " tau=" << format_double(loss.tau) << " w_sd_nc=" << format_double(loss.w_sd_nc)
    << " w_sd_ss=" << format_double(loss.w_sd_ss) << " w_sd_m=" << format_double(loss.w_sd_m)
    << " loss_reduction=" << (loss.reduction == Reduction::Mean ? "mean" : "sum")
    << " tau_squared=" << (loss.tau_squared ? "true" : "false") << " mode=" << to_string(mode)
    << " seeds=" << join(seeds, [](std::uint64_t s) { return std::to_string(s); })
    << " ablation.modes="
    << join(ablation_modes, [](Mode m) { return std::string(to_string(m)); })
    << " ablation.kinds="
    << join(ablation_kinds, [](PretextKind k) { return std::string(to_string(k)); })
    << " ablation.terms=" << join(ablation_terms, [](const TermSet& t) { return t.label(); })
    << " label_ratio.per_class="
    << join(label_ratio_per_class, [](Index c) { return std::to_string(c); });
  return o.str();
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  RunConfig cfg;
  std::string line;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    try {
      cfg.set(std::string_view(line).substr(0, eq), std::string_view(line).substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig resolve_config(const std::optional<fs::path>& file,
                         const std::vector<std::string>& overrides) {
  RunConfig cfg = file ? load_config(*file) : RunConfig{};
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + kv + "' is not key=value");
    cfg.set(std::string_view(kv).substr(0, eq), std::string_view(kv).substr(eq + 1));
  }
  if (cfg.seeds.empty()) {
    const char* env = std::getenv("SDSS_SEED");
    cfg.seeds.push_back(env && *env ? to_u64("SDSS_SEED", env) : 0);
  }
  return cfg;
}

std::string config_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

Dataset load_run_dataset(const RunConfig& cfg) {
  if (cfg.dataset_dir.empty()) {
    Dataset ds = generate_planted_partition(cfg.synthetic);
    if (cfg.row_normalize) row_normalize(ds.features);
    return ds;
  }
  const fs::path dir(cfg.dataset_dir);
  if (!fs::is_directory(dir)) throw ConfigError("dataset directory not found: " + dir.string());
  return load_dataset(dir, {cfg.row_normalize, cfg.split});
}

PretextTask build_pretext(const Dataset& ds, const RunConfig& cfg, PretextKind kind,
                          std::uint64_t seed) {
  const Index k = cfg.pretext_k > 0 ? cfg.pretext_k : ds.num_classes;
  const std::uint64_t task_seed = derive_seed(seed, 77);
  switch (kind) {
    case PretextKind::Degree: return make_degree_task(ds.graph);
    case PretextKind::Clustering:
      return make_clustering_task(ds.features, k, task_seed, cfg.kmeans_restarts);
    case PretextKind::Partitioning: return make_partition_task(ds.graph, k, cfg.epsilon, task_seed);
    case PretextKind::Completion: {
      const Index dim = cfg.pca_dim > 0
                            ? cfg.pca_dim
                            : std::min<Index>({32, ds.num_features(), ds.num_nodes()});
      return make_completion_task(ds.features, cfg.mask_ratio, dim, task_seed);
    }
  }
  throw ConfigError("unknown pretext kind");
}

std::string RunResult::pretext_label() const {
  return uses_pretext() ? std::string(to_string(spec.kind)) : "none";
}

std::string RunResult::terms_label() const {
  if (!two_stage()) return "none";
  TermSet t = spec.terms;
  if (spec.mode == Mode::SD) t.ss = false;
  return t.label();
}

std::string RunResult::stem() const {
  return std::string(to_string(spec.mode)) + "_" + pretext_label() + "_" + terms_label() +
         "_seed" + std::to_string(spec.seed);
}

TrainConfig teacher_config(const RunConfig& cfg, Mode mode) {
  TrainConfig t = cfg.train;
  if (mode == Mode::Baseline || mode == Mode::SD) t.loss.alpha = 0.0;
  t.loss.w_sd_nc = t.loss.w_sd_ss = t.loss.w_sd_m = 0.0;
  return t;
}

TrainConfig student_config(const RunConfig& cfg, Mode mode, const TermSet& terms) {
  TrainConfig s = cfg.train;
  s.loss.alpha = 0.0;
  s.loss.w_sd_nc = terms.nc ? cfg.train.loss.w_sd_nc : 0.0;
  s.loss.w_sd_ss = terms.ss && mode == Mode::SDSS ? cfg.train.loss.w_sd_ss : 0.0;
  s.loss.w_sd_m = terms.m ? cfg.train.loss.w_sd_m : 0.0;
  return s;
}

RunResult run_single(const Dataset& ds, const PretextTask* task, const RunConfig& cfg,
                     const RunSpec& spec) {
  RunResult r;
  r.spec = spec;
  const PretextTask* used = r.uses_pretext() ? task : nullptr;
  if (r.uses_pretext() && !task) throw ConfigError("mode needs a pretext task");
  r.teacher_cfg = teacher_config(cfg, spec.mode);
  TrainResult teacher = train_teacher(ds, used, r.teacher_cfg, spec.seed);
  r.teacher = std::move(teacher.report);
  if (r.two_stage()) {
    r.student_cfg = student_config(cfg, spec.mode, spec.terms);
    TrainResult student = train_student(ds, used, teacher.params, *r.student_cfg, spec.seed);
    r.student = std::move(student.report);
    r.final_params = std::move(student.params);
    r.test_acc = r.student->test_acc;
    r.val_acc = r.student->best_val_acc;
  } else {
    r.final_params = std::move(teacher.params);
    r.test_acc = r.teacher.test_acc;
    r.val_acc = r.teacher.best_val_acc;
  }
  return r;
}

namespace {

std::string stage_config_record(const char* stage, const TrainConfig& c) {
  std::ostringstream o;
  o << "record=stage_config stage=" << stage << " alpha=" << format_double(c.loss.alpha)
    << " beta1=" << format_double(c.loss.beta1) << " beta2=" << format_double(c.loss.beta2)
    << " tau=" << format_double(c.loss.tau) << " w_sd_nc=" << format_double(c.loss.w_sd_nc)
    << " w_sd_ss=" << format_double(c.loss.w_sd_ss) << " w_sd_m=" << format_double(c.loss.w_sd_m)
    << '\n';
  return o.str();
}

}  // namespace

std::string result_record(const RunResult& r) {
  std::ostringstream o;
  const auto& s = r.student_cfg ? r.student_cfg->loss : LossConfig{0, 0, 0, 0, 0, 0, 0};
  o << "record=result mode=" << to_string(r.spec.mode) << " pretext=" << r.pretext_label()
    << " terms=" << r.terms_label() << " seed=" << r.spec.seed
    << " alpha=" << format_double(r.teacher_cfg.loss.alpha)
    << " w_sd_nc=" << format_double(r.student_cfg ? s.w_sd_nc : 0.0)
    << " w_sd_ss=" << format_double(r.student_cfg ? s.w_sd_ss : 0.0)
    << " w_sd_m=" << format_double(r.student_cfg ? s.w_sd_m : 0.0)
    << " teacher_best_epoch=" << r.teacher.best_epoch
    << " teacher_test_acc=" << format_double(r.teacher.test_acc);
  if (r.student) o << " student_best_epoch=" << r.student->best_epoch;
  o << " val_acc=" << format_double(r.val_acc) << " test_acc=" << format_double(r.test_acc);
  return o.str();
}

void write_run_report(std::ostream& out, const RunConfig& cfg, const RunResult& r) {
  out << "record=config " << cfg.to_text() << " run.mode=" << to_string(r.spec.mode)
      << " run.pretext=" << r.pretext_label() << " run.terms=" << r.terms_label()
      << " run.seed=" << r.spec.seed << '\n';
  out << stage_config_record("teacher", r.teacher_cfg);
  write_report(out, r.teacher);
  if (r.student) {
    out << stage_config_record("student", *r.student_cfg);
    write_report(out, *r.student);
  }
  out << result_record(r) << '\n';
}

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  out.runs = static_cast<Index>(xs.size());
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

void parallel_for(Index count, Index jobs, const std::function<void(Index)>& fn) {
  if (count <= 0) return;
  Index threads = jobs > 0 ? jobs : static_cast<Index>(std::thread::hardware_concurrency());
  threads = std::clamp<Index>(threads, 1, count);
  if (threads == 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (Index t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (Index i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace {

// Stages artifacts in a hidden directory and moves them into place on
// commit(); uncommitted staging is removed.
class Staging {
 public:
  explicit Staging(fs::path out) : out_(std::move(out)) {
    fs::create_directories(out_);
    std::random_device rd;
    dir_ = out_ / (".staging-" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  ~Staging() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(dir_, ec);
    }
  }
  Staging(const Staging&) = delete;
  Staging& operator=(const Staging&) = delete;

  fs::path path(const fs::path& name) const {
    fs::create_directories((dir_ / name).parent_path());
    return dir_ / name;
  }
  std::ofstream open(const fs::path& name) const {
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw DataError("cannot write " + path(name).string());
    return out;
  }
  void commit() {
    for (const auto& entry : fs::directory_iterator(dir_)) {
      merge(entry.path(), out_ / entry.path().filename());
    }
    fs::remove_all(dir_);
    committed_ = true;
  }

 private:
  static void merge(const fs::path& from, const fs::path& to) {
    if (fs::is_directory(from)) {
      fs::create_directories(to);
      for (const auto& entry : fs::directory_iterator(from)) {
        merge(entry.path(), to / entry.path().filename());
      }
      return;
    }
    if (fs::exists(to)) fs::remove(to);
    fs::rename(from, to);
  }

  fs::path out_;
  fs::path dir_;
  bool committed_ = false;
};

std::string percent(const MeanStd& m) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f +- %.2f", 100.0 * m.mean, 100.0 * m.stddev);
  return buf;
}

std::string aggregate_fields(const MeanStd& m) {
  return "mean_test_acc=" + format_double(m.mean) + " std_test_acc=" + format_double(m.stddev) +
         " runs=" + std::to_string(m.runs);
}

TermSet default_terms(Mode mode) {
  return mode == Mode::SD ? TermSet{true, false, true} : TermSet{true, true, true};
}

bool mode_uses_pretext(Mode m) { return m == Mode::SS || m == Mode::SDSS; }

// Pretext tasks keyed by (kind, seed), built once and shared by runs.
class TaskCache {
 public:
  TaskCache(const Dataset& ds, const RunConfig& cfg, const std::vector<RunSpec>& specs) {
    std::vector<std::pair<PretextKind, std::uint64_t>> keys;
    for (const auto& s : specs) {
      if (!mode_uses_pretext(s.mode)) continue;
      auto key = std::make_pair(s.kind, s.seed);
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
    std::vector<std::optional<PretextTask>> built(keys.size());
    parallel_for(static_cast<Index>(keys.size()), cfg.jobs, [&](Index i) {
      built[i] = build_pretext(ds, cfg, keys[i].first, keys[i].second);
    });
    for (size_t i = 0; i < keys.size(); ++i) tasks_.emplace(keys[i], std::move(*built[i]));
  }

  const PretextTask* get(const RunSpec& s) const {
    auto it = tasks_.find({s.kind, s.seed});
    return it == tasks_.end() ? nullptr : &it->second;
  }

 private:
  std::map<std::pair<PretextKind, std::uint64_t>, PretextTask> tasks_;
};

std::vector<RunResult> run_all(const Dataset& ds, const RunConfig& cfg,
                               const std::vector<RunSpec>& specs) {
  const TaskCache tasks(ds, cfg, specs);
  std::vector<std::optional<RunResult>> results(specs.size());
  parallel_for(static_cast<Index>(specs.size()), cfg.jobs, [&](Index i) {
    results[i] = run_single(ds, tasks.get(specs[i]), cfg, specs[i]);
  });
  std::vector<RunResult> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

}  // namespace

TrainSummary cmd_train(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Dataset ds = load_run_dataset(cfg);
  std::vector<RunSpec> specs;
  for (auto seed : cfg.seeds) specs.push_back({cfg.mode, cfg.pretext, default_terms(cfg.mode), seed});

  TrainSummary summary;
  summary.runs = run_all(ds, cfg, specs);
  std::vector<double> accs;
  for (const auto& r : summary.runs) accs.push_back(r.test_acc);
  summary.test_acc = mean_std(accs);

  Staging staging(cfg.out_dir);
  const std::string hash = config_hash(cfg.to_text());
  for (const auto& r : summary.runs) {
    auto rep = staging.open(r.stem() + ".report");
    write_run_report(rep, cfg, r);
    write_checkpoint(staging.path(r.stem() + ".ckpt"), r.final_params, {r.spec.seed, hash});
  }
  const std::string label = std::string(to_string(cfg.mode)) + "_" +
                            (mode_uses_pretext(cfg.mode) ? std::string(to_string(cfg.pretext))
                                                         : std::string("none"));
  {
    auto out = staging.open("summary_" + label + ".txt");
    out << "record=config " << cfg.to_text() << " config_hash=" << hash << '\n';
    for (const auto& r : summary.runs) out << result_record(r) << '\n';
    out << "record=aggregate mode=" << to_string(cfg.mode) << ' '
        << aggregate_fields(summary.test_acc) << '\n';
  }
  staging.commit();

  for (const auto& r : summary.runs) {
    log << r.stem() << ": test accuracy " << format_double(100.0 * r.test_acc) << "%\n";
  }
  log << to_string(cfg.mode) << " test accuracy over " << summary.test_acc.runs
      << " seed(s): " << percent(summary.test_acc) << "%\n";
  return summary;
}

std::vector<AblationRow> cmd_ablation(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  for (Mode m : cfg.ablation_modes) {
    if (mode_uses_pretext(m) && !(cfg.train.loss.alpha > 0.0)) {
      throw ConfigError("ablation with ss/sdss needs alpha > 0");
    }
  }
  const Dataset ds = load_run_dataset(cfg);

  // Grid rows; each row expands to one run per seed.
  std::vector<RunSpec> rows;
  for (Mode m : cfg.ablation_modes) {
    switch (m) {
      case Mode::Baseline:
        rows.push_back({m, cfg.pretext, TermSet{}, 0});
        break;
      case Mode::SS:
        for (auto k : cfg.ablation_kinds) rows.push_back({m, k, TermSet{}, 0});
        break;
      case Mode::SD:
        for (const auto& t : cfg.ablation_terms) {
          if (!t.ss) rows.push_back({m, cfg.pretext, t, 0});
        }
        break;
      case Mode::SDSS:
        for (auto k : cfg.ablation_kinds) {
          for (const auto& t : cfg.ablation_terms) rows.push_back({m, k, t, 0});
        }
        break;
    }
  }
  std::vector<RunSpec> specs;
  for (const auto& row : rows) {
    for (auto seed : cfg.seeds) {
      RunSpec s = row;
      s.seed = seed;
      specs.push_back(s);
    }
  }
  const std::vector<RunResult> results = run_all(ds, cfg, specs);

  std::vector<AblationRow> table;
  const size_t per_row = cfg.seeds.size();
  for (size_t r = 0; r < rows.size(); ++r) {
    std::vector<double> accs;
    for (size_t s = 0; s < per_row; ++s) accs.push_back(results[r * per_row + s].test_acc);
    const RunResult& first = results[r * per_row];
    table.push_back({rows[r].mode, first.pretext_label(), first.terms_label(), first.teacher_cfg,
                     first.student_cfg, mean_std(accs)});
  }

  Staging staging(cfg.out_dir);
  for (const auto& res : results) {
    auto rep = staging.open(fs::path("ablation_runs") / (res.stem() + ".report"));
    write_run_report(rep, cfg, res);
  }
  {
    auto rec = staging.open("ablation.records");
    rec << "record=config " << cfg.to_text() << " config_hash=" << config_hash(cfg.to_text())
        << '\n';
    for (const auto& res : results) rec << result_record(res) << '\n';
    for (const auto& row : table) {
      const LossConfig s = row.student_cfg ? row.student_cfg->loss : LossConfig{0, 0, 0, 0, 0, 0, 0};
      rec << "record=ablation mode=" << to_string(row.mode) << " pretext=" << row.pretext
          << " terms=" << row.terms << " alpha=" << format_double(row.teacher_cfg.loss.alpha)
          << " w_sd_nc=" << format_double(s.w_sd_nc) << " w_sd_ss=" << format_double(s.w_sd_ss)
          << " w_sd_m=" << format_double(s.w_sd_m) << ' ' << aggregate_fields(row.test_acc)
          << '\n';
    }
  }
  std::ostringstream text;
  char line[160];
  std::snprintf(line, sizeof(line), "%-9s %-13s %-9s %-18s\n", "mode", "pretext", "terms",
                "test acc (%)");
  text << line;
  for (const auto& row : table) {
    std::snprintf(line, sizeof(line), "%-9s %-13s %-9s %-18s\n",
                  std::string(to_string(row.mode)).c_str(), row.pretext.c_str(),
                  row.terms.c_str(), percent(row.test_acc).c_str());
    text << line;
  }
  staging.open("ablation.txt") << text.str();
  staging.commit();
  log << text.str();
  return table;
}

std::vector<LabelRatioPoint> cmd_label_ratio(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (!(cfg.train.loss.alpha > 0.0)) throw ConfigError("label-ratio runs ss/sdss, needs alpha > 0");
  const Dataset base = load_run_dataset(cfg);
  const std::vector<Mode> modes{Mode::Baseline, Mode::SS, Mode::SD, Mode::SDSS};

  struct Job {
    Index per_class;
    RunSpec spec;
  };
  std::vector<Job> jobs;
  for (Index c : cfg.label_ratio_per_class) {
    for (Mode m : modes) {
      for (auto seed : cfg.seeds) jobs.push_back({c, {m, cfg.pretext, default_terms(m), seed}});
    }
  }
  // One resampled split per (per_class, seed), shared by the four modes.
  std::map<std::pair<Index, std::uint64_t>, Dataset> variants;
  for (Index c : cfg.label_ratio_per_class) {
    for (auto seed : cfg.seeds) {
      SplitSpec spec{SplitSpec::Mode::PerClassSample, c, cfg.split.val_per_class,
                     derive_seed(seed, 500 + static_cast<std::uint64_t>(c))};
      Dataset ds = base;
      ds.split = sample_split(ds.labels, ds.num_classes, spec);
      variants.emplace(std::make_pair(c, seed), std::move(ds));
    }
  }
  std::vector<RunSpec> task_specs;
  for (const auto& j : jobs) task_specs.push_back(j.spec);
  const TaskCache tasks(base, cfg, task_specs);

  std::vector<std::optional<RunResult>> results(jobs.size());
  parallel_for(static_cast<Index>(jobs.size()), cfg.jobs, [&](Index i) {
    const Dataset& ds = variants.at({jobs[i].per_class, jobs[i].spec.seed});
    results[i] = run_single(ds, tasks.get(jobs[i].spec), cfg, jobs[i].spec);
  });

  std::vector<LabelRatioPoint> curve;
  const size_t per_point = cfg.seeds.size();
  for (size_t p = 0; p * per_point < jobs.size(); ++p) {
    std::vector<double> accs;
    for (size_t s = 0; s < per_point; ++s) accs.push_back(results[p * per_point + s]->test_acc);
    curve.push_back({jobs[p * per_point].per_class, jobs[p * per_point].spec.mode, mean_std(accs)});
  }

  Staging staging(cfg.out_dir);
  {
    auto rec = staging.open("label_ratio.records");
    rec << "record=config " << cfg.to_text() << " config_hash=" << config_hash(cfg.to_text())
        << '\n';
    for (size_t i = 0; i < jobs.size(); ++i) {
      rec << "record=result per_class=" << jobs[i].per_class << ' '
          << result_record(*results[i]).substr(std::string("record=result ").size()) << '\n';
    }
    for (const auto& pt : curve) {
      rec << "record=label_ratio per_class=" << pt.per_class << " mode=" << to_string(pt.mode)
          << ' ' << aggregate_fields(pt.test_acc) << '\n';
    }
  }
  std::ostringstream text;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %-9s %-18s\n", "per_class", "mode", "test acc (%)");
  text << line;
  for (const auto& pt : curve) {
    std::snprintf(line, sizeof(line), "%-10lld %-9s %-18s\n", static_cast<long long>(pt.per_class),
                  std::string(to_string(pt.mode)).c_str(), percent(pt.test_acc).c_str());
    text << line;
  }
  staging.open("label_ratio.txt") << text.str();
  staging.commit();
  log << text.str();
  return curve;
}

PretextTask cmd_pretext_export(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Dataset ds = load_run_dataset(cfg);
  const std::uint64_t seed = cfg.seeds.front();
  PretextTask task = build_pretext(ds, cfg, cfg.pretext, seed);

  Staging staging(cfg.out_dir);
  if (task.is_classification()) {
    write_labels_file(staging.path("pretext_targets.txt"), task.class_targets, task.output_dim);
  } else if (task.kind == PretextKind::Degree) {
    // Degrees are integers, so they go out in the labels format.
    IndexList deg(task.num_nodes());
    for (Index v = 0; v < task.num_nodes(); ++v) {
      deg[v] = static_cast<Index>(task.regression_targets(v, 0));
    }
    write_labels_file(staging.path("pretext_targets.txt"), deg,
                      *std::max_element(deg.begin(), deg.end()) + 1);
  } else {
    write_features_file(staging.path("pretext_targets.txt"), task.regression_targets);
  }
  if (task.input_override) {
    write_features_file(staging.path("pretext_input.txt"), *task.input_override);
    auto mask = staging.open("pretext_mask.txt");
    mask << "mask:";
    for (Index v : task.mask) mask << ' ' << v;
    mask << '\n';
  }
  {
    auto meta = staging.open("pretext_meta.txt");
    meta << "record=pretext kind=" << to_string(task.kind)
         << " type=" << (task.is_classification() ? "classification" : "regression")
         << " output_dim=" << task.output_dim << " nodes=" << task.num_nodes()
         << " seed=" << seed;
    if (task.kind == PretextKind::Partitioning) {
      meta << " imbalance=" << format_double(partition_imbalance(task.class_targets,
                                                                 task.output_dim))
           << " edge_cut=" << edge_cut(ds.graph, task.class_targets);
    }
    meta << "\nrecord=config " << cfg.to_text() << '\n';
  }
  staging.commit();
  log << "wrote " << to_string(task.kind) << " targets (" << task.num_nodes() << " x "
      << task.output_dim << ") to " << cfg.out_dir.string() << '\n';
  return task;
}

Dataset cmd_gen_synthetic(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  Dataset ds = generate_planted_partition(cfg.synthetic);
  Staging staging(cfg.out_dir);
  write_graph_file(staging.path("graph.txt"), ds.graph);
  write_features_file(staging.path("features.txt"), ds.features);
  write_labels_file(staging.path("labels.txt"), ds.labels, ds.num_classes);
  write_split_file(staging.path("split.txt"), ds.split);
  staging.commit();
  log << "wrote planted-partition dataset (" << ds.num_nodes() << " nodes, "
      << ds.graph.num_edges() << " edges, " << ds.num_classes << " classes) to "
      << cfg.out_dir.string() << '\n';
  return ds;
}

}  // namespace sdss
