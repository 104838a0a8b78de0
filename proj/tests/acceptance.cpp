// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero when any criterion fails.
//
// Cora runs need a converted dataset directory in $SDSS_CORA_DIR (see
// tools/convert_planetoid.py); without it those checks are skipped.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>

#include "sdss/bench.hpp"
#include "sdss/dense.hpp"
#include "test_util.hpp"

using namespace sdss;
using namespace sdss::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

int failures = 0;

void report(int id, const char* status, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, status, detail.c_str());
  std::fflush(stdout);
  if (std::string(status) == "FAIL") ++failures;
}

void verdict(int id, bool ok, const std::string& detail) { report(id, ok ? "PASS" : "FAIL", detail); }

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sdss_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness
// ---------------------------------------------------------------------------

void criterion_gradients() {
  const auto start = Clock::now();
  double worst = 0.0;
  Index checks = 0;
  for (std::uint64_t g = 0; g < 10; ++g) {
    const Index n = 9 + static_cast<Index>(g % 7);  // 9..15 nodes
    const Dataset ds = random_dataset(n, 4, 3, 1000 + g, 0.3);
    for (auto kind : {PretextKind::Degree, PretextKind::Clustering, PretextKind::Partitioning,
                      PretextKind::Completion}) {
      const PretextTask task = small_task(ds, kind, g);
      const Index p = task.output_dim;
      const ModelParams teacher = init_params(4, 6, 3, p, 0.0, derive_seed(g, 1));
      const ModelParams params = init_params(4, 6, 3, p, 0.0, derive_seed(g, 2));

      ObjectiveSetup s{&ds, &task, LossConfig{}, false, nullptr};
      worst = std::max(worst, gradient_check(params, s));
      ++checks;
      // Every non-empty subset of the three distillation terms.
      for (int mask = 1; mask < 8; ++mask) {
        ObjectiveSetup st{&ds, &task, LossConfig{}, true, &teacher};
        st.cfg.w_sd_nc = (mask & 1) ? 1.0 : 0.0;
        st.cfg.w_sd_ss = (mask & 2) ? 1.0 : 0.0;
        st.cfg.w_sd_m = (mask & 4) ? 1.0 : 0.0;
        worst = std::max(worst, gradient_check(params, st));
        ++checks;
      }
    }
  }
  const double t = seconds_since(start);
  verdict(1, worst < 1e-5 && t < 60.0,
          "gradient check: max relative error " + fmt("%.3g", worst) + " over " +
              std::to_string(checks) + " objectives (limit 1e-5), " + fmt("%.1f", t) +
              " s (limit 60 s)");
}

// ---------------------------------------------------------------------------
// 2. Loss identities
// ---------------------------------------------------------------------------

void criterion_loss_identities() {
  double a = 0.0, c_min = std::numeric_limits<double>::infinity(), d = 0.0;
  const IndexList idx{0, 1, 2, 3, 4};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Matrix z = random_matrix(5, 4, seed, 4.0);
    const Matrix t = random_matrix(5, 4, seed + 5000, 4.0);
    const IndexList y{0, 1, 2, 3, 1};
    LossConfig cfg;
    cfg.beta1 = 1.0;
    a = std::max(a, std::abs(loss_sd_nc(z, z, y, idx, cfg).value));
    for (double tau : {0.5, 1.0, 2.0, 10.0}) c_min = std::min(c_min, kl_soft(z, t, idx, tau).value);
    cfg.beta1 = 0.6;
    const double nc_kl = loss_sd_nc(z, t, y, idx, cfg).value -
                         0.4 * cross_entropy(z, y, idx).value;
    c_min = std::min(c_min, nc_kl / 0.6);
    const Index m = 2 + static_cast<Index>(seed % 20);
    const Matrix uniform = Matrix::Constant(3, m, static_cast<double>(seed) - 100.0);
    const IndexList ty{0, m - 1, m / 2};
    d = std::max(d, std::abs(cross_entropy(uniform, ty, {0, 1, 2}).value -
                             std::log(static_cast<double>(m))));
  }
  const double below = smooth_l1(std::nextafter(1.0, 0.0));
  const double at = smooth_l1(1.0);
  const bool b_ok = std::abs(below - 0.5) < 1e-12 && at == 0.5 && smooth_l1(-1.0) == 0.5;
  verdict(2, a <= 1e-9 && b_ok && c_min >= -1e-12 && d <= 1e-12,
          "(a) max |L_SD-NC| at beta1=1, Zs=Zt: " + fmt("%.3g", a) +
              "; (b) smooth-L1 at |r|=1: quadratic " + fmt("%.17g", below) + ", linear " +
              fmt("%.17g", at) + "; (c) min KL " + fmt("%.3g", c_min) +
              "; (d) max |CE(uniform) - ln m| " + fmt("%.3g", d));
}

// ---------------------------------------------------------------------------
// 3. Oracle equivalence
// ---------------------------------------------------------------------------

double exhaustive_kmeans(const Matrix& X, Index k) {
  const Index n = X.rows();
  IndexList assign(n, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    std::vector<Index> count(k, 0);
    for (Index c : assign) ++count[c];
    if (std::all_of(count.begin(), count.end(), [](Index c) { return c > 0; })) {
      Matrix mean = Matrix::Zero(k, X.cols());
      for (Index i = 0; i < n; ++i) mean.row(assign[i]) += X.row(i);
      for (Index c = 0; c < k; ++c) mean.row(c) /= static_cast<double>(count[c]);
      double inertia = 0.0;
      for (Index i = 0; i < n; ++i) inertia += (X.row(i) - mean.row(assign[i])).squaredNorm();
      best = std::min(best, inertia);
    }
    Index pos = 0;
    while (pos < n && ++assign[pos] == k) assign[pos++] = 0;
    if (pos == n) break;
  }
  return best;
}

Index exhaustive_balanced_cut(const Graph& g, Index cap) {
  const Index n = g.num_nodes();
  Index best = std::numeric_limits<Index>::max();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const Index ones = __builtin_popcount(mask);
    if (ones > cap || n - ones > cap) continue;
    Index cut = 0;
    for (const auto& [u, v] : g.edges()) cut += ((mask >> u) & 1u) != ((mask >> v) & 1u);
    best = std::min(best, cut);
  }
  return best;
}

void criterion_oracles() {
  double spmm_err = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Index n = 1 + static_cast<Index>(seed);  // 1..50
    const Graph g = random_graph(n, 0.1 + 0.01 * static_cast<double>(seed % 30), seed);
    const Matrix H = random_matrix(n, 6, seed + 77);
    const Matrix diff =
        spmm(normalize(g), H) - dense_product_oracle(dense_normalized_oracle(g), H);
    spmm_err = std::max(spmm_err, diff.cwiseAbs().maxCoeff());
  }

  double kmeans_gap = -std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Index n = 4 + static_cast<Index>(seed % 5);  // 4..8 points
    const Matrix X = random_matrix(n, 2, seed + 300);
    for (Index k : {2, 3}) {
      const double got = kmeans(X, k, {20, 300, seed}).inertia;
      kmeans_gap = std::max(kmeans_gap, got - exhaustive_kmeans(X, k));
    }
  }

  std::vector<Edge> path;
  for (Index i = 0; i + 1 < 6; ++i) path.emplace_back(i, i + 1);
  const Graph p6(6, path);
  const Index oracle = exhaustive_balanced_cut(p6, 3);
  Index worst_cut = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    worst_cut = std::max(worst_cut, balanced_partition(p6, 2, 0.1, seed).cut);
  }

  double pca_err = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Index f = 2 + static_cast<Index>(seed % 8);
    const Matrix X = random_matrix(f + 10, f, seed + 900, 3.0);
    const PcaModel m = pca_fit(X, f);
    pca_err = std::max(pca_err, (pca_inverse(m, pca_transform(m, X)) - X).cwiseAbs().maxCoeff());
  }

  verdict(3,
          spmm_err <= 1e-12 && kmeans_gap <= 1e-9 && oracle == 1 && worst_cut == oracle &&
              pca_err < 1e-6,
          "spmm max error " + fmt("%.3g", spmm_err) + "; k-means inertia minus exhaustive best " +
              fmt("%.3g", kmeans_gap) + "; path-of-6 cut " + std::to_string(worst_cut) +
              " (oracle " + std::to_string(oracle) + "); PCA reconstruction error " +
              fmt("%.3g", pca_err));
}

// ---------------------------------------------------------------------------
// 4. Balance invariant
// ---------------------------------------------------------------------------

void criterion_balance() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  Index feasible = 0, infeasible = 0, violations = 0, wrong_throw = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index k = 2 + static_cast<Index>(rng() % 7);
    const Index n = k + static_cast<Index>(rng() % (201 - k));
    const double p = (1.0 + static_cast<double>(rng() % 5)) / static_cast<double>(n);
    const Graph g = random_graph(n, p, rng());
    // Smallest achievable K · max|C_i| / n is K · ceil(n/K) / n.
    const bool can_balance =
        static_cast<double>(k * ((n + k - 1) / k)) / static_cast<double>(n) <= 1.1 + 1e-12;
    try {
      const PartitionResult r = balanced_partition(g, k, 0.1, rng());
      ++feasible;
      const double imb = partition_imbalance(r.part, k);
      worst = std::max(worst, imb);
      if (imb > 1.1 + 1e-12) ++violations;
      if (!can_balance) ++violations;
    } catch (const std::invalid_argument&) {
      ++infeasible;
      if (can_balance) ++wrong_throw;
    }
  }
  const double t = seconds_since(start);
  verdict(4, violations == 0 && wrong_throw == 0 && t < 120.0,
          std::to_string(feasible) + " partitions, max K*max|C|/n " + fmt("%.4f", worst) +
              " (limit 1.1), " + std::to_string(violations) + " violations; " +
              std::to_string(infeasible) + " generations rejected as unsatisfiable (" +
              std::to_string(wrong_throw) + " wrongly), " + fmt("%.1f", t) + " s (limit 120 s)");
}

// ---------------------------------------------------------------------------
// 5 and 6. Quantitative runs
// ---------------------------------------------------------------------------

std::vector<std::uint64_t> ten_seeds() { return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}; }

// Test accuracy per seed for one mode.
std::vector<double> run_mode(const Dataset& ds, const RunConfig& cfg, Mode mode) {
  const auto seeds = ten_seeds();
  std::vector<std::optional<PretextTask>> tasks(seeds.size());
  std::vector<double> acc(seeds.size());
  const bool ssl = mode == Mode::SS || mode == Mode::SDSS;
  parallel_for(static_cast<Index>(seeds.size()), 0, [&](Index i) {
    if (ssl) tasks[i] = build_pretext(ds, cfg, cfg.pretext, seeds[i]);
    const RunSpec spec{mode, cfg.pretext, TermSet{}, seeds[i]};
    acc[i] = run_single(ds, ssl ? &*tasks[i] : nullptr, cfg, spec).test_acc;
  });
  return acc;
}

std::optional<Dataset> cora_dataset(RunConfig& cfg) {
  const char* dir = std::getenv("SDSS_CORA_DIR");
  if (!dir || !*dir || !fs::is_directory(dir)) return std::nullopt;
  cfg.dataset_dir = dir;
  cfg.row_normalize = true;
  cfg.split.mode = SplitSpec::Mode::PublicFile;
  return load_run_dataset(cfg);
}

std::string pct(double x) { return fmt("%.2f", 100.0 * x); }

void criteria_quantitative() {
  RunConfig cora_cfg;
  std::optional<Dataset> cora = cora_dataset(cora_cfg);
  std::optional<double> cora_baseline;
  if (!cora) {
    report(5, "SKIP", "SDSS_CORA_DIR not set to a converted Cora directory");
  } else {
    const auto start = Clock::now();
    const MeanStd m = mean_std(run_mode(*cora, cora_cfg, Mode::Baseline));
    const double t = seconds_since(start);
    cora_baseline = m.mean;
    verdict(5, std::abs(100.0 * m.mean - 81.8) <= 1.5 && t < 300.0,
            "Cora baseline mean test accuracy " + pct(m.mean) + " +- " + pct(m.stddev) +
                " (target 81.8 +- 1.5), " + fmt("%.1f", t) + " s (limit 300 s)");
  }

  const auto start = Clock::now();
  std::string detail;
  bool ok = true;
  if (cora) {
    const MeanStd sdss = mean_std(run_mode(*cora, cora_cfg, Mode::SDSS));
    const double gain = 100.0 * (sdss.mean - *cora_baseline);
    ok = ok && gain >= 1.0;
    detail += "Cora sdss " + pct(sdss.mean) + " vs baseline " + pct(*cora_baseline) + " (gain " +
              fmt("%.2f", gain) + ", need >= 1.0); ";
  } else {
    detail += "Cora part skipped; ";
  }

  RunConfig cfg;  // shipped benchmark with default settings
  const Dataset ds = load_run_dataset(cfg);
  const auto base = run_mode(ds, cfg, Mode::Baseline);
  const auto ss = run_mode(ds, cfg, Mode::SS);
  const auto sd = run_mode(ds, cfg, Mode::SD);
  const auto sdss = run_mode(ds, cfg, Mode::SDSS);
  Index ordered = 0;
  for (size_t i = 0; i < base.size(); ++i) {
    const double mid = std::max(ss[i], sd[i]);
    if (base[i] <= mid && mid <= sdss[i]) ++ordered;
  }
  const double mb = mean_std(base).mean, ms = mean_std(sdss).mean;
  const double t = seconds_since(start);
  const bool mean_ok = 100.0 * ms >= 100.0 * mb - 0.5;
  ok = ok && mean_ok && ordered >= 7 && t < 600.0;
  detail += "planted partition: baseline " + pct(mb) + ", ss " + pct(mean_std(ss).mean) +
            ", sd " + pct(mean_std(sd).mean) + ", sdss " + pct(ms) + " (sdss >= baseline - 0.5: " +
            (mean_ok ? "yes" : "no") + "); ordering baseline <= max(ss, sd) <= sdss in " +
            std::to_string(ordered) + "/10 seeds (need 7); " + fmt("%.1f", t) +
            " s (limit 600 s)";
  verdict(6, ok, detail);
}

// ---------------------------------------------------------------------------
// 7. Ablation protocol
// ---------------------------------------------------------------------------

RunConfig small_config(const fs::path& out) {
  RunConfig c;
  c.out_dir = out;
  c.seeds = {0, 1};
  c.train.max_epochs = 4;
  return c;
}

void criterion_ablation() {
  const fs::path out = scratch("ablation");
  RunConfig cfg = small_config(out);
  std::ostringstream log;
  const auto rows = cmd_ablation(cfg, log);
  const std::string records = slurp(out / "ablation.records");

  std::vector<std::string> problems;
  const std::vector<std::pair<std::string, std::string>> term_sets{
      {"nc", "w_sd_nc=1 w_sd_ss=0 w_sd_m=0"},
      {"nc+m", "w_sd_nc=1 w_sd_ss=0 w_sd_m=1"},
      {"nc+ss+m", "w_sd_nc=1 w_sd_ss=1 w_sd_m=1"}};
  for (const char* kind : {"degree", "clustering", "partitioning", "completion"}) {
    const std::string ss_row = std::string("record=ablation mode=ss pretext=") + kind +
                               " terms=none alpha=0.1 w_sd_nc=0 w_sd_ss=0 w_sd_m=0 ";
    if (records.find(ss_row) == std::string::npos) problems.push_back(std::string("ss/") + kind);
    for (const auto& [terms, mult] : term_sets) {
      const std::string row = std::string("record=ablation mode=sdss pretext=") + kind +
                              " terms=" + terms + " alpha=0.1 " + mult + " ";
      if (records.find(row) == std::string::npos) {
        problems.push_back(std::string("sdss/") + kind + "/" + terms);
      }
    }
  }
  for (const char* row : {"record=ablation mode=baseline pretext=none terms=none alpha=0 "
                          "w_sd_nc=0 w_sd_ss=0 w_sd_m=0 ",
                          "record=ablation mode=sd pretext=none terms=nc alpha=0 "
                          "w_sd_nc=1 w_sd_ss=0 w_sd_m=0 ",
                          "record=ablation mode=sd pretext=none terms=nc+m alpha=0 "
                          "w_sd_nc=1 w_sd_ss=0 w_sd_m=1 "}) {
    if (records.find(row) == std::string::npos) problems.push_back(row);
  }

  // Every per-run report carries the full config, the seed and the effective
  // multipliers of each stage.
  Index reports = 0;
  for (const auto& e : fs::directory_iterator(out / "ablation_runs")) {
    ++reports;
    const std::string text = slurp(e.path());
    const bool two_stage = e.path().filename().string().rfind("sd", 0) == 0;
    if (text.find("record=config ") == std::string::npos ||
        text.find(" run.seed=") == std::string::npos ||
        text.find("record=stage_config stage=teacher alpha=") == std::string::npos ||
        (two_stage && text.find("record=stage_config stage=student") == std::string::npos)) {
      problems.push_back(e.path().filename().string());
    }
  }
  const Index expected_runs = static_cast<Index>(rows.size() * cfg.seeds.size());
  if (reports != expected_runs) problems.push_back("report count");
  std::string detail = std::to_string(rows.size()) + " grid rows (modes x kinds x NC, NC+M, " +
                       "NC+SS+M), " + std::to_string(reports) + " run reports";
  if (!problems.empty()) detail += "; missing or wrong: " + problems.front();
  verdict(7, problems.empty() && rows.size() == 19, detail);
}

// ---------------------------------------------------------------------------
// 8. Determinism
// ---------------------------------------------------------------------------

void criterion_determinism() {
  struct Command {
    const char* name;
    std::function<void(const RunConfig&)> run;
    std::vector<std::string> files;
  };
  std::ostringstream log;
  const std::vector<Command> commands{
      {"train", [&](const RunConfig& c) { cmd_train(c, log); },
       {"summary_sdss_clustering.txt"}},
      {"ablation", [&](const RunConfig& c) { cmd_ablation(c, log); },
       {"ablation.records", "ablation.txt"}},
      {"label-ratio", [&](const RunConfig& c) { cmd_label_ratio(c, log); },
       {"label_ratio.records", "label_ratio.txt"}},
      {"pretext-export",
       [&](const RunConfig& c) {
         RunConfig p = c;
         p.pretext = PretextKind::Completion;
         cmd_pretext_export(p, log);
       },
       {"pretext_targets.txt", "pretext_input.txt", "pretext_meta.txt"}},
      {"gen-synthetic", [&](const RunConfig& c) { cmd_gen_synthetic(c, log); },
       {"graph.txt", "features.txt", "labels.txt", "split.txt"}}};

  std::vector<std::string> differing;
  for (const auto& cmd : commands) {
    const fs::path a = scratch(std::string("det_a_") + cmd.name);
    const fs::path b = scratch(std::string("det_b_") + cmd.name);
    RunConfig ca = small_config(a);
    ca.jobs = 3;
    RunConfig cb = small_config(b);
    cb.jobs = 1;
    cmd.run(ca);
    cmd.run(cb);
    for (const auto& f : cmd.files) {
      const std::string x = slurp(a / f);
      if (x.empty() || x != slurp(b / f)) differing.push_back(std::string(cmd.name) + "/" + f);
    }
  }
  verdict(8, differing.empty(),
          differing.empty()
              ? "train, ablation, label-ratio, pretext-export, gen-synthetic: summary records "
                "byte-identical across two invocations"
              : "differs: " + differing.front());
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<void()>>> criteria{
      {1, criterion_gradients}, {2, criterion_loss_identities}, {3, criterion_oracles},
      {4, criterion_balance},   {5, criteria_quantitative},     {7, criterion_ablation},
      {8, criterion_determinism}};
  for (const auto& [id, fn] : criteria) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, "FAIL", std::string("exception: ") + e.what());
    }
  }
  return failures == 0 ? 0 : 1;
}
