// Command-line front end. Exit codes: 0 success, 1 runtime failure,
// 2 usage or configuration error.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sdss/bench.hpp"

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
};

// Convenience flags are shorthands for --set key=value.
void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key=value config file");
  cmd->add_option("--set", c.overrides, "override one setting (key=value), repeatable");
  auto shorthand = [&](const char* flag, const char* key, const char* help) {
    cmd->add_option_function<std::string>(
        flag, [&c, key](const std::string& v) { c.overrides.push_back(std::string(key) + "=" + v); },
        help);
  };
  shorthand("--dataset", "dataset", "dataset directory (default: synthetic benchmark)");
  shorthand("--out", "out", "output directory");
  shorthand("--seeds", "seeds", "comma-separated seeds");
  shorthand("--mode", "mode", "baseline, ss, sd or sdss");
  shorthand("--pretext", "pretext", "degree, clustering, partitioning or completion");
  shorthand("--jobs", "jobs", "worker threads (0: all cores)");
  shorthand("--alpha", "alpha", "pretext loss weight");
  shorthand("--max-epochs", "max_epochs", "epoch limit per stage");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised, self-distilled GCN training"};
  app.require_subcommand(1);

  Common train_opts, ablation_opts, ratio_opts, export_opts, synth_opts;
  auto* train = app.add_subcommand("train", "train one mode over the configured seeds");
  auto* ablation = app.add_subcommand("ablation", "mode x pretext x distillation-term grid");
  auto* ratio = app.add_subcommand("label-ratio", "accuracy against labels per class");
  auto* pexport = app.add_subcommand("pretext-export", "write pretext targets");
  auto* synth = app.add_subcommand("gen-synthetic", "write the planted-partition benchmark");
  add_common(train, train_opts);
  add_common(ablation, ablation_opts);
  add_common(ratio, ratio_opts);
  add_common(pexport, export_opts);
  add_common(synth, synth_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto run = [](const Common& c, auto&& command) -> int {
    try {
      std::optional<std::filesystem::path> file;
      if (!c.config.empty()) file = c.config;
      const sdss::RunConfig cfg = sdss::resolve_config(file, c.overrides);
      command(cfg);
      return 0;
    } catch (const sdss::ConfigError& e) {
      std::cerr << "sdss: " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "sdss: " << e.what() << '\n';
      return 1;
    }
  };

  if (*train) return run(train_opts, [](const auto& cfg) { sdss::cmd_train(cfg, std::cout); });
  if (*ablation) {
    return run(ablation_opts, [](const auto& cfg) { sdss::cmd_ablation(cfg, std::cout); });
  }
  if (*ratio) return run(ratio_opts, [](const auto& cfg) { sdss::cmd_label_ratio(cfg, std::cout); });
  if (*pexport) {
    return run(export_opts, [](const auto& cfg) { sdss::cmd_pretext_export(cfg, std::cout); });
  }
  return run(synth_opts, [](const auto& cfg) { sdss::cmd_gen_synthetic(cfg, std::cout); });
}
