// Copyright 2026 The whirl-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line driver.
//
//   whirl run --config drawer.cfg [--seed N] [--variant V] [--out DIR] [--resume]
//   whirl compare runs/drawer_whirl/manifest.json runs/drawer_bc/manifest.json [--csv FILE]
//   whirl demo-gen --task drawer --seed 3 [--config FILE] [--out DIR]

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "whirl/demo.h"
#include "whirl/errors.h"
#include "whirl/experiment.h"
#include "whirl/scene_io.h"

namespace fs = std::filesystem;
namespace ex = whirl::experiment;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

fs::path DefaultConfig(ex::Task task) {
  const std::string file =
      (task == ex::Task::kShelf ? std::string("shelf") : std::string(ex::TaskName(task))) + ".cfg";
  if (const char* dir = std::getenv("WHIRL_CONFIG_DIR"); dir && *dir) return fs::path(dir) / file;
#ifdef WHIRL_DEFAULT_CONFIG_DIR
  return fs::path(WHIRL_DEFAULT_CONFIG_DIR) / file;
#else
  return fs::path("configs") / file;
#endif
}

int Run(const fs::path& config, std::optional<uint64_t> seed, const std::string& variant,
        const std::string& out, bool resume) {
  ex::ExperimentConfig cfg = ex::LoadExperimentConfig(config);
  ex::RunOptions options;
  options.seed = seed;
  if (!variant.empty()) options.variant = ex::ParseVariant(variant);
  if (!out.empty()) options.out = out;
  options.resume = resume;
  options.log = &std::cerr;
  const ex::RunManifest manifest = ex::RunExperiment(cfg, config, options);
  for (const ex::SeedResult& s : manifest.seeds) std::cout << s.curve_file.string() << '\n';
  std::cout << (manifest.run_dir / "manifest.json").string() << '\n';
  return 0;
}

int Compare(const std::vector<std::string>& manifests, const std::string& csv) {
  std::vector<ex::ManifestResult> results;
  for (const std::string& m : manifests) results.push_back(ex::ReadManifestResult(m));
  const ex::Comparison comparison = ex::Compare(results);
  std::cout << ex::FormatComparison(comparison);
  fs::path csv_path = csv;
  if (csv_path.empty()) {
    csv_path = "comparison_" + comparison.task + ".csv";
    if (const char* root = std::getenv("WHIRL_OUTPUT_ROOT"); root && *root) {
      csv_path = fs::path(root) / csv_path;
    }
  }
  ex::WriteFileAtomic(csv_path, ex::ComparisonCsv(comparison));
  std::cout << "wrote " << csv_path.string() << '\n';
  return 0;
}

int DemoGen(const std::string& task_name, uint64_t seed, const std::string& config,
            const std::string& out) {
  const ex::Task task = ex::ParseTask(task_name);
  const fs::path config_path = config.empty() ? DefaultConfig(task) : fs::path(config);
  const ex::ExperimentConfig cfg = ex::LoadExperimentConfig(config_path);
  if (cfg.task != task) throw whirl::UsageError("config " + config_path.string() + " is not a " + task_name + " config");
  std::vector<whirl::sim::Scene> train;
  std::vector<whirl::sim::Scene> test;
  for (const fs::path& p : cfg.train_scenes) train.push_back(whirl::sim::LoadScene(p));
  for (const fs::path& p : cfg.test_scenes) test.push_back(whirl::sim::LoadScene(p));
  const whirl::align::AlignmentModel model(cfg.embedding);
  const ex::DemoSet demos =
      ex::BuildDemos(cfg, train, test, seed, model, whirl::align::DefaultAugmentations());

  const fs::path dir = ex::ResolveOutputRoot(cfg, out.empty() ? std::nullopt
                                                              : std::optional<fs::path>(out)) /
                       "demos" / (std::string(ex::TaskName(task)) + "_seed" + std::to_string(seed));
  fs::create_directories(dir);
  auto emit = [&](const whirl::loop::DemoContext& ctx, const std::string& name) {
    const fs::path path = dir / (name + ".demo");
    whirl::demo::WriteDemo(path, ctx.demo);
    const whirl::WaypointAction& p = ctx.center_prior;
    std::cout << path.string() << "  scene " << ctx.scene.id << "  frames " << ctx.demo.length()
              << "  window [" << ctx.window.t_interaction << ", " << ctx.window.t_end << "]"
              << std::fixed << std::setprecision(3) << "  w_int (" << p.w_interaction.x() << ", "
              << p.w_interaction.y() << ", " << p.w_interaction.z() << ")  gripper " << p.gripper
              << '\n';
  };
  for (size_t k = 0; k < demos.train.size(); ++k) emit(demos.train[k], "train_" + std::to_string(k));
  for (size_t j = 0; j < demos.test.size(); ++j) emit(demos.test[j], "test_" + std::to_string(j));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual imitation from human video in a kinematic simulator"};
  app.require_subcommand(1);

  std::string config;
  std::optional<uint64_t> seed;
  std::string variant;
  std::string out;
  bool resume = false;
  CLI::App* run = app.add_subcommand("run", "Train one experiment config");
  run->add_option("--config", config, "Experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Run only this seed");
  run->add_option("--variant", variant, "whirl, bc, no_exploration or no_agent_agnostic");
  run->add_option("--out", out, "Output root (overrides config and WHIRL_OUTPUT_ROOT)");
  run->add_flag("--resume", resume, "Continue from checkpoints");

  std::vector<std::string> manifests;
  std::string csv;
  CLI::App* compare = app.add_subcommand("compare", "Tabulate final success per variant");
  compare->add_option("manifests", manifests, "manifest.json files")->required()->check(CLI::ExistingFile);
  compare->add_option("--csv", csv, "Results file (default comparison_<task>.csv)");

  std::string task;
  uint64_t demo_seed = 0;
  std::string demo_config;
  std::string demo_out;
  CLI::App* demo_gen = app.add_subcommand("demo-gen", "Write the demonstrations of one seed");
  demo_gen->add_option("--task", task, "drawer, door, dishwasher or shelf_pick_place")->required();
  demo_gen->add_option("--seed", demo_seed, "Seed")->required();
  demo_gen->add_option("--config", demo_config, "Experiment config (default: the task's)");
  demo_gen->add_option("--out", demo_out, "Output root");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;  // --help exits 0
  }

  try {
    if (*run) return Run(config, seed, variant, out, resume);
    if (*compare) return Compare(manifests, csv);
    if (*demo_gen) return DemoGen(task, demo_seed, demo_config, demo_out);
  } catch (const whirl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const whirl::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
