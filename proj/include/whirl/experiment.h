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

#ifndef WHIRL_EXPERIMENT_H_
#define WHIRL_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "whirl/align.h"
#include "whirl/demo.h"
#include "whirl/loop.h"
#include "whirl/prior.h"
#include "whirl/sim_env.h"

// Experiment driver: config files, demo generation, variant dispatch,
// result files and comparison tables.
namespace whirl::experiment {

enum class Task { kDrawer, kDoor, kDishwasher, kShelf };
enum class Variant { kWhirl, kBc, kNoExploration, kNoAgentAgnostic };

std::string_view TaskName(Task task);
Task ParseTask(std::string_view name);  // ConfigError on unknown names
std::string_view VariantName(Variant variant);
Variant ParseVariant(std::string_view name);

struct ExperimentConfig {
  Task task = Task::kDrawer;
  Variant variant = Variant::kWhirl;
  loop::LoopConfig loop;
  demo::NoiseConfig noise = demo::NoiseConfig::Default();
  prior::ExtractionConfig extraction;
  align::EmbeddingConfig embedding;
  std::vector<uint64_t> seeds{0, 1, 2, 3, 4};
  std::filesystem::path output_dir = "results";
  std::vector<std::filesystem::path> train_scenes;
  std::vector<std::filesystem::path> test_scenes;
  int train_demos = 3;        // K, spread round-robin over the train scenes
  int test_demos_per_scene = 1;
};

// Parses the YAML experiment format. Scene paths are resolved against
// `base_dir`. Throws ConfigError.
ExperimentConfig ParseExperimentConfig(const std::string& yaml_text,
                                       const std::filesystem::path& base_dir);
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);
void ValidateExperimentConfig(const ExperimentConfig& cfg);

// Loop settings after the variant's overrides.
loop::LoopConfig EffectiveLoopConfig(const ExperimentConfig& cfg);

struct DemoSet {
  std::vector<loop::DemoContext> train;
  std::vector<loop::DemoContext> test;
};

// Generates noisy demonstrations for one seed and prepares them for the loop.
DemoSet BuildDemos(const ExperimentConfig& cfg, const std::vector<sim::Scene>& train_scenes,
                   const std::vector<sim::Scene>& test_scenes, uint64_t seed,
                   const align::AlignmentModel& model, const align::AugmentationSpec& augs);

// Manifest summary of one iteration.
struct IterationSummary {
  int iteration = 0;
  double train_success = 0.0;
  std::vector<double> demo_success;
  double mean_cost = 0.0;
  double mean_change_score = 0.0;
  int exploration_samples = 0;
  bool fitted = false;
  nn::FitReport task_fit;
  nn::FitReport exploration_fit;
};

IterationSummary Summarize(const loop::IterationReport& report);

struct SeedResult {
  uint64_t seed = 0;
  loop::LearningCurve curve;
  std::vector<IterationSummary> iterations;
  double seconds = 0.0;  // wall time; logged, not written
  std::filesystem::path curve_file;
  std::string checksum;  // FNV-1a 64 of the curve file, hex
};

struct RunManifest {
  ExperimentConfig config;
  std::filesystem::path config_path;
  std::filesystem::path run_dir;
  std::vector<SeedResult> seeds;
  double seconds = 0.0;  // wall time; logged, not written
};

struct RunOptions {
  std::optional<uint64_t> seed;  // run only this seed
  std::optional<Variant> variant;
  std::optional<std::filesystem::path> out;  // replaces the output root
  bool resume = false;
  std::ostream* log = nullptr;
};

// Output root: `--out` if given, else the config's output_dir, which when
// relative is resolved against $WHIRL_OUTPUT_ROOT (or the working directory).
std::filesystem::path ResolveOutputRoot(const ExperimentConfig& cfg,
                                        const std::optional<std::filesystem::path>& out);

// Runs every seed and writes <root>/<task>_<variant>/{curves/, checkpoints/,
// manifest.json}.
RunManifest RunExperiment(ExperimentConfig cfg, const std::filesystem::path& config_path,
                          const RunOptions& options);

// Trains one seed. With a checkpoint directory the state is saved after each
// iteration and, if `resume`, restored from there first.
SeedResult RunSeed(const ExperimentConfig& cfg, uint64_t seed,
                   const std::optional<std::filesystem::path>& checkpoint_dir, bool resume);

inline constexpr std::string_view kCurveHeader =
    "iteration,train_success,test_success,mean_cost,mean_change_score";
std::string CurveCsv(const loop::LearningCurve& curve);
// Writes `curve_file` for every seed of the manifest.
void EmitCurves(RunManifest& manifest);

std::string ManifestJson(const RunManifest& manifest);

// Writes to a temporary sibling, then renames. Throws IoError.
void WriteFileAtomic(const std::filesystem::path& path, const std::string& content);
std::string Fnv1aHex(const std::string& bytes);

// Checkpoint files for one seed. Loading restores policy weights into
// `fresh`, which must come from MakePolicies with the same configuration;
// returns nothing when the directory holds no checkpoint.
void SaveCheckpoint(const std::filesystem::path& dir, uint64_t seed,
                    const loop::TrainState& state,
                    const std::vector<IterationSummary>& summaries);
std::optional<loop::TrainState> LoadCheckpoint(const std::filesystem::path& dir, uint64_t seed,
                                               loop::Policies fresh,
                                               std::vector<IterationSummary>* summaries);

// What compare needs from a manifest.
struct ManifestResult {
  std::string task;
  std::string variant;
  std::vector<double> final_train;  // one per seed
  std::vector<double> final_test;   // seeds with a test value
};

ManifestResult ReadManifestResult(const std::filesystem::path& path);

struct ComparisonRow {
  std::string variant;
  int runs = 0;
  double train_mean = 0.0;
  double train_stderr = 0.0;
  std::optional<double> test_mean;
  std::optional<double> test_stderr;
};

struct Comparison {
  std::string task;
  std::vector<ComparisonRow> rows;  // in first-seen variant order
};

// Pools per-seed final successes by variant. Throws UsageError for an empty
// list or mixed tasks.
Comparison Compare(const std::vector<ManifestResult>& manifests);
std::string FormatComparison(const Comparison& comparison);
std::string ComparisonCsv(const Comparison& comparison);

}  // namespace whirl::experiment

#endif  // WHIRL_EXPERIMENT_H_
