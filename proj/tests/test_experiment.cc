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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "test_util.h"
#include "whirl/errors.h"
#include "whirl/experiment.h"

namespace whirl::experiment {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using whirl::testing::ConfigDir;

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path ScratchDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("whirl_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Drawer experiment small enough for a unit test.
ExperimentConfig TinyDrawer() {
  ExperimentConfig cfg = ParseExperimentConfig(R"(
task: drawer
seeds: [0, 1]
scenes: {train: [scenes/drawer_a.yaml, scenes/drawer_b.yaml], test: [scenes/drawer_c.yaml]}
demos: {train: 2, test_per_scene: 1}
loop:
  samples_per_demo: 6
  n_elite: 2
  iterations: 2
  eval_samples: 4
  policy: {hidden: [16, 16], epochs: 10}
)",
                                               ConfigDir());
  ValidateExperimentConfig(cfg);
  return cfg;
}

TEST(ConfigTest, ShippedConfigsLoad) {
  for (const char* name : {"drawer.cfg", "door.cfg", "dishwasher.cfg", "shelf.cfg"}) {
    const ExperimentConfig cfg = LoadExperimentConfig(ConfigDir() / name);
    EXPECT_NO_THROW(ValidateExperimentConfig(cfg)) << name;
    EXPECT_EQ(cfg.seeds.size(), 5u);
    EXPECT_EQ(cfg.loop.samples_per_demo, 30);
    EXPECT_EQ(cfg.loop.iterations, 3);
    EXPECT_EQ(cfg.train_demos, static_cast<int>(cfg.task == Task::kShelf ? 4 : 3));
    for (const fs::path& p : cfg.train_scenes) EXPECT_TRUE(fs::exists(p)) << p;
  }
}

TEST(ConfigTest, ShelfHoldsOutObjectsAndPlacement) {
  const ExperimentConfig cfg = LoadExperimentConfig(ConfigDir() / "shelf.cfg");
  EXPECT_EQ(cfg.task, Task::kShelf);
  EXPECT_EQ(cfg.train_scenes.size(), 4u);
  EXPECT_EQ(cfg.test_scenes.size(), 2u);
  const sim::Scene train = sim::LoadScene(cfg.train_scenes[0]);
  for (const fs::path& p : cfg.test_scenes) {
    const sim::Scene test = sim::LoadScene(p);
    EXPECT_NE(test.goal.region.lo, train.goal.region.lo) << p;
  }
}

TEST(ConfigTest, UnknownKeysRejected) {
  EXPECT_THROW(ParseExperimentConfig("task: drawer\nbogus: 1\n", ConfigDir()), ConfigError);
  EXPECT_THROW(ParseExperimentConfig("task: drawer\nloop: {samples: 3}\n", ConfigDir()),
               ConfigError);
  EXPECT_THROW(ParseExperimentConfig("task: fridge\n", ConfigDir()), ConfigError);
  EXPECT_THROW(ParseExperimentConfig("task: [\n", ConfigDir()), ConfigError);
}

TEST(ConfigTest, InvalidCombinationsRejected) {
  ExperimentConfig cfg = TinyDrawer();
  cfg.loop.n_elite = 50;
  EXPECT_THROW(ValidateExperimentConfig(cfg), ConfigError);
  cfg = TinyDrawer();
  cfg.test_scenes.push_back(cfg.train_scenes[0]);
  EXPECT_THROW(ValidateExperimentConfig(cfg), ConfigError);
  cfg = TinyDrawer();
  cfg.train_scenes.clear();
  EXPECT_THROW(ValidateExperimentConfig(cfg), ConfigError);
  cfg = TinyDrawer();
  cfg.seeds.clear();
  EXPECT_THROW(ValidateExperimentConfig(cfg), ConfigError);
}

TEST(ConfigTest, MissingFileIsConfigError) {
  EXPECT_THROW(LoadExperimentConfig("/nonexistent/x.cfg"), ConfigError);
}

TEST(VariantTest, ConfigDiffIsolation) {
  ExperimentConfig cfg = LoadExperimentConfig(ConfigDir() / "drawer.cfg");
  const loop::LoopConfig base = EffectiveLoopConfig(cfg);
  EXPECT_TRUE(base == cfg.loop);

  cfg.variant = Variant::kNoAgentAgnostic;
  loop::LoopConfig l = EffectiveLoopConfig(cfg);
  EXPECT_FALSE(l.agent_agnostic);
  l.agent_agnostic = true;
  EXPECT_TRUE(l == base);

  cfg.variant = Variant::kNoExploration;
  l = EffectiveLoopConfig(cfg);
  EXPECT_EQ(l.p_explore, 0.0);
  EXPECT_FALSE(l.fit_exploration);
  l.p_explore = base.p_explore;
  l.fit_exploration = true;
  EXPECT_TRUE(l == base);

  cfg.variant = Variant::kBc;
  l = EffectiveLoopConfig(cfg);
  EXPECT_EQ(l.iterations, 1);
  EXPECT_EQ(l.policy_kind, loop::PolicyKind::kRegression);
  EXPECT_EQ(l.p_explore, 0.0);
}

TEST(VariantTest, NamesRoundTrip) {
  for (Variant v : {Variant::kWhirl, Variant::kBc, Variant::kNoExploration,
                    Variant::kNoAgentAgnostic}) {
    EXPECT_EQ(ParseVariant(VariantName(v)), v);
  }
  EXPECT_EQ(ParseTask("shelf"), Task::kShelf);
  EXPECT_THROW(ParseVariant("dagger"), ConfigError);
}

TEST(DemoSetTest, RoundRobinAndHeldOut) {
  const ExperimentConfig cfg = LoadExperimentConfig(ConfigDir() / "drawer.cfg");
  std::vector<sim::Scene> train;
  std::vector<sim::Scene> test;
  for (const auto& p : cfg.train_scenes) train.push_back(sim::LoadScene(p));
  for (const auto& p : cfg.test_scenes) test.push_back(sim::LoadScene(p));
  const align::AlignmentModel model(cfg.embedding);
  const DemoSet d = BuildDemos(cfg, train, test, 0, model, align::DefaultAugmentations());
  ASSERT_EQ(d.train.size(), 3u);
  EXPECT_EQ(d.train[0].scene.id, "drawer_a");
  EXPECT_EQ(d.train[1].scene.id, "drawer_b");
  EXPECT_EQ(d.train[2].scene.id, "drawer_a");
  ASSERT_EQ(d.test.size(), 1u);
  EXPECT_TRUE(d.test[0].held_out);
  for (const auto& c : d.train) EXPECT_FALSE(c.held_out);
  EXPECT_NE(d.train[0].demo, d.train[2].demo);
}

TEST(CurveCsvTest, HeaderAndRows) {
  loop::LearningCurve curve;
  for (int i = 0; i < 4; ++i) curve.push_back({i, 0.25 * i, i == 0 ? std::nullopt : std::optional(0.5), 1.0, 2.0});
  const std::string csv = CurveCsv(curve);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iteration,train_success,test_success,mean_cost,mean_change_score");
  std::getline(in, line);
  EXPECT_EQ(line, "0,0.000000,,1.000000,2.000000");
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

TEST(AtomicWriteTest, WritesAndRejectsBadDirectory) {
  const fs::path dir = ScratchDir("atomic");
  WriteFileAtomic(dir / "sub" / "a.txt", "hello\n");
  EXPECT_EQ(ReadFile(dir / "sub" / "a.txt"), "hello\n");
  EXPECT_FALSE(fs::exists(dir / "sub" / "a.txt.tmp"));
  std::ofstream(dir / "blocker") << "x";
  EXPECT_THROW(WriteFileAtomic(dir / "blocker" / "a.txt", "x"), IoError);
  EXPECT_EQ(Fnv1aHex(""), "cbf29ce484222325");
  EXPECT_EQ(Fnv1aHex("a"), "af63dc4c8601ec8c");
}

ManifestResult Result(const std::string& task, const std::string& variant,
                      std::vector<double> train, std::vector<double> test = {}) {
  return {task, variant, std::move(train), std::move(test)};
}

TEST(CompareTest, SingleManifestIsOneRow) {
  const Comparison c = Compare({Result("drawer", "whirl", {0.7}, {0.4})});
  ASSERT_EQ(c.rows.size(), 1u);
  EXPECT_EQ(c.rows[0].train_mean, 0.7);
  EXPECT_EQ(c.rows[0].train_stderr, 0.0);
  EXPECT_EQ(*c.rows[0].test_mean, 0.4);
  EXPECT_NE(FormatComparison(c).find("whirl"), std::string::npos);
}

TEST(CompareTest, IdenticalManifestsHaveZeroStderr) {
  const ManifestResult r = Result("door", "bc", {0.5, 0.5});
  const Comparison c = Compare({r, r});
  ASSERT_EQ(c.rows.size(), 1u);
  EXPECT_EQ(c.rows[0].runs, 4);
  EXPECT_EQ(c.rows[0].train_stderr, 0.0);
  EXPECT_FALSE(c.rows[0].test_mean.has_value());
}

TEST(CompareTest, PoolsSeedsPerVariant) {
  const Comparison c = Compare({Result("drawer", "whirl", {0.2, 0.4, 0.6}),
                                Result("drawer", "bc", {0.1})});
  ASSERT_EQ(c.rows.size(), 2u);
  EXPECT_EQ(c.rows[0].variant, "whirl");
  EXPECT_NEAR(c.rows[0].train_mean, 0.4, 1e-12);
  EXPECT_NEAR(c.rows[0].train_stderr, 0.2 / std::sqrt(3.0), 1e-12);
  const std::string csv = ComparisonCsv(c);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "task,variant,runs,train_mean,train_stderr,test_mean,test_stderr");
}

TEST(CompareTest, MixedTasksAreUsageErrors) {
  EXPECT_THROW(Compare({Result("drawer", "whirl", {0.5}), Result("door", "whirl", {0.5})}),
               UsageError);
  EXPECT_THROW(Compare({}), UsageError);
}

TEST(OutputRootTest, Resolution) {
  ExperimentConfig cfg;
  cfg.output_dir = "runs";
  EXPECT_EQ(ResolveOutputRoot(cfg, fs::path("/tmp/x")), fs::path("/tmp/x"));
  ::setenv("WHIRL_OUTPUT_ROOT", "/srv/out", 1);
  EXPECT_EQ(ResolveOutputRoot(cfg, std::nullopt), fs::path("/srv/out/runs"));
  cfg.output_dir = "/abs";
  EXPECT_EQ(ResolveOutputRoot(cfg, std::nullopt), fs::path("/abs"));
  ::unsetenv("WHIRL_OUTPUT_ROOT");
  cfg.output_dir = "runs";
  EXPECT_EQ(ResolveOutputRoot(cfg, std::nullopt), fs::path("runs"));
}

TEST(RunTest, ResultsAreByteStableAndShaped) {
  const ExperimentConfig cfg = TinyDrawer();
  RunOptions opt;
  opt.out = ScratchDir("run_a");
  const RunManifest a = RunExperiment(cfg, ConfigDir() / "tiny.cfg", opt);
  opt.out = ScratchDir("run_b");
  const RunManifest b = RunExperiment(cfg, ConfigDir() / "tiny.cfg", opt);
  ASSERT_EQ(a.seeds.size(), 2u);
  for (size_t i = 0; i < a.seeds.size(); ++i) {
    EXPECT_EQ(a.seeds[i].curve.size(), 3u);
    EXPECT_EQ(ReadFile(a.seeds[i].curve_file), ReadFile(b.seeds[i].curve_file));
    EXPECT_EQ(a.seeds[i].checksum, Fnv1aHex(ReadFile(a.seeds[i].curve_file)));
  }
  EXPECT_EQ(ReadFile(a.run_dir / "manifest.json"), ReadFile(b.run_dir / "manifest.json"));
  EXPECT_EQ(a.run_dir.filename(), "drawer_whirl");

  const ManifestResult m = ReadManifestResult(a.run_dir / "manifest.json");
  EXPECT_EQ(m.task, "drawer");
  EXPECT_EQ(m.variant, "whirl");
  ASSERT_EQ(m.final_train.size(), 2u);
  EXPECT_EQ(m.final_train[1], a.seeds[1].curve.back().train_success);
}

TEST(RunTest, BcRecordsExactlyOneFit) {
  const ExperimentConfig cfg = TinyDrawer();
  RunOptions opt;
  opt.out = ScratchDir("run_bc");
  opt.variant = Variant::kBc;
  opt.seed = 0;
  const RunManifest m = RunExperiment(cfg, ConfigDir() / "tiny.cfg", opt);
  const json j = json::parse(ReadFile(m.run_dir / "manifest.json"));
  EXPECT_EQ(j.at("effective_loop").at("iterations").get<int>(), 1);
  EXPECT_EQ(j.at("effective_loop").at("policy").get<std::string>(), "regression");
  int fits = 0;
  for (const json& it : j.at("seeds")[0].at("iterations")) fits += it.at("fitted").get<bool>();
  EXPECT_EQ(fits, 1);
  EXPECT_EQ(m.run_dir.filename(), "drawer_bc");
}

TEST(RunTest, ResumeFromCheckpointMatchesFullRun) {
  const ExperimentConfig cfg = TinyDrawer();
  const SeedResult full = RunSeed(cfg, 1, std::nullopt, false);

  // Interrupt after the first iteration by checkpointing only that state.
  const fs::path dir = ScratchDir("resume");
  const loop::LoopConfig lcfg = EffectiveLoopConfig(cfg);
  std::vector<sim::Scene> train;
  std::vector<sim::Scene> test;
  for (const auto& p : cfg.train_scenes) train.push_back(sim::LoadScene(p));
  for (const auto& p : cfg.test_scenes) test.push_back(sim::LoadScene(p));
  const align::AlignmentModel model(cfg.embedding);
  const align::AugmentationSpec augs = align::DefaultAugmentations();
  const DemoSet demos = BuildDemos(cfg, train, test, 1, model, augs);
  std::vector<IterationSummary> summaries;
  loop::Train(demos.train, demos.test, lcfg, model, augs, 1, std::nullopt,
              [&](const loop::TrainState& s) {
                if (s.next_iteration != 1) return;
                summaries.push_back(Summarize(s.reports.back()));
                SaveCheckpoint(dir, 1, s, summaries);
              });

  const SeedResult resumed = RunSeed(cfg, 1, dir, true);
  ASSERT_EQ(resumed.curve.size(), full.curve.size());
  EXPECT_EQ(CurveCsv(resumed.curve), CurveCsv(full.curve));
  EXPECT_EQ(resumed.iterations.size(), full.iterations.size());

  EXPECT_THROW(RunSeed(cfg, 2, dir, true), ConfigError);
}

TEST(RunTest, ResumeWithoutCheckpointStartsFresh) {
  const ExperimentConfig cfg = TinyDrawer();
  const fs::path dir = ScratchDir("resume_empty");
  EXPECT_EQ(CurveCsv(RunSeed(cfg, 0, dir, true).curve),
            CurveCsv(RunSeed(cfg, 0, std::nullopt, false).curve));
}

}  // namespace
}  // namespace whirl::experiment
