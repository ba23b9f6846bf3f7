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

#include "whirl/experiment.h"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "json.hpp"
#include "whirl/errors.h"
#include "whirl/random.h"
#include "whirl/scene_io.h"

namespace whirl::experiment {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum : uint64_t { kTrainDemoTag = 0xd3, kTestDemoTag = 0xd4, kCorruptTag = 0xc0 };
constexpr int kDemoAttempts = 8;

constexpr std::pair<Task, std::string_view> kTasks[] = {
    {Task::kDrawer, "drawer"},
    {Task::kDoor, "door"},
    {Task::kDishwasher, "dishwasher"},
    {Task::kShelf, "shelf_pick_place"},
};

constexpr std::pair<Variant, std::string_view> kVariants[] = {
    {Variant::kWhirl, "whirl"},
    {Variant::kBc, "bc"},
    {Variant::kNoExploration, "no_exploration"},
    {Variant::kNoAgentAgnostic, "no_agent_agnostic"},
};

void CheckKeys(const YAML::Node& node, const std::string& where,
               std::initializer_list<std::string_view> allowed) {
  if (!node.IsMap()) throw ConfigError(where + " must be a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void Read(const YAML::Node& node, const char* key, T& value) {
  if (node[key]) value = node[key].as<T>();
}

std::vector<fs::path> ReadPaths(const YAML::Node& node, const fs::path& base) {
  std::vector<fs::path> out;
  if (!node) return out;
  if (!node.IsSequence()) throw ConfigError("scene lists must be sequences");
  for (const auto& item : node) {
    fs::path p = item.as<std::string>();
    out.push_back(p.is_absolute() ? p : base / p);
  }
  return out;
}

void ParseLoop(const YAML::Node& node, loop::LoopConfig& cfg) {
  CheckKeys(node, "loop",
            {"samples_per_demo", "n_elite", "p_explore", "iterations", "eval_samples",
             "floor_fraction", "threads", "sigma", "policy"});
  Read(node, "samples_per_demo", cfg.samples_per_demo);
  Read(node, "n_elite", cfg.n_elite);
  Read(node, "p_explore", cfg.p_explore);
  Read(node, "iterations", cfg.iterations);
  Read(node, "eval_samples", cfg.eval_samples);
  Read(node, "floor_fraction", cfg.floor_fraction);
  Read(node, "threads", cfg.threads);
  if (const YAML::Node s = node["sigma"]) {
    CheckKeys(s, "loop.sigma", {"translation", "rotation", "gripper", "schedule"});
    Read(s, "translation", cfg.sigma.translation);
    Read(s, "rotation", cfg.sigma.rotation);
    Read(s, "gripper", cfg.sigma.gripper);
    Read(s, "schedule", cfg.sigma.schedule);
  }
  if (const YAML::Node p = node["policy"]) {
    CheckKeys(p, "loop.policy",
              {"hidden", "latent_dim", "beta", "epochs", "batch_size", "learning_rate"});
    Read(p, "hidden", cfg.architecture.hidden);
    Read(p, "latent_dim", cfg.architecture.latent_dim);
    Read(p, "beta", cfg.architecture.beta);
    Read(p, "epochs", cfg.fit.epochs);
    Read(p, "batch_size", cfg.fit.batch_size);
    Read(p, "learning_rate", cfg.fit.adam.learning_rate);
  }
}

void ParseNoise(const YAML::Node& node, demo::NoiseConfig& noise) {
  CheckKeys(node, "noise",
            {"pos_sigma", "contact_flip_prob", "wrist_sigma", "time_warp", "dropout_prob"});
  Read(node, "pos_sigma", noise.pos_sigma);
  Read(node, "contact_flip_prob", noise.contact_flip_prob);
  Read(node, "wrist_sigma", noise.wrist_sigma);
  Read(node, "dropout_prob", noise.dropout_prob);
  if (const YAML::Node w = node["time_warp"]) {
    if (!w.IsSequence() || w.size() != 2) throw ConfigError("noise.time_warp needs [lo, hi]");
    noise.time_warp_range = {w[0].as<double>(), w[1].as<double>()};
  }
}

void ParsePrior(const YAML::Node& node, prior::ExtractionConfig& cfg) {
  CheckKeys(node, "prior",
            {"savgol_window", "savgol_polyorder", "min_run", "waypoint_sigma", "mid_fractions"});
  Read(node, "savgol_window", cfg.savgol_window);
  Read(node, "savgol_polyorder", cfg.savgol_polyorder);
  Read(node, "min_run", cfg.min_run);
  Read(node, "waypoint_sigma", cfg.waypoint_sigma);
  Read(node, "mid_fractions", cfg.mid_fractions);
}

void ParseEmbedding(const YAML::Node& node, align::EmbeddingConfig& cfg) {
  CheckKeys(node, "embedding", {"frame_dim", "video_dim", "projection_scale", "seed"});
  Read(node, "frame_dim", cfg.frame_dim);
  Read(node, "video_dim", cfg.video_dim);
  Read(node, "projection_scale", cfg.projection_scale);
  Read(node, "seed", cfg.seed);
}

std::string Fixed(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << v;
  return s.str();
}

std::vector<sim::Scene> LoadScenes(const std::vector<fs::path>& paths) {
  std::vector<sim::Scene> scenes;
  for (const fs::path& p : paths) scenes.push_back(sim::LoadScene(p));
  return scenes;
}

loop::DemoContext MakeContext(const ExperimentConfig& cfg, const sim::Scene& scene,
                              uint64_t demo_seed, const align::AlignmentModel& model,
                              const align::AugmentationSpec& augs, bool held_out) {
  std::string last_error;
  for (int attempt = 0; attempt < kDemoAttempts; ++attempt) {
    const uint64_t s = DeriveSeed(demo_seed, {static_cast<uint64_t>(attempt)});
    try {
      const demo::ExpertResult expert = demo::ScriptedExpert(scene, s);
      if (!expert.success) continue;
      const demo::DemoVideo noisy = demo::Corrupt(expert.video, cfg.noise, scene.camera.intrinsics,
                                                  DeriveSeed(s, {kCorruptTag}));
      return loop::PrepareDemo(scene, noisy, cfg.extraction, model, augs, held_out);
    } catch (const ExtractionError& e) {
      last_error = e.what();
    } catch (const MappingError& e) {
      last_error = e.what();
    } catch (const GenerationError& e) {
      last_error = e.what();
    }
  }
  throw GenerationError("no usable demonstration for scene " + scene.id +
                        (last_error.empty() ? "" : ": " + last_error));
}

json CurveToJson(const loop::LearningCurve& curve) {
  json out = json::array();
  for (const loop::CurvePoint& p : curve) {
    out.push_back({{"iteration", p.iteration},
                   {"train_success", p.train_success},
                   {"test_success", p.test_success ? json(*p.test_success) : json(nullptr)},
                   {"mean_cost", p.mean_cost},
                   {"mean_change_score", p.mean_change_score}});
  }
  return out;
}

loop::LearningCurve CurveFromJson(const json& j) {
  loop::LearningCurve curve;
  for (const json& p : j) {
    loop::CurvePoint c;
    c.iteration = p.at("iteration").get<int>();
    c.train_success = p.at("train_success").get<double>();
    if (!p.at("test_success").is_null()) c.test_success = p.at("test_success").get<double>();
    c.mean_cost = p.at("mean_cost").get<double>();
    c.mean_change_score = p.at("mean_change_score").get<double>();
    curve.push_back(c);
  }
  return curve;
}

json SummaryToJson(const IterationSummary& s) {
  return {{"iteration", s.iteration},
          {"train_success", s.train_success},
          {"demo_success", s.demo_success},
          {"mean_cost", s.mean_cost},
          {"mean_change_score", s.mean_change_score},
          {"exploration_samples", s.exploration_samples},
          {"fitted", s.fitted},
          {"task_fit", {{"initial_loss", s.task_fit.initial_loss},
                        {"final_loss", s.task_fit.final_loss}}},
          {"exploration_fit", {{"initial_loss", s.exploration_fit.initial_loss},
                               {"final_loss", s.exploration_fit.final_loss}}}};
}

IterationSummary SummaryFromJson(const json& j) {
  IterationSummary s;
  s.iteration = j.at("iteration").get<int>();
  s.train_success = j.at("train_success").get<double>();
  s.demo_success = j.at("demo_success").get<std::vector<double>>();
  s.mean_cost = j.at("mean_cost").get<double>();
  s.mean_change_score = j.at("mean_change_score").get<double>();
  s.exploration_samples = j.at("exploration_samples").get<int>();
  s.fitted = j.at("fitted").get<bool>();
  s.task_fit = {j.at("task_fit").at("initial_loss").get<double>(),
                j.at("task_fit").at("final_loss").get<double>()};
  s.exploration_fit = {j.at("exploration_fit").at("initial_loss").get<double>(),
                       j.at("exploration_fit").at("final_loss").get<double>()};
  return s;
}

json ConfigToJson(const ExperimentConfig& cfg) {
  const loop::LoopConfig& l = cfg.loop;
  json scenes_train = json::array();
  json scenes_test = json::array();
  for (const fs::path& p : cfg.train_scenes) scenes_train.push_back(p.string());
  for (const fs::path& p : cfg.test_scenes) scenes_test.push_back(p.string());
  return {
      {"task", TaskName(cfg.task)},
      {"variant", VariantName(cfg.variant)},
      {"seeds", cfg.seeds},
      {"output_dir", cfg.output_dir.string()},
      {"scenes", {{"train", scenes_train}, {"test", scenes_test}}},
      {"demos", {{"train", cfg.train_demos}, {"test_per_scene", cfg.test_demos_per_scene}}},
      {"noise",
       {{"pos_sigma", cfg.noise.pos_sigma},
        {"contact_flip_prob", cfg.noise.contact_flip_prob},
        {"wrist_sigma", cfg.noise.wrist_sigma},
        {"time_warp", {cfg.noise.time_warp_range[0], cfg.noise.time_warp_range[1]}},
        {"dropout_prob", cfg.noise.dropout_prob}}},
      {"prior",
       {{"savgol_window", cfg.extraction.savgol_window},
        {"savgol_polyorder", cfg.extraction.savgol_polyorder},
        {"min_run", cfg.extraction.min_run},
        {"waypoint_sigma", cfg.extraction.waypoint_sigma},
        {"mid_fractions", cfg.extraction.mid_fractions}}},
      {"loop",
       {{"samples_per_demo", l.samples_per_demo},
        {"n_elite", l.n_elite},
        {"p_explore", l.p_explore},
        {"iterations", l.iterations},
        {"eval_samples", l.eval_samples},
        {"floor_fraction", l.floor_fraction},
        {"threads", l.threads},
        {"sigma",
         {{"translation", l.sigma.translation},
          {"rotation", l.sigma.rotation},
          {"gripper", l.sigma.gripper},
          {"schedule", l.sigma.schedule}}},
        {"policy",
         {{"hidden", l.architecture.hidden},
          {"latent_dim", l.architecture.latent_dim},
          {"beta", l.architecture.beta},
          {"epochs", l.fit.epochs},
          {"batch_size", l.fit.batch_size},
          {"learning_rate", l.fit.adam.learning_rate}}}}},
      {"embedding",
       {{"frame_dim", cfg.embedding.frame_dim},
        {"video_dim", cfg.embedding.video_dim},
        {"projection_scale", cfg.embedding.projection_scale},
        {"seed", cfg.embedding.seed}}},
  };
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void WritePolicy(std::ostream& out, const loop::ResidualPolicy& policy) {
  const char trained = policy.trained() ? 1 : 0;
  out.write(&trained, 1);
  if (policy.kind() == loop::PolicyKind::kCvae) {
    nn::WriteCvae(out, policy.cvae());
  } else {
    nn::WriteMlp(out, policy.regressor());
  }
}

void ReadPolicy(std::istream& in, loop::ResidualPolicy& policy) {
  char trained = 0;
  if (!in.read(&trained, 1)) throw IoError("truncated policy checkpoint");
  if (policy.kind() == loop::PolicyKind::kCvae) {
    policy.Restore(nn::ReadCvae(in), policy.regressor(), trained != 0);
  } else {
    policy.Restore(policy.cvae(), nn::ReadMlp(in), trained != 0);
  }
}

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double StdErr(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = Mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

}  // namespace

std::string_view TaskName(Task task) {
  for (const auto& [t, name] : kTasks) {
    if (t == task) return name;
  }
  return "unknown";
}

Task ParseTask(std::string_view name) {
  for (const auto& [t, n] : kTasks) {
    if (n == name) return t;
  }
  if (name == "shelf") return Task::kShelf;
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

std::string_view VariantName(Variant variant) {
  for (const auto& [v, name] : kVariants) {
    if (v == variant) return name;
  }
  return "unknown";
}

Variant ParseVariant(std::string_view name) {
  for (const auto& [v, n] : kVariants) {
    if (n == name) return v;
  }
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

ExperimentConfig ParseExperimentConfig(const std::string& yaml_text, const fs::path& base_dir) {
  ExperimentConfig cfg;
  try {
    const YAML::Node root = YAML::Load(yaml_text);
    CheckKeys(root, "experiment config",
              {"task", "variant", "seeds", "output_dir", "scenes", "demos", "noise", "prior",
               "loop", "embedding"});
    if (!root["task"]) throw ConfigError("experiment config needs a task");
    cfg.task = ParseTask(root["task"].as<std::string>());
    if (root["variant"]) cfg.variant = ParseVariant(root["variant"].as<std::string>());
    Read(root, "seeds", cfg.seeds);
    if (root["output_dir"]) cfg.output_dir = root["output_dir"].as<std::string>();
    if (const YAML::Node s = root["scenes"]) {
      CheckKeys(s, "scenes", {"train", "test"});
      cfg.train_scenes = ReadPaths(s["train"], base_dir);
      cfg.test_scenes = ReadPaths(s["test"], base_dir);
    }
    if (const YAML::Node d = root["demos"]) {
      CheckKeys(d, "demos", {"train", "test_per_scene"});
      Read(d, "train", cfg.train_demos);
      Read(d, "test_per_scene", cfg.test_demos_per_scene);
    }
    if (root["noise"]) ParseNoise(root["noise"], cfg.noise);
    if (root["prior"]) ParsePrior(root["prior"], cfg.extraction);
    if (root["loop"]) ParseLoop(root["loop"], cfg.loop);
    if (root["embedding"]) ParseEmbedding(root["embedding"], cfg.embedding);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  ValidateExperimentConfig(cfg);
  return cfg;
}

ExperimentConfig LoadExperimentConfig(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return ParseExperimentConfig(s.str(), path.parent_path());
}

void ValidateExperimentConfig(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("at least one seed is required");
  if (cfg.train_scenes.empty()) throw ConfigError("at least one training scene is required");
  if (cfg.train_demos < 1) throw ConfigError("demos.train must be positive");
  if (cfg.test_demos_per_scene < 0) throw ConfigError("demos.test_per_scene must be >= 0");
  for (const fs::path& p : cfg.test_scenes) {
    if (std::find(cfg.train_scenes.begin(), cfg.train_scenes.end(), p) != cfg.train_scenes.end()) {
      throw ConfigError("scene " + p.string() + " is both a train and a test scene");
    }
  }
  demo::ValidateNoise(cfg.noise);
  loop::ValidateLoopConfig(EffectiveLoopConfig(cfg));
}

loop::LoopConfig EffectiveLoopConfig(const ExperimentConfig& cfg) {
  loop::LoopConfig l = cfg.loop;
  switch (cfg.variant) {
    case Variant::kWhirl:
      break;
    case Variant::kNoExploration:
      l.p_explore = 0.0;
      l.fit_exploration = false;
      break;
    case Variant::kNoAgentAgnostic:
      l.agent_agnostic = false;
      break;
    case Variant::kBc:
      l.iterations = 1;
      l.policy_kind = loop::PolicyKind::kRegression;
      l.p_explore = 0.0;
      l.fit_exploration = false;
      break;
  }
  return l;
}

DemoSet BuildDemos(const ExperimentConfig& cfg, const std::vector<sim::Scene>& train_scenes,
                   const std::vector<sim::Scene>& test_scenes, uint64_t seed,
                   const align::AlignmentModel& model, const align::AugmentationSpec& augs) {
  if (train_scenes.empty()) throw ConfigError("at least one training scene is required");
  DemoSet set;
  for (int k = 0; k < cfg.train_demos; ++k) {
    const sim::Scene& scene = train_scenes[k % train_scenes.size()];
    set.train.push_back(MakeContext(cfg, scene,
                                    DeriveSeed(seed, {kTrainDemoTag, static_cast<uint64_t>(k)}),
                                    model, augs, false));
  }
  for (size_t j = 0; j < test_scenes.size(); ++j) {
    for (int r = 0; r < cfg.test_demos_per_scene; ++r) {
      set.test.push_back(MakeContext(cfg, test_scenes[j],
                                     DeriveSeed(seed, {kTestDemoTag, j, static_cast<uint64_t>(r)}),
                                     model, augs, true));
    }
  }
  return set;
}

IterationSummary Summarize(const loop::IterationReport& report) {
  IterationSummary s;
  s.iteration = report.iteration;
  s.train_success = report.train_success;
  s.demo_success = report.demo_success;
  s.mean_cost = report.mean_cost;
  s.mean_change_score = report.mean_change_score;
  for (const auto& per_demo : report.samples) {
    for (const loop::SampleRecord& r : per_demo) s.exploration_samples += r.from_exploration;
  }
  s.fitted = report.fitted;
  s.task_fit = report.task_fit;
  s.exploration_fit = report.exploration_fit;
  return s;
}

fs::path ResolveOutputRoot(const ExperimentConfig& cfg, const std::optional<fs::path>& out) {
  if (out) return *out;
  if (cfg.output_dir.is_absolute()) return cfg.output_dir;
  if (const char* root = std::getenv("WHIRL_OUTPUT_ROOT"); root && *root) {
    return fs::path(root) / cfg.output_dir;
  }
  return cfg.output_dir;
}

SeedResult RunSeed(const ExperimentConfig& cfg, uint64_t seed,
                   const std::optional<fs::path>& checkpoint_dir, bool resume) {
  const auto start = std::chrono::steady_clock::now();
  const loop::LoopConfig lcfg = EffectiveLoopConfig(cfg);
  const std::vector<sim::Scene> train_scenes = LoadScenes(cfg.train_scenes);
  const std::vector<sim::Scene> test_scenes = LoadScenes(cfg.test_scenes);
  const align::AlignmentModel model(cfg.embedding);
  const align::AugmentationSpec augs = align::DefaultAugmentations();
  const DemoSet demos = BuildDemos(cfg, train_scenes, test_scenes, seed, model, augs);

  SeedResult result;
  result.seed = seed;
  std::optional<loop::TrainState> state;
  if (checkpoint_dir && resume) {
    loop::Policies fresh = loop::MakePolicies(
        lcfg, static_cast<int>(demos.train.front().condition.size()),
        static_cast<int>(demos.train.front().center_prior.w_mid.size()), seed);
    state = LoadCheckpoint(*checkpoint_dir, seed, std::move(fresh), &result.iterations);
  }
  const loop::TrainState final_state = loop::Train(
      demos.train, demos.test, lcfg, model, augs, seed, std::move(state),
      [&](const loop::TrainState& s) {
        result.iterations.push_back(Summarize(s.reports.back()));
        if (checkpoint_dir) SaveCheckpoint(*checkpoint_dir, seed, s, result.iterations);
      });
  result.curve = final_state.curve;
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::string CurveCsv(const loop::LearningCurve& curve) {
  std::string out(kCurveHeader);
  out += '\n';
  for (const loop::CurvePoint& p : curve) {
    out += std::to_string(p.iteration) + ',' + Fixed(p.train_success) + ',' +
           (p.test_success ? Fixed(*p.test_success) : std::string()) + ',' +
           Fixed(p.mean_cost) + ',' + Fixed(p.mean_change_score) + '\n';
  }
  return out;
}

void EmitCurves(RunManifest& manifest) {
  for (SeedResult& s : manifest.seeds) {
    s.curve_file = manifest.run_dir / "curves" / ("seed_" + std::to_string(s.seed) + ".csv");
    const std::string csv = CurveCsv(s.curve);
    WriteFileAtomic(s.curve_file, csv);
    s.checksum = Fnv1aHex(csv);
  }
}

std::string ManifestJson(const RunManifest& manifest) {
  json seeds = json::array();
  for (const SeedResult& s : manifest.seeds) {
    json iterations = json::array();
    for (const IterationSummary& it : s.iterations) iterations.push_back(SummaryToJson(it));
    seeds.push_back({{"seed", s.seed},
                     {"curve", CurveToJson(s.curve)},
                     {"iterations", iterations},
                     {"curve_file", fs::relative(s.curve_file, manifest.run_dir).string()},
                     {"checksum", s.checksum}});
  }
  const loop::LoopConfig effective = EffectiveLoopConfig(manifest.config);
  const json j = {{"format", "whirl-manifest v1"},
                  {"config_path", manifest.config_path.string()},
                  {"config", ConfigToJson(manifest.config)},
                  {"effective_loop",
                   {{"iterations", effective.iterations},
                    {"p_explore", effective.p_explore},
                    {"fit_exploration", effective.fit_exploration},
                    {"agent_agnostic", effective.agent_agnostic},
                    {"policy",
                     effective.policy_kind == loop::PolicyKind::kCvae ? "cvae" : "regression"}}},
                  {"seeds", seeds}};
  return j.dump(2) + "\n";
}

RunManifest RunExperiment(ExperimentConfig cfg, const fs::path& config_path,
                          const RunOptions& options) {
  if (options.variant) cfg.variant = *options.variant;
  if (options.seed) cfg.seeds = {*options.seed};
  ValidateExperimentConfig(cfg);
  const auto start = std::chrono::steady_clock::now();

  RunManifest manifest;
  manifest.config = cfg;
  manifest.config_path = config_path;
  manifest.run_dir = ResolveOutputRoot(cfg, options.out) /
                     (std::string(TaskName(cfg.task)) + "_" + std::string(VariantName(cfg.variant)));
  std::error_code ec;
  fs::create_directories(manifest.run_dir / "curves", ec);
  if (ec) throw IoError("cannot create " + manifest.run_dir.string() + ": " + ec.message());

  for (uint64_t seed : cfg.seeds) {
    if (options.log) {
      *options.log << TaskName(cfg.task) << '/' << VariantName(cfg.variant) << " seed " << seed
                   << " ..." << std::flush;
    }
    const fs::path ckpt = manifest.run_dir / "checkpoints" / ("seed_" + std::to_string(seed));
    manifest.seeds.push_back(RunSeed(cfg, seed, ckpt, options.resume));
    const SeedResult& r = manifest.seeds.back();
    if (options.log) {
      *options.log << " train " << Fixed(r.curve.front().train_success) << " -> "
                   << Fixed(r.curve.back().train_success);
      if (r.curve.back().test_success) {
        *options.log << ", test " << Fixed(*r.curve.front().test_success) << " -> "
                     << Fixed(*r.curve.back().test_success);
      }
      *options.log << " (" << std::setprecision(3) << r.seconds << " s)\n";
    }
  }
  EmitCurves(manifest);
  manifest.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  WriteFileAtomic(manifest.run_dir / "manifest.json", ManifestJson(manifest));
  return manifest;
}

void WriteFileAtomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string Fnv1aHex(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void SaveCheckpoint(const fs::path& dir, uint64_t seed, const loop::TrainState& state,
                    const std::vector<IterationSummary>& summaries) {
  std::ostringstream task(std::ios::binary);
  std::ostringstream exploration(std::ios::binary);
  WritePolicy(task, state.policies.task);
  WritePolicy(exploration, state.policies.exploration);
  WriteFileAtomic(dir / "task.policy", task.str());
  WriteFileAtomic(dir / "exploration.policy", exploration.str());
  json summaries_json = json::array();
  for (const IterationSummary& s : summaries) summaries_json.push_back(SummaryToJson(s));
  const json j = {{"seed", seed},
                  {"next_iteration", state.next_iteration},
                  {"curve", CurveToJson(state.curve)},
                  {"iterations", summaries_json}};
  // Written last: its presence marks a complete checkpoint.
  WriteFileAtomic(dir / "state.json", j.dump(2) + "\n");
}

std::optional<loop::TrainState> LoadCheckpoint(const fs::path& dir, uint64_t seed,
                                               loop::Policies fresh,
                                               std::vector<IterationSummary>* summaries) {
  if (!fs::exists(dir / "state.json")) return std::nullopt;
  json j;
  try {
    j = json::parse(ReadFile(dir / "state.json"));
  } catch (const json::exception& e) {
    throw IoError("corrupt checkpoint " + dir.string() + ": " + e.what());
  }
  if (j.at("seed").get<uint64_t>() != seed) {
    throw ConfigError("checkpoint in " + dir.string() + " belongs to another seed");
  }
  loop::TrainState state;
  state.next_iteration = j.at("next_iteration").get<int>();
  state.curve = CurveFromJson(j.at("curve"));
  {
    std::istringstream in(ReadFile(dir / "task.policy"), std::ios::binary);
    ReadPolicy(in, fresh.task);
  }
  {
    std::istringstream in(ReadFile(dir / "exploration.policy"), std::ios::binary);
    ReadPolicy(in, fresh.exploration);
  }
  state.policies = std::move(fresh);
  if (summaries) {
    summaries->clear();
    for (const json& s : j.at("iterations")) summaries->push_back(SummaryFromJson(s));
  }
  return state;
}

ManifestResult ReadManifestResult(const fs::path& path) {
  ManifestResult r;
  try {
    const json j = json::parse(ReadFile(path));
    r.task = j.at("config").at("task").get<std::string>();
    r.variant = j.at("config").at("variant").get<std::string>();
    for (const json& s : j.at("seeds")) {
      const json& last = s.at("curve").back();
      r.final_train.push_back(last.at("train_success").get<double>());
      if (!last.at("test_success").is_null()) {
        r.final_test.push_back(last.at("test_success").get<double>());
      }
    }
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + path.string() + ": " + e.what());
  }
  return r;
}

Comparison Compare(const std::vector<ManifestResult>& manifests) {
  if (manifests.empty()) throw UsageError("compare needs at least one manifest");
  Comparison out;
  out.task = manifests.front().task;
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> pooled;
  for (const ManifestResult& m : manifests) {
    if (m.task != out.task) {
      throw UsageError("cannot compare runs of different tasks (" + out.task + ", " + m.task + ")");
    }
    if (!pooled.count(m.variant)) order.push_back(m.variant);
    auto& [train, test] = pooled[m.variant];
    train.insert(train.end(), m.final_train.begin(), m.final_train.end());
    test.insert(test.end(), m.final_test.begin(), m.final_test.end());
  }
  for (const std::string& v : order) {
    const auto& [train, test] = pooled[v];
    ComparisonRow row;
    row.variant = v;
    row.runs = static_cast<int>(train.size());
    if (!train.empty()) {
      row.train_mean = Mean(train);
      row.train_stderr = StdErr(train);
    }
    if (!test.empty()) {
      row.test_mean = Mean(test);
      row.test_stderr = StdErr(test);
    }
    out.rows.push_back(row);
  }
  return out;
}

std::string FormatComparison(const Comparison& comparison) {
  std::vector<std::array<std::string, 4>> cells{{"variant", "runs", "train", "test"}};
  for (const ComparisonRow& r : comparison.rows) {
    cells.push_back({r.variant, std::to_string(r.runs),
                     Fixed(r.train_mean).substr(0, 5) + " +/- " + Fixed(r.train_stderr).substr(0, 5),
                     r.test_mean ? Fixed(*r.test_mean).substr(0, 5) + " +/- " +
                                       Fixed(*r.test_stderr).substr(0, 5)
                                 : std::string("-")});
  }
  std::array<size_t, 4> width{};
  for (const auto& row : cells) {
    for (size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream s;
  s << "task: " << comparison.task << '\n';
  for (size_t i = 0; i < cells.size(); ++i) {
    for (size_t c = 0; c < 4; ++c) {
      if (c) s << "  ";
      if (c == 0) {
        s << std::left << std::setw(static_cast<int>(width[c])) << cells[i][c];
      } else {
        s << std::right << std::setw(static_cast<int>(width[c])) << cells[i][c];
      }
    }
    s << '\n';
    if (i == 0) s << std::string(width[0] + width[1] + width[2] + width[3] + 6, '-') << '\n';
  }
  return s.str();
}

std::string ComparisonCsv(const Comparison& comparison) {
  std::string out = "task,variant,runs,train_mean,train_stderr,test_mean,test_stderr\n";
  for (const ComparisonRow& r : comparison.rows) {
    out += comparison.task + ',' + r.variant + ',' + std::to_string(r.runs) + ',' +
           Fixed(r.train_mean) + ',' + Fixed(r.train_stderr) + ',' +
           (r.test_mean ? Fixed(*r.test_mean) : std::string()) + ',' +
           (r.test_stderr ? Fixed(*r.test_stderr) : std::string()) + '\n';
  }
  return out;
}

}  // namespace whirl::experiment
