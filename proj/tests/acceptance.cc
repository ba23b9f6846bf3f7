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

// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "whirl/align.h"
#include "whirl/demo.h"
#include "whirl/experiment.h"
#include "whirl/nn.h"
#include "whirl/prior.h"
#include "whirl/scene_io.h"

namespace fs = std::filesystem;
namespace ex = whirl::experiment;
using whirl::Rng;

namespace {

const fs::path kConfigs = fs::path(WHIRL_SOURCE_DIR) / "configs";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string F(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// Per-seed results of one task/variant, computed once.
std::vector<ex::SeedResult> Runs(const std::string& config, ex::Variant variant) {
  static std::map<std::pair<std::string, int>, std::vector<ex::SeedResult>> cache;
  const auto key = std::make_pair(config, static_cast<int>(variant));
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  ex::ExperimentConfig cfg = ex::LoadExperimentConfig(kConfigs / config);
  cfg.variant = variant;
  std::vector<ex::SeedResult> out;
  for (uint64_t seed : cfg.seeds) out.push_back(ex::RunSeed(cfg, seed, std::nullopt, false));
  cache[key] = out;
  return out;
}

Outcome Improvement(const std::string& config) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<ex::SeedResult> runs = Runs(config, ex::Variant::kWhirl);
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  double it0 = 0.0;
  int improved = 0;
  std::string per_seed;
  for (const ex::SeedResult& r : runs) {
    const double first = r.curve.front().train_success;
    const double last = r.curve.back().train_success;
    it0 += first;
    improved += last - first >= 0.20;
    per_seed += " " + F(first, 2) + "->" + F(last, 2);
  }
  it0 /= static_cast<double>(runs.size());
  const bool calibrated = it0 >= 0.30 && it0 <= 0.55;
  const bool in_budget = minutes <= 10.0;
  return {calibrated && improved >= 4 && in_budget,
          "iteration-0 mean " + F(it0) + " (need [0.30, 0.55]), " + std::to_string(improved) +
              "/5 seeds improve >= 0.20, " + F(minutes, 2) + " min; seeds" + per_seed};
}

double MeanFinal(const std::vector<ex::SeedResult>& runs) {
  double s = 0.0;
  for (const ex::SeedResult& r : runs) s += r.curve.back().train_success;
  return s / static_cast<double>(runs.size());
}

Outcome Ablation() {
  const double whirl = MeanFinal(Runs("drawer.cfg", ex::Variant::kWhirl));
  const double no_exp = MeanFinal(Runs("drawer.cfg", ex::Variant::kNoExploration));
  const double no_aa = MeanFinal(Runs("drawer.cfg", ex::Variant::kNoAgentAgnostic));
  const double bc = MeanFinal(Runs("drawer.cfg", ex::Variant::kBc));
  const bool order = whirl >= no_exp && no_exp >= no_aa && no_aa >= bc;
  const bool gap = whirl - no_aa >= 0.10;
  return {order && gap, "whirl " + F(whirl) + ", no_exploration " + F(no_exp) +
                            ", no_agent_agnostic " + F(no_aa) + ", bc " + F(bc) +
                            "; ordering " + (order ? "holds" : "violated") +
                            ", whirl - no_agent_agnostic " + F(whirl - no_aa) + " (need >= 0.10)"};
}

Outcome Generalization() {
  int improved = 0;
  std::string per_seed;
  for (const ex::SeedResult& r : Runs("drawer.cfg", ex::Variant::kWhirl)) {
    const double first = r.curve.front().test_success.value_or(0.0);
    const double last = r.curve.back().test_success.value_or(0.0);
    improved += last - first >= 0.10;
    per_seed += " " + F(first, 2) + "->" + F(last, 2);
  }
  return {improved >= 3, std::to_string(improved) + "/5 seeds improve held-out success >= 0.10;" +
                             per_seed};
}

Outcome SavgolOracle() {
  Rng rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (auto [window, order] : {std::pair{5, 2}, {7, 2}, {7, 3}, {9, 3}}) {
    for (int degree = 0; degree <= order; ++degree) {
      for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> coef(degree + 1);
        for (double& c : coef) c = u(rng);
        Eigen::VectorXd y(50);
        for (int t = 0; t < 50; ++t) {
          const double x = 0.05 * t - 1.0;
          double v = 0.0;
          for (int k = degree; k >= 0; --k) v = v * x + coef[k];
          y[t] = v;
        }
        const Eigen::VectorXd f = whirl::prior::SavgolFilter(y, window, order);
        for (int t = window / 2; t < 50 - window / 2; ++t) {
          worst = std::max(worst, std::abs(f[t] - y[t]));
        }
      }
    }
  }
  std::ostringstream d;
  d << "max interior error " << std::scientific << std::setprecision(2) << worst << " (need < 1e-9)";
  return {worst < 1e-9, d.str()};
}

bool ReluKink(const whirl::nn::MlpParams& a, const Eigen::MatrixXd& xa,
              const whirl::nn::MlpParams& b, const Eigen::MatrixXd& xb) {
  whirl::nn::MlpTape ta;
  whirl::nn::MlpTape tb;
  whirl::nn::MlpForward(a, xa, &ta);
  whirl::nn::MlpForward(b, xb, &tb);
  for (size_t l = 0; l + 1 < ta.pre.size(); ++l) {
    if (((ta.pre[l].array() > 0) != (tb.pre[l].array() > 0)).any()) return true;
  }
  return false;
}

Eigen::MatrixXd Stack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

Eigen::MatrixXd DecoderInput(const whirl::nn::CvaeParams& p, const Eigen::MatrixXd& x,
                             const Eigen::MatrixXd& c, const Eigen::MatrixXd& eps) {
  const Eigen::MatrixXd enc = whirl::nn::MlpForward(p.encoder, Stack(x, c));
  const Eigen::MatrixXd sd = (0.5 * enc.bottomRows(p.latent_dim).array()).exp().matrix();
  return Stack(enc.topRows(p.latent_dim) + sd.cwiseProduct(eps), c);
}

struct GradStats {
  int checked = 0;
  double worst = 0.0;
  double worst_abs = 0.0;
};

// Central differences on randomly chosen coordinates of `params`, skipping
// those whose perturbation flips a relu unit. The relative error floor scales
// with |loss|, since the differences carry round-off near eps * |loss| / h.
template <typename Params, typename Loss, typename Kink>
GradStats CheckCoords(const Params& params, const Params& grads, const Loss& loss,
                      const Kink& kink, int want, Rng& rng) {
  constexpr double kH = 1e-5;
  std::vector<std::pair<size_t, size_t>> coords;
  const auto blocks = params.Blocks();
  for (size_t b = 0; b < blocks.size(); ++b) {
    for (size_t i = 0; i < blocks[b].size(); ++i) coords.emplace_back(b, i);
  }
  std::shuffle(coords.begin(), coords.end(), rng);
  const double floor = 1e-6 * std::max(1.0, std::abs(loss(params)));
  GradStats s;
  for (auto [b, i] : coords) {
    if (s.checked >= want) break;
    Params plus = params;
    Params minus = params;
    plus.Blocks()[b][i] += kH;
    minus.Blocks()[b][i] -= kH;
    if (kink(plus, minus)) continue;
    const double numeric = (loss(plus) - loss(minus)) / (2 * kH);
    const double analytic = grads.Blocks()[b][i];
    const double err = std::abs(analytic - numeric);
    s.worst = std::max(s.worst, err / std::max({std::abs(analytic), std::abs(numeric), floor}));
    s.worst_abs = std::max(s.worst_abs, err);
    ++s.checked;
  }
  return s;
}

Outcome GradientChecks() {
  using namespace whirl::nn;
  Rng rng(2024);
  const MlpParams mlp = InitMlp({8, 32, 24, 16, 4}, Activation::kRelu, rng);
  const Eigen::MatrixXd x = whirl::StandardNormalMatrix(rng, 8, 6);
  const Eigen::MatrixXd y = whirl::StandardNormalMatrix(rng, 4, 6);
  const MlpGradients g = MlpBackward(mlp, x, MlpForward(mlp, x) - y);
  const GradStats ms = CheckCoords(
      mlp, g.params, [&](const MlpParams& p) { return 0.5 * (MlpForward(p, x) - y).squaredNorm(); },
      [&](const MlpParams& a, const MlpParams& b) { return ReluKink(a, x, b, x); }, 150, rng);

  CvaeArchitecture arch;
  arch.x_dim = 15;
  arch.c_dim = 10;
  arch.hidden = {32, 32, 32};
  arch.latent_dim = 4;
  arch.beta = 0.1;
  const CvaeParams cvae = InitCvae(arch, rng);
  const Eigen::MatrixXd cx = whirl::StandardNormalMatrix(rng, 15, 5);
  const Eigen::MatrixXd cc = whirl::StandardNormalMatrix(rng, 10, 5);
  const Eigen::MatrixXd eps = whirl::StandardNormalMatrix(rng, 4, 5);
  CvaeParams cg;
  CvaeLossAndGrads(cvae, cx, cc, eps, &cg);
  const Eigen::MatrixXd enc_in = Stack(cx, cc);
  const GradStats cs = CheckCoords(
      cvae, cg,
      [&](const CvaeParams& p) { return CvaeLossAndGrads(p, cx, cc, eps, nullptr).total; },
      [&](const CvaeParams& a, const CvaeParams& b) {
        return ReluKink(a.encoder, enc_in, b.encoder, enc_in) ||
               ReluKink(a.decoder, DecoderInput(a, cx, cc, eps), b.decoder,
                        DecoderInput(b, cx, cc, eps));
      },
      150, rng);
  const bool pass = ms.checked >= 100 && cs.checked >= 100 && ms.worst < 1e-4 && cs.worst < 1e-4;
  std::ostringstream d;
  d << "mlp " << ms.checked << " coords, worst rel err " << std::scientific << std::setprecision(2)
    << ms.worst << " (abs " << ms.worst_abs << "); cvae " << cs.checked << " coords, worst "
    << cs.worst << " (abs " << cs.worst_abs << ")";
  return {pass, d.str()};
}

whirl::sim::Rollout RandomRollout(Rng& rng, int length) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> repeat(0, 3);
  whirl::sim::Rollout r;
  whirl::sim::EnvState s;
  s.joint_values.assign(1, 0.0);
  s.object_poses.assign(1, whirl::sim::Pose{});
  while (static_cast<int>(r.frames.size()) < length) {
    s.joint_values[0] = normal(rng);
    s.object_poses[0].position = whirl::Vec3(normal(rng), normal(rng), normal(rng));
    s.object_poses[0].ypr = whirl::Vec3(normal(rng), normal(rng), normal(rng));
    for (int k = repeat(rng); k >= 0 && static_cast<int>(r.frames.size()) < length; --k) {
      r.frames.push_back(s);
    }
  }
  return r;
}

Outcome ChangeScoreOracle() {
  const whirl::align::AlignmentModel model;
  Rng rng(77);
  std::uniform_int_distribution<int> len(2, 50);
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const whirl::align::FeatureTrajectory t = whirl::align::MaskAgent(RandomRollout(rng, len(rng)));
    double brute = 0.0;
    for (int i = 0; i < t.length(); ++i) {
      for (int j = 0; j < t.length(); ++j) {
        brute = std::max(brute, (model.FrameEmbed(t.frames.row(i).transpose()) -
                                 model.FrameEmbed(t.frames.row(j).transpose()))
                                    .norm());
      }
    }
    exact += model.ChangeScore(t) == brute;
  }
  return {exact == 100, std::to_string(exact) + "/100 rollouts match exactly"};
}

Outcome AgentInvariance() {
  const whirl::align::AlignmentModel model;
  const whirl::align::AugmentationSpec augs = whirl::align::DefaultAugmentations();
  Rng rng(99);
  std::normal_distribution<double> normal(0.0, 0.1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int unchanged = 0;
  for (const char* id : {"drawer_a", "door_a", "shelf_mug", "dishwasher_a"}) {
    const whirl::sim::Scene scene = whirl::sim::LoadScene(kConfigs / "scenes" / (std::string(id) + ".yaml"));
    const whirl::demo::DemoVideo video = whirl::demo::ScriptedExpert(scene, 0).video;
    const auto prior = whirl::prior::ExtractPrior(video, scene, {}, 0).prior;
    const whirl::sim::Rollout rollout = whirl::sim::ExecuteAction(scene, prior, 0);
    const auto demo_traj = whirl::align::MaskAgent(video);
    const double cost = model.TaskCost(demo_traj, whirl::align::MaskAgent(rollout), augs);
    const double change = model.ChangeScore(whirl::align::MaskAgent(rollout));
    for (int k = 0; k < 25; ++k) {
      whirl::sim::Rollout moved = rollout;
      for (auto& f : moved.frames) {
        f.ee.position += whirl::Vec3(normal(rng), normal(rng), normal(rng));
        f.ee.ypr += whirl::Vec3(normal(rng), normal(rng), normal(rng));
        f.ee.aperture = unit(rng);
      }
      const auto masked = whirl::align::MaskAgent(moved);
      unchanged += model.TaskCost(demo_traj, masked, augs) - cost == 0.0 &&
                   model.ChangeScore(masked) - change == 0.0;
    }
  }
  return {unchanged == 100, std::to_string(unchanged) + "/100 perturbations leave both exactly unchanged"};
}

Outcome Calibration() {
  std::string detail;
  bool pass = true;
  for (const char* config : {"drawer.cfg", "door.cfg"}) {
    const ex::ExperimentConfig cfg = ex::LoadExperimentConfig(kConfigs / config);
    std::vector<whirl::sim::Scene> scenes;
    for (const auto& p : cfg.train_scenes) scenes.push_back(whirl::sim::LoadScene(p));
    int ok = 0;
    for (int seed = 0; seed < 20; ++seed) {
      const whirl::sim::Scene& scene = scenes[seed % scenes.size()];
      const auto video = whirl::demo::ScriptedExpert(scene, seed).video;
      const auto prior = whirl::prior::ExtractPrior(video, scene, cfg.extraction, seed).prior;
      ok += whirl::sim::Success(scene, whirl::sim::ExecuteAction(scene, prior, seed));
    }
    pass = pass && ok >= 18;
    detail += std::string(detail.empty() ? "" : ", ") + ex::TaskName(cfg.task).data() + " " +
              std::to_string(ok) + "/20";
  }
  return {pass, detail + " (need >= 18/20 each)"};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome Determinism() {
  const fs::path root = fs::temp_directory_path() / "whirl_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::string> files;
  for (const char* run : {"a", "b"}) {
    const fs::path out = root / run;
    const std::string cmd = std::string("\"") + WHIRL_CLI_PATH + "\" run --config \"" +
                            (kConfigs / "drawer.cfg").string() + "\" --seed 17 --out \"" +
                            out.string() + "\" > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "cli run failed: " + cmd};
    files.push_back(Slurp(out / "drawer_whirl" / "curves" / "seed_17.csv") + "\n--\n" +
                    Slurp(out / "drawer_whirl" / "manifest.json"));
  }
  const bool same = files[0] == files[1] && files[0].size() > 10;
  return {same, same ? "curve and manifest files byte-identical across two CLI runs"
                     : "results files differ"};
}

Outcome MultiModality() {
  using namespace whirl::nn;
  Rng rng(31);
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(15, 0.5);
  const Eigen::VectorXd b = Eigen::VectorXd::Constant(15, -0.5);
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(3, 0.2);
  std::normal_distribution<double> jitter(0.0, 0.05);
  std::vector<Example> data;
  for (int i = 0; i < 60; ++i) {
    Eigen::VectorXd x = i % 2 ? a : b;
    for (Eigen::Index d = 0; d < x.size(); ++d) x[d] += jitter(rng);
    data.push_back({x, c});
  }
  CvaeArchitecture arch;
  arch.x_dim = 15;
  arch.c_dim = 3;
  CvaeParams p = InitCvae(arch, rng);
  p = CvaeFit(p, data, FitOptions{}, rng);
  int near_a = 0;
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd s = CvaeSample(p, c, rng);
    near_a += (s - a).norm() < (s - b).norm();
  }
  const double fa = near_a / 200.0;
  return {fa >= 0.10 && fa <= 0.90,
          "cluster shares " + F(fa, 3) + " / " + F(1.0 - fa, 3) + " over 200 draws"};
}

}  // namespace

// With arguments, runs only the listed criterion numbers.
int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "improvement curve, drawer", [] { return Improvement("drawer.cfg"); }},
      {2, "improvement curve, door", [] { return Improvement("door.cfg"); }},
      {3, "ablation ordering, drawer", Ablation},
      {4, "held-out drawer generalization", Generalization},
      {5, "smoothing filter polynomial reproduction", SavgolOracle},
      {6, "gradient checks", GradientChecks},
      {7, "change score oracle", ChangeScoreOracle},
      {8, "agent invariance", AgentInvariance},
      {9, "calibration fixture", Calibration},
      {10, "determinism", Determinism},
      {11, "multi-modality", MultiModality},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failed = 0;
  int ran = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << std::setw(2) << c.id << "  "
              << c.name << ": " << o.detail << std::endl;
  }
  std::cout << (ran - failed) << "/" << ran << " criteria pass" << std::endl;
  return failed == 0 ? 0 : 1;
}
