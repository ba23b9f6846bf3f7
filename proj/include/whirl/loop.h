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

#ifndef WHIRL_LOOP_H_
#define WHIRL_LOOP_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "whirl/align.h"
#include "whirl/demo.h"
#include "whirl/nn.h"
#include "whirl/prior.h"
#include "whirl/sim_env.h"

// The sampling loop: residuals around each demonstration's prior are drawn
// from the task or exploration policy, executed, ranked by the alignment cost
// (task) or change score (exploration), and the elites refit both CVAEs.
namespace whirl::loop {

// Per-dimension residual spread, split by units.
struct ResidualSigma {
  double translation = 0.03;  // metres
  double rotation = 0.1;      // radians
  double gripper = 0.1;
  double schedule = 0.1;

  Eigen::VectorXd ForAction(int num_mid = 1) const;
  bool operator==(const ResidualSigma&) const = default;
};

enum class PolicyKind { kCvae, kRegression };

struct LoopConfig {
  int samples_per_demo = 30;  // M
  int n_elite = 10;
  ResidualSigma sigma;
  double p_explore = 0.2;
  int iterations = 3;
  int eval_samples = 30;
  double floor_fraction = 0.25;  // exploration floor, relative to sigma
  bool fit_exploration = true;
  bool agent_agnostic = true;
  PolicyKind policy_kind = PolicyKind::kCvae;
  nn::CvaeArchitecture architecture;
  nn::FitOptions fit;
  int threads = 0;  // 0: one per hardware thread

  bool operator==(const LoopConfig&) const = default;
};

// Throws ConfigError for n_elite > M, p_explore outside [0, 1] or
// non-positive sigma.
void ValidateLoopConfig(const LoopConfig& cfg);

// A demonstration prepared for the loop.
struct DemoContext {
  sim::Scene scene;
  demo::DemoVideo demo;
  prior::ExtractionConfig extraction;
  prior::InteractionWindow window;
  prior::Prior center_prior;        // waypoint noise disabled
  Eigen::VectorXd condition;        // c_k
  Eigen::VectorXd demo_embedding;   // masked demo, video level
  Eigen::VectorXd demo_embedding_with_agent;
  bool held_out = false;
};

DemoContext PrepareDemo(const sim::Scene& scene, const demo::DemoVideo& demo,
                        const prior::ExtractionConfig& extraction,
                        const align::AlignmentModel& model, const align::AugmentationSpec& augs,
                        bool held_out);

// Prior with freshly sampled waypoint noise.
prior::Prior SamplePrior(const DemoContext& ctx, uint64_t seed);

// Residual policy. Untrained policies sample N(0, diag(sigma^2)); trained
// ones decode raw residuals.
class ResidualPolicy {
 public:
  ResidualPolicy() = default;
  ResidualPolicy(PolicyKind kind, const Eigen::VectorXd& sigma, int condition_dim,
                 const nn::CvaeArchitecture& arch, uint64_t init_seed);

  bool trained() const { return trained_; }
  PolicyKind kind() const { return kind_; }
  const Eigen::VectorXd& sigma() const { return sigma_; }
  const nn::CvaeParams& cvae() const { return cvae_; }
  const nn::MlpParams& regressor() const { return regressor_; }

  Eigen::VectorXd Sample(const Eigen::VectorXd& condition, Rng& rng) const;

  // Fits to raw residuals paired with their conditioning vectors.
  nn::FitReport Fit(const std::vector<nn::Example>& residuals, const nn::FitOptions& options,
                    Rng& rng);

  // Restores a fitted state, e.g. from a checkpoint.
  void Restore(const nn::CvaeParams& cvae, const nn::MlpParams& regressor, bool trained);

 private:
  PolicyKind kind_ = PolicyKind::kCvae;
  Eigen::VectorXd sigma_;
  nn::CvaeParams cvae_;
  nn::MlpParams regressor_;
  bool trained_ = false;
};

struct Policies {
  ResidualPolicy task;
  ResidualPolicy exploration;
};

Policies MakePolicies(const LoopConfig& cfg, int condition_dim, int num_mid, uint64_t seed);

struct SampledResidual {
  Eigen::VectorXd residual;
  bool from_exploration = false;
};

// Iteration 0 draws N(0, sigma^2). Later iterations draw from the
// exploration policy with probability p_explore and from the task policy
// otherwise; CVAE samples get extra N(0, (floor * sigma)^2) noise.
SampledResidual SampleResidual(int iteration, const Policies& policies,
                               const Eigen::VectorXd& condition, const LoopConfig& cfg,
                               Rng& rng);

struct SampleRecord {
  Eigen::VectorXd residual;
  double cost = 0.0;
  double change_score = 0.0;
  bool success = false;
  bool from_exploration = false;
};

struct IterationReport {
  int iteration = 0;
  std::vector<std::vector<SampleRecord>> samples;  // [demo][m]
  std::vector<std::vector<int>> elites;            // lowest cost
  std::vector<std::vector<int>> exploration_elites;  // highest change
  std::vector<double> demo_success;
  double train_success = 0.0;
  double mean_cost = 0.0;
  double mean_change_score = 0.0;
  bool fitted = false;
  nn::FitReport task_fit;
  nn::FitReport exploration_fit;
};

// Indices of the n lowest costs; ties go to the lower index.
std::vector<int> SelectElites(const std::vector<double>& costs, int n);
// Indices of the n highest scores; ties go to the lower index.
std::vector<int> SelectTopChange(const std::vector<double>& scores, int n);

// Executes M residual samples per training demo. `seed` names the run.
IterationReport ExecuteIteration(int iteration, const std::vector<DemoContext>& demos,
                                 const Policies& policies, const LoopConfig& cfg,
                                 const align::AlignmentModel& model,
                                 const align::AugmentationSpec& augs, uint64_t seed);

// Elite selection and refitting on an executed iteration. Held-out demos
// never contribute (throws std::logic_error if one is passed).
void FitFromIteration(IterationReport& report, const std::vector<DemoContext>& demos,
                      Policies& policies, const LoopConfig& cfg, uint64_t seed);

// ExecuteIteration followed by FitFromIteration.
IterationReport RunIteration(int iteration, const std::vector<DemoContext>& demos,
                             Policies& policies, const LoopConfig& cfg,
                             const align::AlignmentModel& model,
                             const align::AugmentationSpec& augs, uint64_t seed);

// Success rate of task-policy samples on one demo; empty when n_eval == 0.
std::optional<double> Evaluate(const ResidualPolicy& policy, const DemoContext& ctx,
                               int n_eval, const LoopConfig& cfg, uint64_t seed);

struct CurvePoint {
  int iteration = 0;
  double train_success = 0.0;
  std::optional<double> test_success;
  double mean_cost = 0.0;
  double mean_change_score = 0.0;
};

using LearningCurve = std::vector<CurvePoint>;

struct TrainState {
  int next_iteration = 0;
  LearningCurve curve;
  std::vector<IterationReport> reports;
  Policies policies;
};

// Called after each completed iteration with the state needed to resume.
using CheckpointFn = std::function<void(const TrainState&)>;

// Runs iterations 0..cfg.iterations; the curve has iterations + 1 points.
// Iteration i's train success is measured on the rollouts drawn after i fits.
TrainState Train(const std::vector<DemoContext>& train_demos,
                 const std::vector<DemoContext>& test_demos, const LoopConfig& cfg,
                 const align::AlignmentModel& model, const align::AugmentationSpec& augs,
                 uint64_t seed, std::optional<TrainState> resume = std::nullopt,
                 const CheckpointFn& on_iteration = nullptr);

}  // namespace whirl::loop

#endif  // WHIRL_LOOP_H_
