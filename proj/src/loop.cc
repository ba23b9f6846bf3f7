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

#include "whirl/loop.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "whirl/errors.h"

namespace whirl::loop {
namespace {

// Stream tags for DeriveSeed.
enum : uint64_t {
  kSampleTag = 1,
  kPriorTag,
  kRolloutTag,
  kFitTaskTag,
  kFitExplorationTag,
  kEvalTag,
  kEvalPriorTag,
  kTestTag,
  kInitTag,
};

void ParallelFor(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mu);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

Eigen::VectorXd GaussianResidual(const Eigen::VectorXd& sigma, Rng& rng) {
  return sigma.cwiseProduct(StandardNormalVector(rng, sigma.size()));
}

// Policy sample plus the exploration floor for stochastic policies.
Eigen::VectorXd DrawFrom(const ResidualPolicy& policy, const Eigen::VectorXd& condition,
                         const LoopConfig& cfg, Rng& rng) {
  Eigen::VectorXd r = policy.Sample(condition, rng);
  if (policy.trained() && policy.kind() == PolicyKind::kCvae && cfg.floor_fraction > 0.0) {
    r += cfg.floor_fraction * GaussianResidual(policy.sigma(), rng);
  }
  return r;
}

}  // namespace

Eigen::VectorXd ResidualSigma::ForAction(int num_mid) const {
  const int n_pos = 3 * (num_mid + 2);
  Eigen::VectorXd s(n_pos + 6);
  s.head(n_pos).setConstant(translation);
  s.segment<3>(n_pos).setConstant(rotation);
  s[n_pos + 3] = gripper;
  s.tail<2>().setConstant(schedule);
  return s;
}

void ValidateLoopConfig(const LoopConfig& cfg) {
  if (cfg.samples_per_demo < 1) throw ConfigError("samples per demo must be positive");
  if (cfg.n_elite < 1 || cfg.n_elite > cfg.samples_per_demo) {
    throw ConfigError("n_elite must lie in [1, samples_per_demo]");
  }
  if (cfg.p_explore < 0.0 || cfg.p_explore > 1.0) {
    throw ConfigError("p_explore must lie in [0, 1]");
  }
  const ResidualSigma& s = cfg.sigma;
  if (!(s.translation > 0.0 && s.rotation > 0.0 && s.gripper > 0.0 && s.schedule > 0.0)) {
    throw ConfigError("residual sigma must be positive");
  }
  if (cfg.iterations < 0 || cfg.eval_samples < 0) {
    throw ConfigError("iteration and evaluation counts must be non-negative");
  }
  if (cfg.floor_fraction < 0.0) throw ConfigError("floor fraction must be non-negative");
}

DemoContext PrepareDemo(const sim::Scene& scene, const demo::DemoVideo& demo,
                        const prior::ExtractionConfig& extraction,
                        const align::AlignmentModel& model, const align::AugmentationSpec& augs,
                        bool held_out) {
  DemoContext ctx;
  ctx.scene = scene;
  ctx.demo = demo;
  ctx.extraction = extraction;
  ctx.held_out = held_out;
  prior::ExtractionConfig exact = extraction;
  exact.waypoint_sigma = 0.0;
  const prior::ExtractedPrior extracted = prior::ExtractPrior(demo, scene, exact, 0);
  ctx.window = extracted.window;
  ctx.center_prior = extracted.prior;
  ctx.condition = align::DemoConditionVector(model, demo, ctx.center_prior, augs);
  ctx.demo_embedding = model.VideoEmbed(align::MaskAgent(demo), augs);
  ctx.demo_embedding_with_agent = model.VideoEmbed(align::WithAgent(demo), augs);
  return ctx;
}

prior::Prior SamplePrior(const DemoContext& ctx, uint64_t seed) {
  const prior::HandPrior hand = prior::ExtractHandPrior(
      ctx.demo, ctx.window, ctx.scene.camera.intrinsics, ctx.extraction, seed);
  return prior::MapToRobot(hand, ctx.scene.camera.BelievedCameraToRobot());
}

ResidualPolicy::ResidualPolicy(PolicyKind kind, const Eigen::VectorXd& sigma, int condition_dim,
                               const nn::CvaeArchitecture& arch, uint64_t init_seed)
    : kind_(kind), sigma_(sigma) {
  Rng rng(init_seed);
  if (kind == PolicyKind::kCvae) {
    nn::CvaeArchitecture a = arch;
    a.x_dim = static_cast<int>(sigma.size());
    a.c_dim = condition_dim;
    cvae_ = nn::InitCvae(a, rng);
  } else {
    std::vector<int> sizes{condition_dim};
    sizes.insert(sizes.end(), arch.hidden.begin(), arch.hidden.end());
    sizes.push_back(static_cast<int>(sigma.size()));
    regressor_ = nn::InitMlp(sizes, arch.activation, rng);
  }
}

Eigen::VectorXd ResidualPolicy::Sample(const Eigen::VectorXd& condition, Rng& rng) const {
  if (!trained_) return GaussianResidual(sigma_, rng);
  if (kind_ == PolicyKind::kCvae) return nn::CvaeSample(cvae_, condition, rng);
  return nn::MlpForward(regressor_, condition).col(0);
}

nn::FitReport ResidualPolicy::Fit(const std::vector<nn::Example>& residuals,
                                  const nn::FitOptions& options, Rng& rng) {
  const std::vector<nn::Example>& scaled = residuals;
  nn::FitReport report;
  if (kind_ == PolicyKind::kCvae) {
    cvae_ = nn::CvaeFit(cvae_, scaled, options, rng, &report);
  } else {
    if (scaled.empty()) throw ParameterError("cannot fit a policy to an empty dataset");
    Eigen::MatrixXd in(scaled.front().c.size(), static_cast<Eigen::Index>(scaled.size()));
    Eigen::MatrixXd out(scaled.front().x.size(), static_cast<Eigen::Index>(scaled.size()));
    for (size_t i = 0; i < scaled.size(); ++i) {
      in.col(static_cast<Eigen::Index>(i)) = scaled[i].c;
      out.col(static_cast<Eigen::Index>(i)) = scaled[i].x;
    }
    regressor_ = nn::FitRegression(regressor_, in, out, options, rng, &report);
  }
  trained_ = true;
  return report;
}

void ResidualPolicy::Restore(const nn::CvaeParams& cvae, const nn::MlpParams& regressor,
                             bool trained) {
  cvae_ = cvae;
  regressor_ = regressor;
  trained_ = trained;
}

Policies MakePolicies(const LoopConfig& cfg, int condition_dim, int num_mid, uint64_t seed) {
  const Eigen::VectorXd sigma = cfg.sigma.ForAction(num_mid);
  return {ResidualPolicy(cfg.policy_kind, sigma, condition_dim, cfg.architecture,
                         DeriveSeed(seed, {kInitTag, 0})),
          ResidualPolicy(PolicyKind::kCvae, sigma, condition_dim, cfg.architecture,
                         DeriveSeed(seed, {kInitTag, 1}))};
}

SampledResidual SampleResidual(int iteration, const Policies& policies,
                               const Eigen::VectorXd& condition, const LoopConfig& cfg,
                               Rng& rng) {
  if (iteration == 0) return {GaussianResidual(policies.task.sigma(), rng), false};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool explore = unit(rng) < cfg.p_explore;
  const ResidualPolicy& source = explore ? policies.exploration : policies.task;
  return {DrawFrom(source, condition, cfg, rng), explore};
}

std::vector<int> SelectElites(const std::vector<double>& costs, int n) {
  std::vector<int> idx(costs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return costs[a] < costs[b]; });
  idx.resize(std::min<size_t>(idx.size(), static_cast<size_t>(std::max(n, 0))));
  return idx;
}

std::vector<int> SelectTopChange(const std::vector<double>& scores, int n) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  idx.resize(std::min<size_t>(idx.size(), static_cast<size_t>(std::max(n, 0))));
  return idx;
}

IterationReport ExecuteIteration(int iteration, const std::vector<DemoContext>& demos,
                                 const Policies& policies, const LoopConfig& cfg,
                                 const align::AlignmentModel& model,
                                 const align::AugmentationSpec& augs, uint64_t seed) {
  ValidateLoopConfig(cfg);
  const int k_demos = static_cast<int>(demos.size());
  const int m_samples = cfg.samples_per_demo;
  std::vector<prior::Prior> priors;
  for (int k = 0; k < k_demos; ++k) {
    priors.push_back(SamplePrior(demos[k], DeriveSeed(seed, {kPriorTag, static_cast<uint64_t>(iteration),
                                                             static_cast<uint64_t>(k)})));
  }

  IterationReport report;
  report.iteration = iteration;
  report.samples.assign(k_demos, std::vector<SampleRecord>(m_samples));
  ParallelFor(k_demos * m_samples, cfg.threads, [&](int job) {
    const int k = job / m_samples;
    const int m = job % m_samples;
    const DemoContext& ctx = demos[k];
    const uint64_t it = static_cast<uint64_t>(iteration);
    Rng rng = MakeRng(seed, {kSampleTag, it, static_cast<uint64_t>(k), static_cast<uint64_t>(m)});
    const SampledResidual drawn = SampleResidual(iteration, policies, ctx.condition, cfg, rng);
    const WaypointAction action = ApplyResidual(priors[k], drawn.residual);
    const sim::Rollout rollout = sim::ExecuteAction(
        ctx.scene, action,
        DeriveSeed(seed, {kRolloutTag, it, static_cast<uint64_t>(k), static_cast<uint64_t>(m)}));
    const align::FeatureTrajectory masked = align::MaskAgent(rollout);

    SampleRecord& rec = report.samples[k][m];
    rec.residual = drawn.residual;
    rec.from_exploration = drawn.from_exploration;
    if (cfg.agent_agnostic) {
      rec.cost = (ctx.demo_embedding - model.VideoEmbed(masked, augs)).norm();
    } else {
      rec.cost = (ctx.demo_embedding_with_agent -
                  model.VideoEmbed(align::WithAgent(rollout, ctx.scene), augs))
                     .norm();
    }
    rec.change_score = model.ChangeScore(masked);
    rec.success = sim::Success(ctx.scene, rollout);
  });

  double successes = 0.0;
  double cost_sum = 0.0;
  double change_sum = 0.0;
  for (const auto& per_demo : report.samples) {
    double demo_successes = 0.0;
    for (const SampleRecord& r : per_demo) {
      demo_successes += r.success ? 1.0 : 0.0;
      cost_sum += r.cost;
      change_sum += r.change_score;
    }
    successes += demo_successes;
    report.demo_success.push_back(demo_successes / m_samples);
  }
  const double total = static_cast<double>(k_demos) * m_samples;
  if (total > 0) {
    report.train_success = successes / total;
    report.mean_cost = cost_sum / total;
    report.mean_change_score = change_sum / total;
  }
  return report;
}

void FitFromIteration(IterationReport& report, const std::vector<DemoContext>& demos,
                      Policies& policies, const LoopConfig& cfg, uint64_t seed) {
  std::vector<nn::Example> task_data;
  std::vector<nn::Example> exploration_data;
  report.elites.clear();
  report.exploration_elites.clear();
  for (size_t k = 0; k < demos.size(); ++k) {
    if (demos[k].held_out) throw std::logic_error("held-out demo passed to policy fitting");
    const auto& samples = report.samples[k];
    std::vector<double> costs;
    std::vector<double> changes;
    for (const SampleRecord& r : samples) {
      costs.push_back(r.cost);
      changes.push_back(r.change_score);
    }
    report.elites.push_back(SelectElites(costs, cfg.n_elite));
    report.exploration_elites.push_back(SelectTopChange(changes, cfg.n_elite));
    for (int e : report.elites.back()) task_data.push_back({samples[e].residual, demos[k].condition});
    for (int e : report.exploration_elites.back()) {
      exploration_data.push_back({samples[e].residual, demos[k].condition});
    }
  }
  const uint64_t it = static_cast<uint64_t>(report.iteration);
  Rng task_rng = MakeRng(seed, {kFitTaskTag, it});
  report.task_fit = policies.task.Fit(task_data, cfg.fit, task_rng);
  if (cfg.fit_exploration) {
    Rng exp_rng = MakeRng(seed, {kFitExplorationTag, it});
    report.exploration_fit = policies.exploration.Fit(exploration_data, cfg.fit, exp_rng);
  }
  report.fitted = true;
}

IterationReport RunIteration(int iteration, const std::vector<DemoContext>& demos,
                             Policies& policies, const LoopConfig& cfg,
                             const align::AlignmentModel& model,
                             const align::AugmentationSpec& augs, uint64_t seed) {
  IterationReport report = ExecuteIteration(iteration, demos, policies, cfg, model, augs, seed);
  FitFromIteration(report, demos, policies, cfg, seed);
  return report;
}

std::optional<double> Evaluate(const ResidualPolicy& policy, const DemoContext& ctx, int n_eval,
                               const LoopConfig& cfg, uint64_t seed) {
  if (n_eval <= 0) return std::nullopt;
  const prior::Prior prior = SamplePrior(ctx, DeriveSeed(seed, {kEvalPriorTag}));
  std::vector<char> ok(n_eval, 0);
  ParallelFor(n_eval, cfg.threads, [&](int m) {
    Rng rng = MakeRng(seed, {kEvalTag, static_cast<uint64_t>(m)});
    const Eigen::VectorXd residual = DrawFrom(policy, ctx.condition, cfg, rng);
    const sim::Rollout rollout = sim::ExecuteAction(ctx.scene, ApplyResidual(prior, residual),
                                                    DeriveSeed(seed, {kRolloutTag, static_cast<uint64_t>(m)}));
    ok[m] = sim::Success(ctx.scene, rollout) ? 1 : 0;
  });
  return static_cast<double>(std::count(ok.begin(), ok.end(), 1)) / n_eval;
}

TrainState Train(const std::vector<DemoContext>& train_demos,
                 const std::vector<DemoContext>& test_demos, const LoopConfig& cfg,
                 const align::AlignmentModel& model, const align::AugmentationSpec& augs,
                 uint64_t seed, std::optional<TrainState> resume,
                 const CheckpointFn& on_iteration) {
  ValidateLoopConfig(cfg);
  if (train_demos.empty()) throw ConfigError("training needs at least one demonstration");
  for (const DemoContext& d : train_demos) {
    if (d.held_out) throw std::logic_error("held-out demo in the training set");
  }
  TrainState state;
  if (resume) {
    state = std::move(*resume);
  } else {
    state.policies = MakePolicies(cfg, static_cast<int>(train_demos.front().condition.size()),
                                  static_cast<int>(train_demos.front().center_prior.w_mid.size()),
                                  seed);
  }
  for (int it = state.next_iteration; it <= cfg.iterations; ++it) {
    IterationReport report =
        ExecuteIteration(it, train_demos, state.policies, cfg, model, augs, seed);

    CurvePoint point;
    point.iteration = it;
    point.train_success = report.train_success;
    point.mean_cost = report.mean_cost;
    point.mean_change_score = report.mean_change_score;
    if (!test_demos.empty() && cfg.eval_samples > 0) {
      double sum = 0.0;
      for (size_t j = 0; j < test_demos.size(); ++j) {
        sum += *Evaluate(state.policies.task, test_demos[j], cfg.eval_samples, cfg,
                         DeriveSeed(seed, {kTestTag, static_cast<uint64_t>(it), j}));
      }
      point.test_success = sum / static_cast<double>(test_demos.size());
    }
    if (it < cfg.iterations) FitFromIteration(report, train_demos, state.policies, cfg, seed);

    state.curve.push_back(point);
    state.reports.push_back(std::move(report));
    state.next_iteration = it + 1;
    if (on_iteration) on_iteration(state);
  }
  return state;
}

}  // namespace whirl::loop
