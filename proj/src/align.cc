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

#include "whirl/align.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "whirl/errors.h"
#include "whirl/random.h"

namespace whirl::align {
namespace {

constexpr int kMinVideoFrames = 4;

int EnvFeatureDim(size_t joints, size_t objects) {
  return static_cast<int>(joints + 6 * objects);
}

template <typename Joints, typename Objects>
void FillEnv(Eigen::MatrixXd& out, Eigen::Index t, const Joints& joints, const Objects& objects) {
  int k = 0;
  for (double q : joints) out(t, k++) = q;
  for (const sim::Pose& p : objects) {
    out.row(t).segment<3>(k) = p.position.transpose();
    out.row(t).segment<3>(k + 3) = p.ypr.transpose();
    k += 6;
  }
}

}  // namespace

FeatureTrajectory MaskAgent(const sim::Rollout& rollout) {
  if (rollout.frames.empty()) throw DataError("rollout has no frames");
  const sim::EnvState& first = rollout.frames.front();
  FeatureTrajectory out;
  out.frames.resize(static_cast<Eigen::Index>(rollout.frames.size()),
                    EnvFeatureDim(first.joint_values.size(), first.object_poses.size()));
  for (size_t t = 0; t < rollout.frames.size(); ++t) {
    FillEnv(out.frames, static_cast<Eigen::Index>(t), rollout.frames[t].joint_values,
            rollout.frames[t].object_poses);
  }
  return out;
}

FeatureTrajectory MaskAgent(const demo::DemoVideo& demo) {
  if (demo.env_truth.empty() || demo.env_truth.size() != demo.frames.size()) {
    throw DataError("demonstration carries no environment truth");
  }
  const demo::EnvFrame& first = demo.env_truth.front();
  FeatureTrajectory out;
  out.frames.resize(static_cast<Eigen::Index>(demo.env_truth.size()),
                    EnvFeatureDim(first.joint_values.size(), first.object_poses.size()));
  for (size_t t = 0; t < demo.env_truth.size(); ++t) {
    FillEnv(out.frames, static_cast<Eigen::Index>(t), demo.env_truth[t].joint_values,
            demo.env_truth[t].object_poses);
  }
  return out;
}

FeatureTrajectory WithAgent(const sim::Rollout& rollout, const sim::Scene& scene) {
  FeatureTrajectory env = MaskAgent(rollout);
  FeatureTrajectory out;
  out.includes_agent = true;
  out.frames.resize(env.length(), env.feature_dim() + 7);
  out.frames.leftCols(env.feature_dim()) = env.frames;
  const RigidTransform robot_to_cam = scene.camera.camera_to_robot.Inverse();
  for (int t = 0; t < env.length(); ++t) {
    const sim::EndEffectorState& ee = rollout.frames[t].ee;
    const Vec3 p = robot_to_cam.Apply(ee.position);
    out.frames.row(t).segment<3>(env.feature_dim()) = p.transpose();
    out.frames.row(t).segment<3>(env.feature_dim() + 3) = ee.ypr.transpose();
    out.frames(t, env.feature_dim() + 6) = ee.aperture;
  }
  return out;
}

FeatureTrajectory WithAgent(const demo::DemoVideo& demo) {
  FeatureTrajectory env = MaskAgent(demo);
  FeatureTrajectory out;
  out.includes_agent = true;
  out.frames.resize(env.length(), env.feature_dim() + 7);
  out.frames.leftCols(env.feature_dim()) = env.frames;
  for (int t = 0; t < env.length(); ++t) {
    const demo::HandFrame& f = demo.frames[t];
    out.frames.row(t).segment<3>(env.feature_dim()) = f.h.transpose();
    out.frames.row(t).segment<3>(env.feature_dim() + 3) = f.theta_hand.transpose();
    out.frames(t, env.feature_dim() + 6) = f.contact == demo::ContactClass::kNone ? 1.0 : 0.0;
  }
  return out;
}

AugmentationSpec DefaultAugmentations() {
  return {{0.8, 0.0, 0.0, 11}, {1.0, 0.0, 0.0, 12}, {1.25, 0.0, 0.0, 13}, {1.0, 0.0, 0.01, 14}};
}

FeatureTrajectory Augment(const FeatureTrajectory& traj, const Augmentation& aug) {
  if (aug.time_resample_factor < 0.5 || aug.time_resample_factor > 2.0) {
    throw ParameterError("time resample factor must lie in [0.5, 2]");
  }
  if (aug.start_crop_frac < 0.0 || aug.start_crop_frac > 0.5) {
    throw ParameterError("start crop must keep at least half of the frames");
  }
  FeatureTrajectory out = traj;
  const int n = traj.length();
  if (aug.start_crop_frac > 0.0) {
    const int drop = static_cast<int>(std::floor(aug.start_crop_frac * n));
    out.frames = traj.frames.bottomRows(n - drop).eval();
  }
  if (aug.time_resample_factor != 1.0) {
    const int src = out.length();
    const int dst = std::max(2, static_cast<int>(std::lround(src * aug.time_resample_factor)));
    Eigen::MatrixXd res(dst, out.feature_dim());
    for (int i = 0; i < dst; ++i) {
      const double tau = static_cast<double>(i) * (src - 1) / (dst - 1);
      const int a = std::min(static_cast<int>(std::floor(tau)), src - 1);
      const int b = std::min(a + 1, src - 1);
      const double w = tau - a;
      res.row(i) = (1.0 - w) * out.frames.row(a) + w * out.frames.row(b);
    }
    out.frames = std::move(res);
  }
  if (aug.feature_noise_sigma > 0.0) {
    Rng rng(aug.seed);
    out.frames += aug.feature_noise_sigma *
                  StandardNormalMatrix(rng, out.frames.rows(), out.frames.cols());
  }
  return out;
}

FrameEmbedder::FrameEmbedder(int feature_dim, const EmbeddingConfig& cfg) {
  if (feature_dim <= 0) throw ShapeError("frame features must be non-empty");
  Rng rng = MakeRng(cfg.seed, {0xf7a3e, static_cast<uint64_t>(feature_dim)});
  projection_ = StandardNormalMatrix(rng, cfg.frame_dim, feature_dim) *
                (cfg.projection_scale / std::sqrt(static_cast<double>(feature_dim)));
  bias_ = 0.5 * StandardNormalVector(rng, cfg.frame_dim);
}

Eigen::VectorXd FrameEmbedder::Embed(const Eigen::VectorXd& features) const {
  if (features.size() != projection_.cols()) {
    throw ShapeError("frame feature vector has the wrong dimension");
  }
  return (projection_ * features + bias_).array().tanh().matrix();
}

Eigen::MatrixXd FrameEmbedder::EmbedAll(const Eigen::MatrixXd& frames) const {
  if (frames.cols() != projection_.cols()) {
    throw ShapeError("frame feature vectors have the wrong dimension");
  }
  return ((frames * projection_.transpose()).rowwise() + bias_.transpose()).array().tanh().matrix();
}

double FrameEmbedder::OperatorNorm() const {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(projection_);
  return svd.singularValues()[0];
}

VideoEmbedder::VideoEmbedder(int feature_dim, const EmbeddingConfig& cfg)
    : frame_(feature_dim, cfg) {
  Rng rng = MakeRng(cfg.seed, {0x9001, static_cast<uint64_t>(feature_dim)});
  pool_projection_ = StandardNormalMatrix(rng, cfg.video_dim, 3 * cfg.frame_dim) /
                     std::sqrt(3.0 * cfg.frame_dim);
}

Eigen::VectorXd VideoEmbedder::Pool(const FeatureTrajectory& traj) const {
  const Eigen::MatrixXd e = frame_.EmbedAll(traj.frames);
  const Eigen::Index d = e.cols();
  Eigen::VectorXd pooled(3 * d);
  pooled.segment(0, d) = e.colwise().mean().transpose();
  pooled.segment(d, d) = (e.row(e.rows() - 1) - e.row(0)).transpose();
  pooled.segment(2 * d, d) = e.colwise().maxCoeff().transpose();
  return pooled;
}

Eigen::VectorXd VideoEmbedder::Embed(const FeatureTrajectory& traj,
                                     const AugmentationSpec& augs) const {
  if (traj.length() < kMinVideoFrames) throw DataError("trajectory too short to embed");
  if (augs.empty()) return pool_projection_ * Pool(traj);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(pool_projection_.rows());
  for (const Augmentation& aug : augs) sum += pool_projection_ * Pool(Augment(traj, aug));
  return sum / static_cast<double>(augs.size());
}

AlignmentModel::AlignmentModel(const EmbeddingConfig& cfg) : cfg_(cfg) {}

const VideoEmbedder& AlignmentModel::ForDim(int feature_dim) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = embedders_.find(feature_dim);
  if (it == embedders_.end()) {
    it = embedders_.emplace(feature_dim, std::make_unique<VideoEmbedder>(feature_dim, cfg_)).first;
  }
  return *it->second;
}

Eigen::VectorXd AlignmentModel::VideoEmbed(const FeatureTrajectory& traj,
                                           const AugmentationSpec& augs) const {
  return ForDim(traj.feature_dim()).Embed(traj, augs);
}

Eigen::VectorXd AlignmentModel::FrameEmbed(const Eigen::VectorXd& features) const {
  return ForDim(static_cast<int>(features.size())).frame().Embed(features);
}

double AlignmentModel::TaskCost(const FeatureTrajectory& demo, const FeatureTrajectory& rollout,
                                const AugmentationSpec& augs) const {
  if (demo.feature_dim() != rollout.feature_dim()) {
    throw ShapeError("demo and rollout features differ in dimension");
  }
  return (VideoEmbed(demo, augs) - VideoEmbed(rollout, augs)).norm();
}

double AlignmentModel::ChangeScore(const FeatureTrajectory& traj) const {
  if (traj.length() < 2) throw DataError("change score needs at least two frames");
  // Repeated consecutive frames embed identically and cannot change the
  // maximum, so only the first of each run is kept.
  std::vector<Eigen::Index> keep{0};
  for (Eigen::Index t = 1; t < traj.frames.rows(); ++t) {
    if (traj.frames.row(t) != traj.frames.row(keep.back())) keep.push_back(t);
  }
  const FrameEmbedder& frame = ForDim(traj.feature_dim()).frame();
  std::vector<Eigen::VectorXd> e;
  e.reserve(keep.size());
  for (Eigen::Index t : keep) e.push_back(frame.Embed(traj.frames.row(t).transpose()));
  double best = 0.0;
  for (size_t i = 0; i < e.size(); ++i) {
    for (size_t j = i + 1; j < e.size(); ++j) best = std::max(best, (e[i] - e[j]).norm());
  }
  return best;
}

Eigen::VectorXd NormalizePrior(const WaypointAction& prior) {
  Eigen::VectorXd v = prior.Flatten();
  const int ypr_at = 3 * static_cast<int>(prior.w_mid.size()) + 6;
  v.segment<3>(ypr_at) /= std::numbers::pi;
  return v;
}

Eigen::VectorXd DemoConditionVector(const AlignmentModel& model, const demo::DemoVideo& demo,
                                    const WaypointAction& prior, const AugmentationSpec& augs) {
  const Eigen::VectorXd phi = model.VideoEmbed(MaskAgent(demo), augs);
  const Eigen::VectorXd p = NormalizePrior(prior);
  Eigen::VectorXd c(phi.size() + p.size());
  c << phi, p;
  return c;
}

}  // namespace whirl::align
