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

#ifndef WHIRL_ALIGN_H_
#define WHIRL_ALIGN_H_

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>

#include "whirl/action.h"
#include "whirl/demo.h"
#include "whirl/sim_env.h"

// Agent-agnostic trajectory representations and the two objectives built on
// them: the video alignment cost used to rank task-policy samples and the
// change score used to rank exploration samples.
namespace whirl::align {

// Row t is the feature vector of frame t.
struct FeatureTrajectory {
  Eigen::MatrixXd frames;
  bool includes_agent = false;

  int length() const { return static_cast<int>(frames.rows()); }
  int feature_dim() const { return static_cast<int>(frames.cols()); }
};

// Environment-only features: joint values followed by 6-dof object poses.
FeatureTrajectory MaskAgent(const sim::Rollout& rollout);
FeatureTrajectory MaskAgent(const demo::DemoVideo& demo);

// Environment features followed by the acting agent's camera-frame position,
// wrist angles and gripper aperture. Used by the ablation without masking.
FeatureTrajectory WithAgent(const sim::Rollout& rollout, const sim::Scene& scene);
FeatureTrajectory WithAgent(const demo::DemoVideo& demo);

struct Augmentation {
  double time_resample_factor = 1.0;  // in [0.5, 2]
  double start_crop_frac = 0.0;       // at most 0.5
  double feature_noise_sigma = 0.0;
  uint64_t seed = 0;
};
using AugmentationSpec = std::vector<Augmentation>;

// Resampling at 0.8, 1.0 and 1.25 plus one noisy copy.
AugmentationSpec DefaultAugmentations();

// Throws ParameterError for out-of-range factors.
FeatureTrajectory Augment(const FeatureTrajectory& traj, const Augmentation& aug);

struct EmbeddingConfig {
  int frame_dim = 16;
  int video_dim = 64;
  double projection_scale = 3.0;
  uint64_t seed = 0;
};

// Frozen random projection followed by tanh.
class FrameEmbedder {
 public:
  FrameEmbedder(int feature_dim, const EmbeddingConfig& cfg);

  Eigen::VectorXd Embed(const Eigen::VectorXd& features) const;
  // One embedding per row.
  Eigen::MatrixXd EmbedAll(const Eigen::MatrixXd& frames) const;
  // Spectral norm of the projection; a Lipschitz constant of Embed.
  double OperatorNorm() const;

  const Eigen::MatrixXd& projection() const { return projection_; }
  const Eigen::VectorXd& bias() const { return bias_; }
  int feature_dim() const { return static_cast<int>(projection_.cols()); }

 private:
  Eigen::MatrixXd projection_;
  Eigen::VectorXd bias_;
};

// Frame embeddings pooled over time (mean, last-minus-first, max) and
// projected to a fixed-size video embedding.
class VideoEmbedder {
 public:
  VideoEmbedder(int feature_dim, const EmbeddingConfig& cfg);

  Eigen::VectorXd Embed(const FeatureTrajectory& traj, const AugmentationSpec& augs) const;
  // Pooled (3 * frame_dim) vector of one already-augmented trajectory.
  Eigen::VectorXd Pool(const FeatureTrajectory& traj) const;

  const FrameEmbedder& frame() const { return frame_; }

 private:
  FrameEmbedder frame_;
  Eigen::MatrixXd pool_projection_;
};

// Owns one frozen embedder per feature dimension, all derived from one seed.
class AlignmentModel {
 public:
  explicit AlignmentModel(const EmbeddingConfig& cfg = {});

  const VideoEmbedder& ForDim(int feature_dim) const;
  const EmbeddingConfig& config() const { return cfg_; }

  Eigen::VectorXd VideoEmbed(const FeatureTrajectory& traj, const AugmentationSpec& augs) const;
  Eigen::VectorXd FrameEmbed(const Eigen::VectorXd& features) const;

  // ||phi(demo) - phi(rollout)||, both embedded with the same augmentations.
  double TaskCost(const FeatureTrajectory& demo, const FeatureTrajectory& rollout,
                  const AugmentationSpec& augs) const;

  // Largest distance between any two frame embeddings. Throws DataError for
  // fewer than two frames.
  double ChangeScore(const FeatureTrajectory& traj) const;

 private:
  EmbeddingConfig cfg_;
  mutable std::mutex mu_;
  mutable std::map<int, std::unique_ptr<VideoEmbedder>> embedders_;
};

// Conditioning-vector scaling of a prior: positions in metres, angles over pi.
Eigen::VectorXd NormalizePrior(const WaypointAction& prior);

// Video embedding of the masked demo followed by the normalised prior.
Eigen::VectorXd DemoConditionVector(const AlignmentModel& model, const demo::DemoVideo& demo,
                                    const WaypointAction& prior, const AugmentationSpec& augs);

}  // namespace whirl::align

#endif  // WHIRL_ALIGN_H_
