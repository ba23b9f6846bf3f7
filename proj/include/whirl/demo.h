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

#ifndef WHIRL_DEMO_H_
#define WHIRL_DEMO_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "whirl/geometry.h"
#include "whirl/sim_env.h"

// Synthetic human demonstrations: per-frame hand detections as a
// hand-object detector would report them, produced by a scripted demonstrator
// in the simulator and then corrupted with detector-like noise.
namespace whirl::demo {

enum class ContactClass : int { kNone = 0, kPortable = 1, kFixed = 2, kSelf = 3 };
inline constexpr int kNumContactClasses = 4;

std::string_view ContactName(ContactClass c);
ContactClass ParseContact(std::string_view name);

struct HandFrame {
  int t = 0;                                 // source timestamp
  Vec3 h = Vec3::Zero();                     // hand position, camera frame
  Eigen::Vector4d bbox = Eigen::Vector4d::Zero();  // u0, v0, u1, v1 pixels
  Vec3 theta_hand = Vec3::Zero();            // wrist rotation
  ContactClass contact = ContactClass::kNone;
  double depth = 0.0;                        // metres at the hand pixel

  Vec2 BoxCenter() const { return {0.5 * (bbox[0] + bbox[2]), 0.5 * (bbox[1] + bbox[3])}; }
  bool operator==(const HandFrame&) const = default;
};

// Environment-only ground truth for one frame. Prior extraction never reads
// it; the alignment cost embeds it in place of an inpainted video.
struct EnvFrame {
  std::vector<double> joint_values;
  std::vector<sim::Pose> object_poses;

  bool operator==(const EnvFrame&) const = default;
};

struct DemoVideo {
  std::string scene_id;
  std::vector<HandFrame> frames;
  std::vector<EnvFrame> env_truth;

  int length() const { return static_cast<int>(frames.size()); }
  bool operator==(const DemoVideo&) const = default;
};

inline constexpr int kMinDemoLength = 10;

// Throws DataError when the invariants (T >= 10, matching env_truth) fail.
void ValidateDemo(const DemoVideo& demo);

struct NoiseConfig {
  double pos_sigma = 0.0;
  double contact_flip_prob = 0.0;
  double wrist_sigma = 0.0;
  std::array<double, 2> time_warp_range{1.0, 1.0};
  double dropout_prob = 0.0;

  // Calibrated experiment defaults.
  static NoiseConfig Default() {
    return {0.02, 0.05, 0.1, {0.8, 1.25}, 0.02};
  }
};

void ValidateNoise(const NoiseConfig& noise);

// Fills bbox and depth from h and the camera intrinsics.
void UpdateDetection(HandFrame& frame, const PinholeIntrinsics& intrinsics);

struct ExpertResult {
  DemoVideo video;
  bool success = false;
  int grasp_start = 0;  // first frame in contact
  int grasp_end = 0;    // last frame in contact
};

// Noiseless demonstration. Throws GenerationError if the goal is unreachable.
ExpertResult ScriptedExpert(const sim::Scene& scene, uint64_t seed);

DemoVideo Corrupt(const DemoVideo& demo, const NoiseConfig& noise,
                  const PinholeIntrinsics& intrinsics, uint64_t seed);

// Line-oriented text format; the environment truth goes to a sidecar file
// `<path>.env`. See README for the column layout.
void WriteDemo(const std::filesystem::path& path, const DemoVideo& demo);
DemoVideo ReadDemo(const std::filesystem::path& path);

}  // namespace whirl::demo

#endif  // WHIRL_DEMO_H_
