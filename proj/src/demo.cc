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

#include "whirl/demo.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "whirl/errors.h"
#include "whirl/random.h"

namespace whirl::demo {
namespace {

constexpr double kHandWidth = 0.08;  // metres; sets the detection box size

double MinJerk(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

Vec3 AlongPolyline(const std::vector<Vec3>& pts, double s) {
  double total = 0.0;
  for (size_t i = 1; i < pts.size(); ++i) total += (pts[i] - pts[i - 1]).norm();
  double remaining = std::clamp(s, 0.0, 1.0) * total;
  for (size_t i = 1; i < pts.size(); ++i) {
    const double len = (pts[i] - pts[i - 1]).norm();
    if (remaining <= len && len > 0.0) {
      return pts[i - 1] + (pts[i] - pts[i - 1]) * (remaining / len);
    }
    remaining -= len;
  }
  return pts.back();
}

EnvFrame EnvOf(const sim::EnvState& s) { return {s.joint_values, s.object_poses}; }

EnvFrame LerpEnv(const EnvFrame& a, const EnvFrame& b, double w) {
  EnvFrame out = a;
  for (size_t j = 0; j < a.joint_values.size(); ++j) {
    out.joint_values[j] = a.joint_values[j] + w * (b.joint_values[j] - a.joint_values[j]);
  }
  for (size_t o = 0; o < a.object_poses.size(); ++o) {
    out.object_poses[o].position =
        a.object_poses[o].position + w * (b.object_poses[o].position - a.object_poses[o].position);
    out.object_poses[o].ypr =
        a.object_poses[o].ypr + w * (b.object_poses[o].ypr - a.object_poses[o].ypr);
  }
  return out;
}

}  // namespace

std::string_view ContactName(ContactClass c) {
  switch (c) {
    case ContactClass::kNone: return "none";
    case ContactClass::kPortable: return "portable";
    case ContactClass::kFixed: return "fixed";
    case ContactClass::kSelf: return "self";
  }
  return "none";
}

ContactClass ParseContact(std::string_view name) {
  for (int k = 0; k < kNumContactClasses; ++k) {
    if (ContactName(static_cast<ContactClass>(k)) == name) return static_cast<ContactClass>(k);
  }
  throw DataError("unknown contact class '" + std::string(name) + "'");
}

void ValidateDemo(const DemoVideo& demo) {
  if (demo.length() < kMinDemoLength) {
    throw DataError("demonstration has fewer than 10 frames");
  }
  if (demo.env_truth.size() != demo.frames.size()) {
    throw DataError("env_truth length does not match frame count");
  }
}

void ValidateNoise(const NoiseConfig& n) {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(n.contact_flip_prob) || !prob(n.dropout_prob)) {
    throw ConfigError("noise probabilities must lie in [0, 1]");
  }
  if (n.pos_sigma < 0.0 || n.wrist_sigma < 0.0) {
    throw ConfigError("noise sigmas must be non-negative");
  }
  if (!(n.time_warp_range[0] > 0.0) || n.time_warp_range[0] > n.time_warp_range[1]) {
    throw ConfigError("time warp range must be a positive interval");
  }
}

void UpdateDetection(HandFrame& frame, const PinholeIntrinsics& intrinsics) {
  frame.depth = frame.h.z();
  if (frame.depth <= 0.0) return;
  const Vec2 c = intrinsics.Project(frame.h);
  const double half = 0.5 * kHandWidth * intrinsics.fx / frame.depth;
  frame.bbox = {c.x() - half, c.y() - half, c.x() + half, c.y() + half};
}

ExpertResult ScriptedExpert(const sim::Scene& scene, uint64_t seed) {
  const sim::GoalSpec& goal = scene.goal;
  sim::EnvState state = sim::Reset(scene, seed);
  Rng rng = MakeRng(seed, {0xde30});
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> jitter_frames(-5, 5);

  Vec3 grasp_point;
  std::vector<Vec3> carry;
  const sim::JointSpec* joint = nullptr;
  if (goal.kind == sim::GoalKind::kJointTarget) {
    joint = &scene.joints[goal.index];
    if (goal.target_value < joint->lower || goal.target_value > joint->upper) {
      throw GenerationError("goal target lies outside the joint limits");
    }
    grasp_point = joint->HandlePosition(state.joint_values[goal.index]);
  } else {
    grasp_point = state.object_poses[goal.index].position;
    carry.push_back(grasp_point);
    carry.insert(carry.end(), scene.demonstrator.carry_via.begin(),
                 scene.demonstrator.carry_via.end());
    carry.push_back(goal.region.Center());
  }

  const sim::DemonstratorSpec& style = scene.demonstrator;
  Vec3 start = grasp_point + style.hand_start_offset;
  for (int i = 0; i < 3; ++i) start[i] += style.start_jitter * unit(rng);

  const int n_approach = 30 + jitter_frames(rng);
  const int n_interact = (joint ? 40 : 50) + jitter_frames(rng);
  const int n_hold = 5;
  const int n_retreat = 20 + jitter_frames(rng);

  // The demonstrator's own limb: fast enough to track the scripted path.
  sim::StepConfig human;
  human.max_translation_step = 0.08;
  human.max_rotation_step = 1.0;
  human.max_aperture_step = 1.0;

  state.ee.position = start;
  ExpertResult result;
  DemoVideo& video = result.video;
  video.scene_id = scene.id;

  const Mat3 robot_to_cam = scene.camera.camera_to_robot.Inverse().rotation;
  const Vec3 robot_to_cam_t = scene.camera.camera_to_robot.Inverse().translation;
  auto record = [&](const sim::EnvState& s) {
    HandFrame f;
    f.t = video.length();
    f.h = robot_to_cam * (s.ee.position + style.hand_offset) + robot_to_cam_t;
    f.theta_hand = style.wrist_ypr;
    if (s.attachment) {
      f.contact = s.attachment->kind == sim::Attachment::Kind::kJointHandle
                      ? ContactClass::kFixed
                      : ContactClass::kPortable;
    }
    UpdateDetection(f, scene.camera.intrinsics);
    video.frames.push_back(f);
    video.env_truth.push_back(EnvOf(s));
  };
  record(state);

  auto step_to = [&](const Vec3& p, double aperture) {
    sim::EndEffectorState target{p, state.ee.ypr, aperture};
    state = sim::Step(scene, state, target, human);
    record(state);
  };

  for (int i = 1; i <= n_approach; ++i) {
    step_to(start + (grasp_point - start) * MinJerk(static_cast<double>(i) / n_approach), 1.0);
  }
  result.grasp_start = video.length();
  const double q0 = joint ? state.joint_values[goal.index] : 0.0;
  for (int i = 0; i < n_interact + n_hold; ++i) {
    const double s = MinJerk(static_cast<double>(i) / (n_interact - 1));
    Vec3 p;
    if (joint) {
      p = joint->HandlePosition(q0 + (goal.target_value - q0) * s);
    } else {
      p = AlongPolyline(carry, s);
    }
    step_to(p, 0.0);
  }
  result.grasp_end = video.length() - 1;
  const Vec3 release = state.ee.position;
  const Vec3 rest = release + 0.5 * (start - release);
  for (int i = 1; i <= n_retreat; ++i) {
    step_to(release + (rest - release) * MinJerk(static_cast<double>(i) / n_retreat), 1.0);
  }

  // Contact must bracket exactly the grasped frames.
  for (int t = 0; t < video.length(); ++t) {
    const bool in_window = t >= result.grasp_start && t <= result.grasp_end;
    if (in_window != (video.frames[t].contact != ContactClass::kNone)) {
      throw GenerationError("demonstrator failed to hold the target in scene " + scene.id);
    }
  }
  result.success = sim::GoalSatisfied(scene, state);
  if (!result.success) {
    throw GenerationError("demonstrator could not reach the goal in scene " + scene.id);
  }
  return result;
}

DemoVideo Corrupt(const DemoVideo& demo, const NoiseConfig& noise,
                  const PinholeIntrinsics& intrinsics, uint64_t seed) {
  ValidateDemo(demo);
  ValidateNoise(noise);
  DemoVideo out = demo;

  // Separate streams so disabling one noise source leaves the others intact.
  Rng warp_rng = MakeRng(seed, {1});
  Rng pos_rng = MakeRng(seed, {2});
  Rng wrist_rng = MakeRng(seed, {3});
  Rng flip_rng = MakeRng(seed, {4});
  Rng drop_rng = MakeRng(seed, {5});

  const auto [lo, hi] = noise.time_warp_range;
  if (!(lo == 1.0 && hi == 1.0)) {
    const double factor = std::uniform_real_distribution<double>(lo, hi)(warp_rng);
    const int src_len = demo.length();
    const int new_len =
        std::max(kMinDemoLength, static_cast<int>(std::lround(src_len * factor)));
    out.frames.clear();
    out.env_truth.clear();
    for (int i = 0; i < new_len; ++i) {
      const double tau = static_cast<double>(i) * (src_len - 1) / (new_len - 1);
      const int a = std::min(static_cast<int>(std::floor(tau)), src_len - 1);
      const int b = std::min(a + 1, src_len - 1);
      const double w = tau - a;
      const HandFrame& fa = demo.frames[a];
      const HandFrame& fb = demo.frames[b];
      HandFrame f = w < 0.5 ? fa : fb;
      f.t = static_cast<int>(std::lround(tau));
      f.h = fa.h + w * (fb.h - fa.h);
      f.theta_hand = fa.theta_hand + w * (fb.theta_hand - fa.theta_hand);
      UpdateDetection(f, intrinsics);
      out.frames.push_back(f);
      out.env_truth.push_back(LerpEnv(demo.env_truth[a], demo.env_truth[b], w));
    }
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> other(0, kNumContactClasses - 2);
  for (HandFrame& f : out.frames) {
    if (noise.pos_sigma > 0.0) {
      for (int i = 0; i < 3; ++i) f.h[i] += noise.pos_sigma * normal(pos_rng);
      UpdateDetection(f, intrinsics);
    }
    if (noise.wrist_sigma > 0.0) {
      for (int i = 0; i < 3; ++i) f.theta_hand[i] += noise.wrist_sigma * normal(wrist_rng);
    }
    if (noise.contact_flip_prob > 0.0 && unit(flip_rng) < noise.contact_flip_prob) {
      const int k = other(flip_rng);
      const int orig = static_cast<int>(f.contact);
      f.contact = static_cast<ContactClass>(k < orig ? k : k + 1);
    }
  }

  if (noise.dropout_prob > 0.0) {
    DemoVideo kept;
    kept.scene_id = out.scene_id;
    const int n = out.length();
    for (int i = 0; i < n; ++i) {
      const bool drop = unit(drop_rng) < noise.dropout_prob;
      const int still_needed = kMinDemoLength - kept.length();
      if (drop && (n - i - 1) >= still_needed) continue;
      kept.frames.push_back(out.frames[i]);
      kept.env_truth.push_back(out.env_truth[i]);
    }
    out = std::move(kept);
  }
  return out;
}

void WriteDemo(const std::filesystem::path& path, const DemoVideo& demo) {
  ValidateDemo(demo);
  std::ofstream frames(path);
  std::ofstream env(path.string() + ".env");
  if (!frames || !env) throw IoError("cannot write demo to " + path.string());
  frames << std::setprecision(17);
  env << std::setprecision(17);
  frames << "# whirl-demo v1\n# scene " << demo.scene_id << "\n"
         << "# t hx hy hz u0 v0 u1 v1 yaw pitch roll contact depth\n";
  for (const HandFrame& f : demo.frames) {
    frames << f.t << ' ' << f.h.x() << ' ' << f.h.y() << ' ' << f.h.z();
    for (int i = 0; i < 4; ++i) frames << ' ' << f.bbox[i];
    frames << ' ' << f.theta_hand.x() << ' ' << f.theta_hand.y() << ' ' << f.theta_hand.z()
           << ' ' << ContactName(f.contact) << ' ' << f.depth << '\n';
  }
  const EnvFrame& first = demo.env_truth.front();
  env << "# whirl-env v1\n# joints " << first.joint_values.size() << " objects "
      << first.object_poses.size() << "\n";
  for (int t = 0; t < demo.length(); ++t) {
    const EnvFrame& e = demo.env_truth[t];
    env << demo.frames[t].t;
    for (double q : e.joint_values) env << ' ' << q;
    for (const sim::Pose& p : e.object_poses) {
      env << ' ' << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' '
          << p.ypr.x() << ' ' << p.ypr.y() << ' ' << p.ypr.z();
    }
    env << '\n';
  }
  if (!frames || !env) throw IoError("failed writing demo " + path.string());
}

DemoVideo ReadDemo(const std::filesystem::path& path) {
  std::ifstream frames(path);
  std::ifstream env(path.string() + ".env");
  if (!frames) throw IoError("cannot open demo " + path.string());
  if (!env) throw DataError("missing env_truth sidecar for " + path.string());
  DemoVideo demo;
  std::string line;
  while (std::getline(frames, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# scene ", 0) == 0) demo.scene_id = line.substr(8);
      continue;
    }
    std::istringstream in(line);
    HandFrame f;
    std::string contact;
    in >> f.t >> f.h.x() >> f.h.y() >> f.h.z();
    for (int i = 0; i < 4; ++i) in >> f.bbox[i];
    in >> f.theta_hand.x() >> f.theta_hand.y() >> f.theta_hand.z() >> contact >> f.depth;
    if (!in) throw DataError("malformed demo line: " + line);
    f.contact = ParseContact(contact);
    demo.frames.push_back(f);
  }
  size_t n_joints = 0;
  size_t n_objects = 0;
  while (std::getline(env, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# joints ", 0) == 0) {
        std::istringstream in(line.substr(9));
        std::string word;
        in >> n_joints >> word >> n_objects;
      }
      continue;
    }
    std::istringstream in(line);
    int t = 0;
    EnvFrame e;
    in >> t;
    e.joint_values.resize(n_joints);
    e.object_poses.resize(n_objects);
    for (double& q : e.joint_values) in >> q;
    for (sim::Pose& p : e.object_poses) {
      in >> p.position.x() >> p.position.y() >> p.position.z() >> p.ypr.x() >> p.ypr.y() >>
          p.ypr.z();
    }
    if (!in) throw DataError("malformed env_truth line: " + line);
    demo.env_truth.push_back(std::move(e));
  }
  ValidateDemo(demo);
  return demo;
}

}  // namespace whirl::demo
