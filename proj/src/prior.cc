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

#include "whirl/prior.h"

#include <array>
#include <cmath>

#include "whirl/errors.h"
#include "whirl/random.h"

namespace whirl::prior {

using demo::ContactClass;

Eigen::VectorXd SavgolCoefficients(int window, int polyorder) {
  if (window < 3 || window % 2 == 0) {
    throw ParameterError("savgol window must be odd and at least 3");
  }
  if (polyorder < 0 || polyorder >= window) {
    throw ParameterError("savgol polyorder must be in [0, window)");
  }
  const int half = window / 2;
  Eigen::MatrixXd vander(window, polyorder + 1);
  for (int i = 0; i < window; ++i) {
    const double x = i - half;
    double p = 1.0;
    for (int j = 0; j <= polyorder; ++j) {
      vander(i, j) = p;
      p *= x;
    }
  }
  // Row 0 of the pseudo-inverse evaluates the fitted polynomial at offset 0.
  const Eigen::MatrixXd pinv = vander.colPivHouseholderQr().solve(
      Eigen::MatrixXd::Identity(window, window));
  return pinv.row(0).transpose();
}

Eigen::VectorXd SavgolFilter(const Eigen::VectorXd& signal, int window, int polyorder) {
  const Eigen::VectorXd w = SavgolCoefficients(window, polyorder);
  const int n = static_cast<int>(signal.size());
  if (n < window) throw ParameterError("signal shorter than savgol window");
  const int half = window / 2;
  auto at = [&](int i) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
    return signal[i];
  };
  Eigen::VectorXd out(n);
  for (int t = 0; t < n; ++t) {
    double acc = 0.0;
    for (int k = -half; k <= half; ++k) acc += w[k + half] * at(t + k);
    out[t] = acc;
  }
  return out;
}

std::vector<ContactClass> SmoothContacts(const std::vector<ContactClass>& contacts,
                                         int window, int polyorder) {
  const int n = static_cast<int>(contacts.size());
  if (n < window) throw ParameterError("contact sequence shorter than savgol window");
  std::array<Eigen::VectorXd, demo::kNumContactClasses> channels;
  for (int k = 0; k < demo::kNumContactClasses; ++k) {
    Eigen::VectorXd onehot(n);
    for (int t = 0; t < n; ++t) onehot[t] = static_cast<int>(contacts[t]) == k ? 1.0 : 0.0;
    channels[k] = SavgolFilter(onehot, window, polyorder);
  }
  std::vector<ContactClass> out(n);
  for (int t = 0; t < n; ++t) {
    const int orig = static_cast<int>(contacts[t]);
    int best = orig;
    for (int k = 0; k < demo::kNumContactClasses; ++k) {
      if (channels[k][t] > channels[best][t]) best = k;
    }
    out[t] = static_cast<ContactClass>(best);
  }
  return out;
}

InteractionWindow DetectWindow(const std::vector<ContactClass>& smoothed, int min_len) {
  InteractionWindow best;
  int best_len = 0;
  const int n = static_cast<int>(smoothed.size());
  int start = 0;
  for (int t = 1; t <= n; ++t) {
    if (t < n && smoothed[t] == smoothed[start]) continue;
    const int len = t - start;
    if (smoothed[start] != ContactClass::kNone && len >= min_len && len > best_len) {
      best_len = len;
      best = {start, t - 1, smoothed[start]};
    }
    start = t;
  }
  if (best_len == 0) throw ExtractionError("no interaction detected");
  return best;
}

Vec3 DeprojectHand(const demo::HandFrame& frame, const PinholeIntrinsics& intrinsics) {
  return intrinsics.Deproject(frame.BoxCenter(), frame.depth);
}

HandPrior ExtractHandPrior(const demo::DemoVideo& demo, const InteractionWindow& window,
                           const PinholeIntrinsics& intrinsics, const ExtractionConfig& cfg,
                           uint64_t rng_seed) {
  const int n = demo.length();
  if (window.t_interaction < 0 || window.t_interaction >= window.t_end || window.t_end >= n) {
    throw ExtractionError("interaction window does not fit the demonstration");
  }
  Rng rng(rng_seed);
  auto hand = [&](int t) { return DeprojectHand(demo.frames[t], intrinsics); };
  auto jitter = [&](const Vec3& p) {
    if (cfg.waypoint_sigma <= 0.0) return p;
    return Vec3(p + cfg.waypoint_sigma * StandardNormalVector(rng, 3));
  };

  HandPrior out;
  out.h_interaction = jitter(hand(window.t_interaction));
  out.h_end = jitter(hand(window.t_end));
  for (double frac : cfg.mid_fractions) {
    const double tau = window.t_interaction + frac * (window.t_end - window.t_interaction);
    const int a = static_cast<int>(std::floor(tau));
    const int b = std::min(a + 1, window.t_end);
    const double w = tau - a;
    out.h_mid.push_back(hand(a) + w * (hand(b) - hand(a)));
  }

  Vec3 sin_sum = Vec3::Zero();
  Vec3 cos_sum = Vec3::Zero();
  for (int t = window.t_interaction; t <= window.t_end; ++t) {
    sin_sum += demo.frames[t].theta_hand.array().sin().matrix();
    cos_sum += demo.frames[t].theta_hand.array().cos().matrix();
  }
  for (int i = 0; i < 3; ++i) out.theta_hand[i] = std::atan2(sin_sum[i], cos_sum[i]);

  out.open_close.assign(n, 0);
  for (int t = window.t_interaction; t <= window.t_end; ++t) out.open_close[t] = 1;
  return out;
}

Vec3 RemapWrist(const Vec3& theta_hand) { return theta_hand; }

Prior MapToRobot(const HandPrior& hand, const RigidTransform& camera_to_robot) {
  auto map = [&](const Vec3& p) {
    if (!(p.z() > 0.0)) throw MappingError("hand point lies behind the camera");
    return camera_to_robot.Apply(p);
  };
  Prior prior;
  prior.w_interaction = map(hand.h_interaction);
  prior.w_mid.clear();
  for (const Vec3& m : hand.h_mid) prior.w_mid.push_back(map(m));
  prior.w_end = map(hand.h_end);
  prior.theta_ypr = RemapWrist(hand.theta_hand);

  const int n = static_cast<int>(hand.open_close.size());
  int first = -1;
  int last = -1;
  for (int t = 0; t < n; ++t) {
    if (hand.open_close[t] == 1) {
      if (first < 0) first = t;
      last = t;
    }
  }
  prior.gripper = first >= 0 ? 0.0 : 1.0;
  if (first >= 0) {
    prior.t_close_frac = static_cast<double>(first) / n;
    prior.t_open_frac = static_cast<double>(last) / n;
  } else {
    prior.t_close_frac = 0.0;
    prior.t_open_frac = 1.0;
  }
  return prior;
}

Vec3 RobotToCamera(const Vec3& w, const RigidTransform& camera_to_robot) {
  return camera_to_robot.Inverse().Apply(w);
}

ExtractedPrior ExtractPrior(const demo::DemoVideo& demo, const sim::Scene& scene,
                            const ExtractionConfig& cfg, uint64_t rng_seed) {
  std::vector<ContactClass> contacts;
  contacts.reserve(demo.frames.size());
  for (const demo::HandFrame& f : demo.frames) contacts.push_back(f.contact);
  const auto smoothed = SmoothContacts(contacts, cfg.savgol_window, cfg.savgol_polyorder);
  ExtractedPrior out;
  out.window = DetectWindow(smoothed, cfg.min_run);
  const HandPrior hand =
      ExtractHandPrior(demo, out.window, scene.camera.intrinsics, cfg, rng_seed);
  out.prior = MapToRobot(hand, scene.camera.BelievedCameraToRobot());
  return out;
}

}  // namespace whirl::prior
