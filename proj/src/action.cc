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

#include "whirl/action.h"

#include <algorithm>

#include "whirl/errors.h"

namespace whirl {

Eigen::VectorXd WaypointAction::Flatten() const {
  Eigen::VectorXd flat(Dim());
  int i = 0;
  auto put = [&](const Vec3& v) {
    flat.segment<3>(i) = v;
    i += 3;
  };
  put(w_interaction);
  for (const Vec3& m : w_mid) put(m);
  put(w_end);
  put(theta_ypr);
  flat[i++] = gripper;
  flat[i++] = t_close_frac;
  flat[i++] = t_open_frac;
  return flat;
}

WaypointAction WaypointAction::Unflatten(const Eigen::VectorXd& flat,
                                         int num_mid) {
  WaypointAction a;
  a.w_mid.assign(num_mid, Vec3::Zero());
  if (flat.size() != a.Dim()) {
    throw ShapeError("action vector has " + std::to_string(flat.size()) +
                     " entries, expected " + std::to_string(a.Dim()));
  }
  int i = 0;
  auto take = [&]() {
    Vec3 v = flat.segment<3>(i);
    i += 3;
    return v;
  };
  a.w_interaction = take();
  for (Vec3& m : a.w_mid) m = take();
  a.w_end = take();
  a.theta_ypr = take();
  a.gripper = flat[i++];
  a.t_close_frac = flat[i++];
  a.t_open_frac = flat[i++];
  return a;
}

WaypointAction ApplyResidual(const WaypointAction& base,
                             const Eigen::VectorXd& residual) {
  const int num_mid = static_cast<int>(base.w_mid.size());
  WaypointAction a = WaypointAction::Unflatten(base.Flatten() + residual, num_mid);
  a.gripper = std::clamp(a.gripper, 0.0, 1.0);
  a.t_close_frac = std::clamp(a.t_close_frac, 0.0, 1.0 - kMinScheduleGap);
  a.t_open_frac = std::clamp(a.t_open_frac, a.t_close_frac + kMinScheduleGap, 1.0);
  return a;
}

}  // namespace whirl
