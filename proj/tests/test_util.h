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

#ifndef WHIRL_TESTS_TEST_UTIL_H_
#define WHIRL_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <string>

#include "whirl/scene_io.h"
#include "whirl/sim_env.h"

namespace whirl::testing {

inline std::filesystem::path SourceDir() { return WHIRL_SOURCE_DIR; }
inline std::filesystem::path ConfigDir() { return SourceDir() / "configs"; }

inline sim::Scene LoadFixtureScene(const std::string& id) {
  return sim::LoadScene(ConfigDir() / "scenes" / (id + ".yaml"));
}

// A bare drawer sliding along +x with its handle at the joint origin.
inline sim::Scene SlidingDrawer() {
  sim::Scene scene;
  scene.id = "slider";
  sim::JointSpec j;
  j.name = "drawer";
  j.kind = sim::JointKind::kPrismatic;
  j.origin = Vec3(0.5, 0.0, 0.6);
  j.axis = Vec3::UnitX();
  j.lower = 0.0;
  j.upper = 0.3;
  scene.joints.push_back(j);
  scene.goal.kind = sim::GoalKind::kJointTarget;
  scene.goal.index = 0;
  scene.goal.target_value = 0.25;
  scene.goal.success_tolerance = 0.05;
  return scene;
}

}  // namespace whirl::testing

#endif  // WHIRL_TESTS_TEST_UTIL_H_
