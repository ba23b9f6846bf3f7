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

#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "test_util.h"
#include "whirl/demo.h"
#include "whirl/errors.h"

namespace whirl::demo {
namespace {

using whirl::testing::LoadFixtureScene;

TEST(ExpertTest, DrawerContactIsFixedExactlyDuringPull) {
  const sim::Scene scene = LoadFixtureScene("drawer_a");
  const ExpertResult r = ScriptedExpert(scene, 0);
  ASSERT_TRUE(r.success);
  ASSERT_LT(r.grasp_start, r.grasp_end);
  for (int t = 0; t < r.video.length(); ++t) {
    const bool pulling = t >= r.grasp_start && t <= r.grasp_end;
    EXPECT_EQ(r.video.frames[t].contact, pulling ? ContactClass::kFixed : ContactClass::kNone)
        << t;
  }
  EXPECT_NO_THROW(ValidateDemo(r.video));
}

TEST(ExpertTest, ShelfContactIsPortableDuringCarry) {
  const sim::Scene scene = LoadFixtureScene("shelf_mug");
  const ExpertResult r = ScriptedExpert(scene, 0);
  for (int t = r.grasp_start; t <= r.grasp_end; ++t) {
    EXPECT_EQ(r.video.frames[t].contact, ContactClass::kPortable);
  }
}

TEST(ExpertTest, SucceedsOnEveryBenchmarkScene) {
  for (const char* id : {"drawer_a", "drawer_b", "drawer_c", "door_a", "door_b", "door_c",
                         "dishwasher_a", "dishwasher_b", "dishwasher_c", "shelf_mug",
                         "shelf_can", "shelf_box", "shelf_bottle", "shelf_bowl_heldout",
                         "shelf_toy_heldout"}) {
    const sim::Scene scene = LoadFixtureScene(id);
    for (uint64_t seed = 0; seed < 3; ++seed) {
      EXPECT_TRUE(ScriptedExpert(scene, seed).success) << id << " seed " << seed;
    }
  }
}

TEST(ExpertTest, UnreachableGoalThrows) {
  sim::Scene scene = LoadFixtureScene("drawer_a");
  scene.goal.target_value = 5.0;
  EXPECT_THROW(ScriptedExpert(scene, 0), GenerationError);
}

TEST(CorruptTest, ZeroNoiseIsIdentity) {
  const sim::Scene scene = LoadFixtureScene("door_a");
  const DemoVideo clean = ScriptedExpert(scene, 1).video;
  EXPECT_EQ(Corrupt(clean, NoiseConfig{}, scene.camera.intrinsics, 9), clean);
}

TEST(CorruptTest, ForcedFlipChangesEveryClass) {
  const sim::Scene scene = LoadFixtureScene("drawer_a");
  const DemoVideo clean = ScriptedExpert(scene, 2).video;
  NoiseConfig noise;
  noise.contact_flip_prob = 1.0;
  const DemoVideo noisy = Corrupt(clean, noise, scene.camera.intrinsics, 4);
  ASSERT_EQ(noisy.length(), clean.length());
  for (int t = 0; t < clean.length(); ++t) {
    EXPECT_NE(noisy.frames[t].contact, clean.frames[t].contact) << t;
  }
}

TEST(CorruptTest, PositionNoiseRms) {
  const sim::Scene scene = LoadFixtureScene("drawer_b");
  NoiseConfig noise;
  noise.pos_sigma = 0.01;
  double sum_sq = 0.0;
  int frames = 0;
  for (uint64_t seed = 0; frames < 1000; ++seed) {
    const DemoVideo clean = ScriptedExpert(scene, seed).video;
    const DemoVideo noisy = Corrupt(clean, noise, scene.camera.intrinsics, 100 + seed);
    for (int t = 0; t < clean.length(); ++t) {
      sum_sq += (noisy.frames[t].h - clean.frames[t].h).squaredNorm();
      ++frames;
    }
  }
  const double rms = std::sqrt(sum_sq / frames);
  EXPECT_NEAR(rms, 0.01 * std::sqrt(3.0), 0.2 * 0.01 * std::sqrt(3.0));
}

TEST(CorruptTest, DetectionsFollowNoisyPosition) {
  const sim::Scene scene = LoadFixtureScene("drawer_a");
  const DemoVideo noisy = Corrupt(ScriptedExpert(scene, 0).video, NoiseConfig::Default(),
                                  scene.camera.intrinsics, 3);
  for (const HandFrame& f : noisy.frames) {
    const Vec2 px = scene.camera.intrinsics.Project(f.h);
    EXPECT_LT((f.BoxCenter() - px).norm(), 1e-9);
    EXPECT_DOUBLE_EQ(f.depth, f.h.z());
  }
}

TEST(CorruptTest, WarpAndDropoutKeepInvariants) {
  const sim::Scene scene = LoadFixtureScene("door_b");
  const DemoVideo clean = ScriptedExpert(scene, 0).video;
  NoiseConfig noise = NoiseConfig::Default();
  noise.dropout_prob = 0.5;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const DemoVideo noisy = Corrupt(clean, noise, scene.camera.intrinsics, seed);
    EXPECT_NO_THROW(ValidateDemo(noisy));
    EXPECT_LE(noisy.length(), static_cast<int>(std::lround(clean.length() * 1.25)) + 1);
  }
  EXPECT_EQ(Corrupt(clean, noise, scene.camera.intrinsics, 5),
            Corrupt(clean, noise, scene.camera.intrinsics, 5));
}

TEST(CorruptTest, InvalidNoiseRejected) {
  const sim::Scene scene = LoadFixtureScene("door_b");
  const DemoVideo clean = ScriptedExpert(scene, 0).video;
  NoiseConfig noise;
  noise.contact_flip_prob = 1.5;
  EXPECT_THROW(Corrupt(clean, noise, scene.camera.intrinsics, 0), ConfigError);
  noise = NoiseConfig{};
  noise.time_warp_range = {1.2, 0.9};
  EXPECT_THROW(Corrupt(clean, noise, scene.camera.intrinsics, 0), ConfigError);
}

TEST(DemoTest, ShortDemoRejected) {
  DemoVideo d;
  d.frames.resize(5);
  d.env_truth.resize(5);
  EXPECT_THROW(ValidateDemo(d), DataError);
}

TEST(DemoIoTest, RoundTrip) {
  const sim::Scene scene = LoadFixtureScene("shelf_can");
  const DemoVideo demo = Corrupt(ScriptedExpert(scene, 3).video, NoiseConfig::Default(),
                                 scene.camera.intrinsics, 8);
  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "whirl_demo_roundtrip.demo";
  WriteDemo(path, demo);
  const DemoVideo back = ReadDemo(path);
  EXPECT_EQ(back, demo);
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".env");
}

TEST(DemoIoTest, MissingFileThrows) {
  EXPECT_THROW(ReadDemo("/nonexistent/whirl.demo"), IoError);
}

TEST(ContactTest, NamesRoundTrip) {
  for (int k = 0; k < kNumContactClasses; ++k) {
    const auto c = static_cast<ContactClass>(k);
    EXPECT_EQ(ParseContact(ContactName(c)), c);
  }
}

}  // namespace
}  // namespace whirl::demo
