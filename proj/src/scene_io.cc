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

#include "whirl/scene_io.h"

#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "whirl/errors.h"

namespace whirl::sim {
namespace {

Vec3 ReadVec3(const YAML::Node& node, const std::string& what) {
  if (!node || !node.IsSequence() || node.size() != 3) {
    throw ConfigError(what + ": expected a 3-element list");
  }
  return {node[0].as<double>(), node[1].as<double>(), node[2].as<double>()};
}

Vec3 ReadVec3Or(const YAML::Node& node, const Vec3& fallback, const std::string& what) {
  return node ? ReadVec3(node, what) : fallback;
}

Box ReadBox(const YAML::Node& node, const std::string& what) {
  if (!node) throw ConfigError(what + ": missing box");
  return {ReadVec3(node["lo"], what + ".lo"), ReadVec3(node["hi"], what + ".hi")};
}

RigidTransform ReadTransform(const YAML::Node& node) {
  if (!node) return RigidTransform::Identity();
  return RigidTransform::FromYprTranslation(
      ReadVec3Or(node["ypr"], Vec3::Zero(), "ypr"),
      ReadVec3Or(node["translation"], Vec3::Zero(), "translation"));
}

JointSpec ReadJoint(const YAML::Node& node) {
  JointSpec j;
  j.name = node["name"].as<std::string>("joint");
  const std::string kind = node["kind"].as<std::string>("prismatic");
  if (kind == "prismatic") {
    j.kind = JointKind::kPrismatic;
  } else if (kind == "revolute") {
    j.kind = JointKind::kRevolute;
  } else {
    throw ConfigError("joint '" + j.name + "': unknown kind '" + kind + "'");
  }
  j.origin = ReadVec3(node["origin"], j.name + ".origin");
  j.axis = ReadVec3(node["axis"], j.name + ".axis");
  const YAML::Node limits = node["limits"];
  if (!limits || !limits.IsSequence() || limits.size() != 2) {
    throw ConfigError("joint '" + j.name + "': limits must be [lower, upper]");
  }
  j.lower = limits[0].as<double>();
  j.upper = limits[1].as<double>();
  j.handle_offset = ReadVec3Or(node["handle_offset"], Vec3::Zero(), j.name + ".handle_offset");
  j.initial_value = node["initial_value"].as<double>(j.lower);
  return j;
}

CameraSpec ReadCamera(const YAML::Node& node) {
  CameraSpec cam;
  if (!node) return cam;
  if (node["eye"]) {
    cam.camera_to_robot = RigidTransform::LookAt(ReadVec3(node["eye"], "camera.eye"),
                                                 ReadVec3(node["target"], "camera.target"));
  } else {
    cam.camera_to_robot = ReadTransform(node["extrinsic"]);
  }
  if (const YAML::Node in = node["intrinsics"]) {
    cam.intrinsics.fx = in["fx"].as<double>(cam.intrinsics.fx);
    cam.intrinsics.fy = in["fy"].as<double>(cam.intrinsics.fy);
    cam.intrinsics.cx = in["cx"].as<double>(cam.intrinsics.cx);
    cam.intrinsics.cy = in["cy"].as<double>(cam.intrinsics.cy);
    cam.intrinsics.width = in["width"].as<int>(cam.intrinsics.width);
    cam.intrinsics.height = in["height"].as<int>(cam.intrinsics.height);
  }
  cam.calibration_error = ReadTransform(node["calibration_error"]);
  return cam;
}

GoalSpec ReadGoal(const YAML::Node& node) {
  if (!node) throw ConfigError("scene has no goal");
  GoalSpec g;
  const std::string kind = node["kind"].as<std::string>("");
  if (kind == "joint_target") {
    g.kind = GoalKind::kJointTarget;
    g.index = node["joint"].as<int>(0);
    g.target_value = node["target"].as<double>();
  } else if (kind == "object_in_region") {
    g.kind = GoalKind::kObjectInRegion;
    g.index = node["object"].as<int>(0);
    g.region = ReadBox(node["region"], "goal.region");
  } else {
    throw ConfigError("goal kind must be joint_target or object_in_region");
  }
  g.success_tolerance = node["tolerance"].as<double>(g.success_tolerance);
  return g;
}

}  // namespace

Scene ParseScene(const std::string& yaml_text) {
  Scene scene;
  try {
    const YAML::Node root = YAML::Load(yaml_text);
    scene.id = root["id"].as<std::string>("scene");
    if (const YAML::Node home = root["home"]) {
      scene.home.position = ReadVec3(home["position"], "home.position");
      scene.home.ypr = ReadVec3Or(home["ypr"], Vec3::Zero(), "home.ypr");
      scene.home.aperture = 1.0;
    }
    for (const YAML::Node& j : root["joints"]) scene.joints.push_back(ReadJoint(j));
    for (const YAML::Node& o : root["objects"]) {
      FreeObject obj;
      obj.name = o["name"].as<std::string>("object");
      obj.initial_pose.position = ReadVec3(o["position"], obj.name + ".position");
      obj.initial_pose.ypr = ReadVec3Or(o["ypr"], Vec3::Zero(), obj.name + ".ypr");
      obj.grasp_radius = o["grasp_radius"].as<double>(obj.grasp_radius);
      scene.objects.push_back(obj);
    }
    for (const YAML::Node& b : root["obstacles"]) scene.obstacles.push_back(ReadBox(b, "obstacle"));
    scene.camera = ReadCamera(root["camera"]);
    scene.goal = ReadGoal(root["goal"]);
    if (const YAML::Node d = root["demonstrator"]) {
      DemonstratorSpec& demo = scene.demonstrator;
      demo.hand_offset = ReadVec3Or(d["hand_offset"], demo.hand_offset, "hand_offset");
      demo.hand_start_offset =
          ReadVec3Or(d["hand_start_offset"], demo.hand_start_offset, "hand_start_offset");
      demo.wrist_ypr = ReadVec3Or(d["wrist_ypr"], demo.wrist_ypr, "wrist_ypr");
      demo.start_jitter = d["start_jitter"].as<double>(demo.start_jitter);
      for (const YAML::Node& v : d["carry_via"]) demo.carry_via.push_back(ReadVec3(v, "carry_via"));
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("scene yaml: ") + e.what());
  }
  ValidateScene(scene);
  return scene;
}

Scene LoadScene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scene file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseScene(buf.str());
}

}  // namespace whirl::sim
