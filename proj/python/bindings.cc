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

// Python bindings for the simulator, the demonstration pipeline and the
// experiment driver.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "whirl/align.h"
#include "whirl/demo.h"
#include "whirl/errors.h"
#include "whirl/experiment.h"
#include "whirl/prior.h"
#include "whirl/scene_io.h"
#include "whirl/sim_env.h"

namespace py = pybind11;
namespace fs = std::filesystem;

namespace whirl {
namespace {

py::dict CurveToDict(const loop::LearningCurve& curve) {
  py::list iteration, train, test, cost, change;
  for (const loop::CurvePoint& p : curve) {
    iteration.append(p.iteration);
    train.append(p.train_success);
    test.append(p.test_success ? py::cast(*p.test_success) : py::none());
    cost.append(p.mean_cost);
    change.append(p.mean_change_score);
  }
  py::dict d;
  d["iteration"] = iteration;
  d["train_success"] = train;
  d["test_success"] = test;
  d["mean_cost"] = cost;
  d["mean_change_score"] = change;
  return d;
}

py::dict RunConfig(const fs::path& config, std::optional<uint64_t> seed,
                   std::optional<std::string> variant, std::optional<fs::path> out) {
  experiment::ExperimentConfig cfg = experiment::LoadExperimentConfig(config);
  experiment::RunOptions options;
  options.seed = seed;
  if (variant) options.variant = experiment::ParseVariant(*variant);
  options.out = out;
  experiment::RunManifest manifest;
  {
    py::gil_scoped_release release;
    manifest = experiment::RunExperiment(cfg, config, options);
  }
  py::dict curves;
  for (const experiment::SeedResult& s : manifest.seeds) curves[py::int_(s.seed)] = CurveToDict(s.curve);
  py::dict d;
  d["run_dir"] = manifest.run_dir;
  d["manifest"] = manifest.run_dir / "manifest.json";
  d["curves"] = curves;
  return d;
}

py::list CompareManifests(const std::vector<fs::path>& paths) {
  std::vector<experiment::ManifestResult> results;
  for (const fs::path& p : paths) results.push_back(experiment::ReadManifestResult(p));
  const experiment::Comparison c = experiment::Compare(results);
  py::list rows;
  for (const experiment::ComparisonRow& r : c.rows) {
    py::dict d;
    d["task"] = c.task;
    d["variant"] = r.variant;
    d["runs"] = r.runs;
    d["train_mean"] = r.train_mean;
    d["train_stderr"] = r.train_stderr;
    d["test_mean"] = r.test_mean;
    d["test_stderr"] = r.test_stderr;
    rows.append(d);
  }
  return rows;
}

}  // namespace
}  // namespace whirl

PYBIND11_MODULE(_whirl, m) {
  using namespace whirl;
  m.doc() = "Residual imitation from human video in a kinematic simulator";

  auto base = py::register_exception<Error>(m, "WhirlError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ExtractionError>(m, "ExtractionError", base.ptr());
  py::register_exception<MappingError>(m, "MappingError", base.ptr());
  py::register_exception<GenerationError>(m, "GenerationError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<UsageError>(m, "UsageError", base.ptr());

  py::class_<WaypointAction>(m, "WaypointAction")
      .def(py::init<>())
      .def_readwrite("w_interaction", &WaypointAction::w_interaction)
      .def_readwrite("w_mid", &WaypointAction::w_mid)
      .def_readwrite("w_end", &WaypointAction::w_end)
      .def_readwrite("theta_ypr", &WaypointAction::theta_ypr)
      .def_readwrite("gripper", &WaypointAction::gripper)
      .def_readwrite("t_close_frac", &WaypointAction::t_close_frac)
      .def_readwrite("t_open_frac", &WaypointAction::t_open_frac)
      .def("flatten", &WaypointAction::Flatten)
      .def_static("unflatten", &WaypointAction::Unflatten, py::arg("flat"), py::arg("num_mid") = 1)
      .def("apply_residual", [](const WaypointAction& a, const Eigen::VectorXd& r) {
        return ApplyResidual(a, r);
      });

  py::class_<sim::Scene>(m, "Scene")
      .def_readonly("id", &sim::Scene::id)
      .def_property_readonly("num_joints", [](const sim::Scene& s) { return s.joints.size(); })
      .def_property_readonly("num_objects", [](const sim::Scene& s) { return s.objects.size(); })
      .def_property_readonly("goal_target", [](const sim::Scene& s) { return s.goal.target_value; });
  m.def("load_scene", &sim::LoadScene, py::arg("path"));
  m.def("parse_scene", &sim::ParseScene, py::arg("yaml_text"));

  py::class_<sim::EndEffectorState>(m, "EndEffectorState")
      .def_readonly("position", &sim::EndEffectorState::position)
      .def_readonly("ypr", &sim::EndEffectorState::ypr)
      .def_readonly("aperture", &sim::EndEffectorState::aperture);
  py::class_<sim::EnvState>(m, "EnvState")
      .def_readonly("joint_values", &sim::EnvState::joint_values)
      .def_readonly("ee", &sim::EnvState::ee)
      .def_readonly("time_index", &sim::EnvState::time_index)
      .def_property_readonly("attached", [](const sim::EnvState& s) { return s.attachment.has_value(); })
      .def_property_readonly("object_positions", [](const sim::EnvState& s) {
        std::vector<Vec3> out;
        for (const sim::Pose& p : s.object_poses) out.push_back(p.position);
        return out;
      });
  py::class_<sim::Rollout>(m, "Rollout")
      .def_readonly("frames", &sim::Rollout::frames)
      .def("__len__", [](const sim::Rollout& r) { return r.frames.size(); });
  m.def("reset", [](const sim::Scene& s, uint64_t seed) { return sim::Reset(s, seed); },
        py::arg("scene"), py::arg("seed"));
  m.def("execute", [](const sim::Scene& s, const WaypointAction& a, uint64_t seed) {
    return sim::ExecuteAction(s, a, seed);
  }, py::arg("scene"), py::arg("action"), py::arg("seed") = 0);
  m.def("success", &sim::Success, py::arg("scene"), py::arg("rollout"));

  py::enum_<demo::ContactClass>(m, "ContactClass")
      .value("NONE", demo::ContactClass::kNone)
      .value("PORTABLE", demo::ContactClass::kPortable)
      .value("FIXED", demo::ContactClass::kFixed)
      .value("SELF", demo::ContactClass::kSelf);
  py::class_<demo::HandFrame>(m, "HandFrame")
      .def_readonly("t", &demo::HandFrame::t)
      .def_readonly("h", &demo::HandFrame::h)
      .def_readonly("bbox", &demo::HandFrame::bbox)
      .def_readonly("theta_hand", &demo::HandFrame::theta_hand)
      .def_readonly("contact", &demo::HandFrame::contact)
      .def_readonly("depth", &demo::HandFrame::depth);
  py::class_<demo::DemoVideo>(m, "DemoVideo")
      .def_readonly("scene_id", &demo::DemoVideo::scene_id)
      .def_readonly("frames", &demo::DemoVideo::frames)
      .def("__len__", &demo::DemoVideo::length)
      .def("__eq__", [](const demo::DemoVideo& a, const demo::DemoVideo& b) { return a == b; })
      .def_property_readonly("contacts", [](const demo::DemoVideo& d) {
        std::vector<demo::ContactClass> c;
        for (const demo::HandFrame& f : d.frames) c.push_back(f.contact);
        return c;
      });
  py::class_<demo::NoiseConfig>(m, "NoiseConfig")
      .def(py::init<>())
      .def_static("default", &demo::NoiseConfig::Default)
      .def_readwrite("pos_sigma", &demo::NoiseConfig::pos_sigma)
      .def_readwrite("contact_flip_prob", &demo::NoiseConfig::contact_flip_prob)
      .def_readwrite("wrist_sigma", &demo::NoiseConfig::wrist_sigma)
      .def_readwrite("time_warp_range", &demo::NoiseConfig::time_warp_range)
      .def_readwrite("dropout_prob", &demo::NoiseConfig::dropout_prob);
  m.def("expert_demo", [](const sim::Scene& s, uint64_t seed) { return demo::ScriptedExpert(s, seed).video; },
        py::arg("scene"), py::arg("seed"));
  m.def("corrupt", [](const demo::DemoVideo& d, const sim::Scene& s, const demo::NoiseConfig& n,
                      uint64_t seed) { return demo::Corrupt(d, n, s.camera.intrinsics, seed); },
        py::arg("demo"), py::arg("scene"), py::arg("noise"), py::arg("seed"));
  m.def("write_demo", &demo::WriteDemo, py::arg("path"), py::arg("demo"));
  m.def("read_demo", &demo::ReadDemo, py::arg("path"));

  m.def("savgol_coefficients", &prior::SavgolCoefficients, py::arg("window"), py::arg("polyorder"));
  m.def("savgol_filter", &prior::SavgolFilter, py::arg("signal"), py::arg("window"),
        py::arg("polyorder"));
  m.def("smooth_contacts", &prior::SmoothContacts, py::arg("contacts"), py::arg("window") = 7,
        py::arg("polyorder") = 2);
  m.def("extract_prior", [](const demo::DemoVideo& d, const sim::Scene& s, uint64_t seed) {
    const prior::ExtractedPrior e = prior::ExtractPrior(d, s, prior::ExtractionConfig{}, seed);
    return py::make_tuple(e.prior, e.window.t_interaction, e.window.t_end);
  }, py::arg("demo"), py::arg("scene"), py::arg("seed") = 0,
     "Returns (prior, t_interaction, t_end).");

  m.def("run", &RunConfig, py::arg("config"), py::arg("seed") = py::none(),
        py::arg("variant") = py::none(), py::arg("out") = py::none());
  m.def("compare", &CompareManifests, py::arg("manifests"));
  m.def("fnv1a_hex", [](const py::bytes& b) { return experiment::Fnv1aHex(std::string(b)); });
}
