import json
import os
import pathlib
import subprocess

import pytest

import whirl

ROOT = pathlib.Path(__file__).resolve().parents[2]
CONFIGS = ROOT / "configs"


def tiny_config(tmp_path):
    scenes = CONFIGS / "scenes"
    text = f"""
task: drawer
seeds: [0]
output_dir: runs
scenes: {{train: [{scenes / 'drawer_a.yaml'}, {scenes / 'drawer_b.yaml'}], test: [{scenes / 'drawer_c.yaml'}]}}
demos: {{train: 2, test_per_scene: 1}}
loop:
  samples_per_demo: 6
  n_elite: 2
  iterations: 1
  eval_samples: 4
  policy: {{hidden: [16, 16], epochs: 5}}
"""
    path = tmp_path / "tiny.cfg"
    path.write_text(text)
    return path


def test_savgol_matches_table():
    c = whirl.savgol_coefficients(5, 2)
    expected = [-3 / 35, 12 / 35, 17 / 35, 12 / 35, -3 / 35]
    assert c == pytest.approx(expected, abs=1e-12)


def test_savgol_rejects_even_window():
    with pytest.raises(whirl.ParameterError):
        whirl.savgol_coefficients(4, 2)
    assert issubclass(whirl.ParameterError, whirl.WhirlError)


def test_expert_demo_prior_and_execution():
    scene = whirl.load_scene(str(CONFIGS / "scenes" / "drawer_a.yaml"))
    demo = whirl.expert_demo(scene, 3)
    assert len(demo) >= 10
    assert whirl.ContactClass.FIXED in demo.contacts
    prior, t_int, t_end = whirl.extract_prior(demo, scene, 0)
    assert 0 <= t_int < t_end < len(demo)
    assert len(prior.flatten()) == 15
    rollout = whirl.execute(scene, prior, 0)
    assert len(rollout) > 0
    assert isinstance(whirl.success(scene, rollout), bool)


def test_demo_file_round_trip(tmp_path):
    scene = whirl.load_scene(str(CONFIGS / "scenes" / "door_a.yaml"))
    demo = whirl.corrupt(whirl.expert_demo(scene, 1), scene, whirl.NoiseConfig.default(), 7)
    path = tmp_path / "d.demo"
    whirl.write_demo(path, demo)
    assert whirl.read_demo(path) == demo


def test_missing_scene_raises():
    with pytest.raises(whirl.WhirlError):
        whirl.load_scene("/nonexistent/scene.yaml")


def test_run_and_compare(tmp_path):
    cfg = tiny_config(tmp_path)
    result = whirl.run(cfg, out=tmp_path / "out")
    curve = result["curves"][0]
    assert curve["iteration"] == [0, 1]
    assert all(0.0 <= s <= 1.0 for s in curve["train_success"])
    manifest = json.loads(pathlib.Path(result["manifest"]).read_text())
    assert manifest["format"] == "whirl-manifest v1"
    rows = whirl.compare([result["manifest"]])
    assert rows[0]["variant"] == "whirl" and rows[0]["runs"] == 1


@pytest.mark.skipif("WHIRL_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_usage_error_exit_code():
    proc = subprocess.run([os.environ["WHIRL_CLI"], "run", "--config", "/nonexistent.cfg"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
