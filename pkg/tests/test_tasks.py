import json

import numpy as np
import pytest

from vtolmpc.harness.tasks import (
    LOG_COLUMNS,
    TaskSpec,
    build_reference,
    default_config_dict,
    default_task,
    load_config,
    run_task,
    task_from_overrides,
    write_outputs,
)
from vtolmpc.harness.trajectory import Waypoint
from vtolmpc.plant import PlantConfig


def test_taskspec_validation():
    with pytest.raises(ValueError):
        TaskSpec(kind="loiter")
    with pytest.raises(ValueError):
        TaskSpec(duration=10.0, eval_window=(5.0, 20.0))


def test_presets():
    assert default_task("hover").eval_window == (15.0, 75.0)
    step = default_task("step")
    assert step.step_target[:3] == (2.0, 0.0, 1.0)
    traj = default_task("trajectory")
    assert len(traj.waypoints) == 5


def test_overrides_from_json_like_dict():
    spec = task_from_overrides("trajectory", {
        "duration": 20.0,
        "wind": [0.1, 0.0],
        "waypoints": [
            {"position": [0, 0, 1], "yaw": 0.0, "arrival_t": 1.0},
            {"position": [1, 0, 1], "arrival_t": 6.0},
        ],
    })
    assert spec.wind == (0.1, 0.0)
    assert spec.waypoints[1] == Waypoint((1, 0, 1), 0.0, 6.0)
    # the preset window is clipped to the shorter duration
    assert spec.eval_window == (20.0, 20.0)
    assert task_from_overrides("hover", {"duration": 10.0}).eval_window == (10.0, 10.0)


def test_step_reference_switches():
    spec = default_task("step", duration=30.0, eval_window=(0.0, 30.0), step_time=10.0)
    ref = build_reference(spec, 0.01)
    assert ref.position[999] == pytest.approx([0, 0, 1])
    assert ref.position[1000] == pytest.approx([2, 0, 1])


@pytest.fixture(scope="module")
def short_step():
    spec = default_task("step", duration=15.0, eval_window=(5.0, 15.0), step_time=5.0)
    return run_task(spec)


def test_run_task_log_layout(short_step):
    assert short_step.columns == LOG_COLUMNS
    assert len(short_step.rows) == 1501
    assert short_step.column("t")[-1] == pytest.approx(15.0)
    assert short_step.stalls == 0
    assert np.all(np.abs(short_step.column("pid_integral")) <= 0.2)


def test_step_report_omits_roll_pitch(short_step):
    d = short_step.report.to_dict()
    assert "roll_rms" not in d and "pitch_rms" not in d
    assert d["pose_rms"] > 0.1  # the step itself is inside the window


def test_write_outputs(tmp_path, short_step):
    paths = write_outputs(short_step, tmp_path)
    assert set(p.name for p in tmp_path.iterdir()) == {
        "log.csv", "report.json", "plot_x.csv", "plot_y.csv", "plot_z.csv", "plot_yaw.csv"}
    assert json.loads((tmp_path / "report.json").read_text()) == short_step.report.to_dict()
    lines = (tmp_path / "plot_x.csv").read_text().splitlines()
    assert lines[0] == "t,ref,actual"
    assert len(lines) == 1502
    assert paths["log"].endswith("log.csv")


def test_hover_report_has_attitude():
    r = run_task(default_task("hover", duration=6.0, eval_window=(1.0, 6.0)))
    assert r.report.roll_rms == 0.0 and r.report.pose_rms == 0.0


def test_config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(default_config_dict()))
    plant, ctrl, task = load_config(path)
    assert plant == PlantConfig()
    assert task == {}
    assert ctrl.horizon == 20
    path.write_text(json.dumps({"vehicle": {}}))
    with pytest.raises(ValueError, match="vehicle"):
        load_config(path)
