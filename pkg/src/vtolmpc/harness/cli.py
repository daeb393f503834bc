"""Command-line entry point.

Exit codes: 0 success, 1 usage error (bad flags, missing input files),
2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from ..errors import VtolMpcError
from ..plant import STATE_COLUMNS, PlantConfig, PlantState, read_command_csv, simulate_open_loop, write_csv
from ..sysid import AXES, align_signals, fit_first_order, fit_second_order, read_log_csv
from .tasks import (
    TASK_KINDS,
    default_config_dict,
    load_config,
    report_from_rows,
    run_task,
    task_from_overrides,
    write_outputs,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _wind(text: str) -> tuple:
    parts = [float(p) for p in text.replace(" ", "").split(",") if p]
    if len(parts) == 1:
        return (parts[0], 0.0)
    if len(parts) == 2:
        return tuple(parts)
    raise argparse.ArgumentTypeError("wind must be 'ax' or 'ax,ay' in m/s^2")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vtolmpc", description="Quadrotor identification, MPC control and evaluation.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("sim", help="open-loop plant response to a command CSV")
    s.add_argument("--commands", required=True, help="CSV with t,cmd_roll,cmd_pitch,cmd_yawrate,cmd_vz")
    s.add_argument("--config", help="JSON config (plant section is used)")
    s.add_argument("--wind", type=_wind, default=(0.0, 0.0), help="wind acceleration 'ax[,ay]' in m/s^2")
    s.add_argument("--out", required=True, help="output state CSV")

    s = sub.add_parser("sysid", help="fit a transfer function to a t,input,output log")
    s.add_argument("--log", required=True)
    s.add_argument("--order", type=int, choices=(1, 2), default=2)
    s.add_argument("--channel", choices=AXES, default="roll")
    s.add_argument("--max-lag", type=int, default=0, help="align by cross-correlation first (samples)")
    s.add_argument("--out", help="write the JSON report here instead of stdout")

    s = sub.add_parser("run-task", help="closed-loop hover / step / trajectory task")
    s.add_argument("--task", choices=TASK_KINDS, required=True)
    s.add_argument("--config", help="JSON config with plant/controller/task sections")
    s.add_argument("--wind", type=_wind, help="wind acceleration 'ax[,ay]' in m/s^2")
    s.add_argument("--seed", type=int)
    s.add_argument("--duration", type=float)
    s.add_argument("--out-dir", default="out")

    s = sub.add_parser("rms", help="recompute the RMS report from a task log")
    s.add_argument("--log", required=True)
    s.add_argument("--window", type=float, nargs=2, metavar=("T0", "T1"), required=True)
    s.add_argument("--no-attitude", action="store_true", help="omit roll and pitch")

    sub.add_parser("default-config", help="print the default JSON config")
    return p


def _require_file(path, what):
    if path is not None and not os.path.isfile(path):
        raise UsageError(f"{what} not found: {path}")


def _cmd_sim(a):
    _require_file(a.commands, "command file")
    _require_file(a.config, "config file")
    plant_cfg = load_config(a.config)[0] if a.config else PlantConfig()
    _, cmds = read_command_csv(a.commands)
    state = PlantState(wind_accel=np.array(a.wind))
    rows = simulate_open_loop(cmds, plant_cfg, state)
    write_csv(a.out, STATE_COLUMNS, rows)


def _cmd_sysid(a):
    _require_file(a.log, "log file")
    log = read_log_csv(a.log)
    lag = 0
    if a.max_lag > 0:
        log, lag = align_signals(log, a.max_lag)
    fit = fit_first_order if a.order == 1 else fit_second_order
    report = fit(log)
    report.extra.update({"channel": a.channel, "lag_samples": lag})
    text = report.to_json() + "\n"
    if a.out:
        with open(a.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_run_task(a):
    _require_file(a.config, "config file")
    if a.config:
        plant_cfg, ctrl_cfg, overrides = load_config(a.config)
    else:
        plant_cfg, ctrl_cfg, overrides = PlantConfig(), None, {}
    for key in ("wind", "seed", "duration"):
        value = getattr(a, key)
        if value is not None:
            overrides[key] = value
    spec = task_from_overrides(a.task, overrides)
    result = run_task(spec, plant_cfg, ctrl_cfg)
    write_outputs(result, a.out_dir)
    sys.stdout.write(result.report.to_json() + "\n")


def _cmd_rms(a):
    _require_file(a.log, "log file")
    with open(a.log, newline="") as fh:
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [[float(v) for v in r] for r in reader if r]
    report = report_from_rows(columns, rows, tuple(a.window), include_attitude=not a.no_attitude)
    sys.stdout.write(report.to_json() + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
        if a.command is None:
            raise UsageError(parser.format_usage().strip())
        handler = {
            "sim": _cmd_sim,
            "sysid": _cmd_sysid,
            "run-task": _cmd_run_task,
            "rms": _cmd_rms,
            "default-config": lambda _: sys.stdout.write(json.dumps(default_config_dict(), indent=2) + "\n"),
        }[a.command]
        handler(a)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (VtolMpcError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
