"""Command-line entry point.

    spinescan scan <config.json> [--out DIR] [--dump-frames] [--realtime]
    spinescan manual <config.json> [--out DIR] [--dump-frames]
    spinescan compare <config.json> [--out DIR] [--jobs N]
    spinescan detector-eval <config.json> [--frames N] [--out DIR]

Exit status is 0 when every scan finishes Done, 2 when a scan ends in the
safety stop, and 1 on configuration or runtime errors.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from .config import Scenario, parse_scenario
from .errors import DomainError, ScenarioError
from .evaluation import detector_sweep
from .imaging import write_pgm
from .reconstruction import (RenderedFrames, build_coronal, default_coronal_depth, scan_report)
from .scanner import Phase, ScanAborted, ScanLog, run_scan

EXIT_OK, EXIT_ERROR, EXIT_STOPPED = 0, 1, 2


def _jsonable(obj):
    """Replace non-finite floats by None so the output is strict JSON."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _write_json(path, data) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _prepare_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory not writable: {path}")
    return path


def simulate(scenario: Scenario, mode: str = "robotic", frame_sink=None,
             realtime: bool = False) -> ScanLog:
    return run_scan(scenario.phantom, scenario.control, scenario.seed,
                    perception=scenario.perception, render=scenario.render,
                    contact=scenario.contact, mode=mode, manual=scenario.manual,
                    initial_offset=scenario.initial_offset, frame_sink=frame_sink,
                    realtime=realtime)


def write_artifacts(scenario: Scenario, log: ScanLog, out: str, mode: str = "robotic") -> dict:
    """scanlog.csv, coronal.pgm and report.json per the scenario's output flags."""
    flags = scenario.outputs
    if flags.emit_csv:
        log.to_csv(os.path.join(out, "scanlog.csv"))
    if flags.dump_coronal and log.frame_records():
        depth, slab = default_coronal_depth(scenario.phantom, scenario.control)
        frames = RenderedFrames(log, scenario.phantom, scenario.render)
        image = build_coronal(log, frames, depth, slab=slab)
        write_pgm(os.path.join(out, "coronal.pgm"), image.grid)
    report = scan_report(log, scenario.phantom, scenario.angle_window)
    report.update(mode=mode, seed=scenario.seed)
    _write_json(os.path.join(out, "report.json"), report)
    return report


def run_scenario(scenario: Scenario, mode: str = "robotic", out: str | None = None,
                 realtime: bool = False) -> int:
    """Run one scan and write its artifacts; returns the process exit code."""
    out = _prepare_dir(out or scenario.outputs.directory)
    sink = None
    if scenario.outputs.dump_frames:
        frame_dir = _prepare_dir(os.path.join(out, "frames"))

        def sink(frame):
            write_pgm(os.path.join(frame_dir, f"{frame.frame_id:04d}.pgm"), frame.intensities)

    log = simulate(scenario, mode, sink, realtime)
    write_artifacts(scenario, log, out, mode)
    return EXIT_STOPPED if log.phase is Phase.STOPPED else EXIT_OK


def run_pair(scenario: Scenario, jobs: int = 2) -> dict:
    """Robotic and simulated-manual logs of the same scenario; scans are independent."""
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = {m: pool.submit(simulate, scenario, m) for m in ("robotic", "manual")}
        return {m: f.result() for m, f in futures.items()}


def compare_reports(scenario: Scenario, logs: dict) -> tuple[dict, int]:
    result = {m: scan_report(log, scenario.phantom, scenario.angle_window) for m, log in logs.items()}
    rob, man = result["robotic"]["mean_abs_dev_mm"], result["manual"]["mean_abs_dev_mm"]
    result["robotic_to_manual_ratio"] = rob / man if rob is not None and man else None
    code = EXIT_STOPPED if any(log.phase is Phase.STOPPED for log in logs.values()) else EXIT_OK
    return result, code


def compare(scenario: Scenario, jobs: int = 2) -> tuple[dict, int]:
    """Robotic and simulated-manual scans of the same phantom, side by side."""
    return compare_reports(scenario, run_pair(scenario, jobs))


def _with_flags(scenario: Scenario, args) -> Scenario:
    if getattr(args, "dump_frames", False):
        scenario = replace(scenario, outputs=replace(scenario.outputs, dump_frames=True))
    return scenario


def _cmd_scan(args, mode):
    scenario = _with_flags(parse_scenario(args.config), args)
    code = run_scenario(scenario, mode, args.out, getattr(args, "realtime", False))
    out = args.out or scenario.outputs.directory
    print(f"{mode} scan finished ({'Stopped' if code == EXIT_STOPPED else 'Done'}); "
          f"artifacts in {out}")
    return code


def _cmd_compare(args):
    scenario = parse_scenario(args.config)
    result, code = compare(scenario, args.jobs)
    out = _prepare_dir(args.out or scenario.outputs.directory)
    _write_json(os.path.join(out, "compare.json"), result)
    print(json.dumps(_jsonable(result), indent=2, sort_keys=True))
    return code


def _cmd_detector_eval(args):
    scenario = parse_scenario(args.config)
    if args.frames < 1:
        raise DomainError("--frames must be at least 1")
    report = detector_sweep(scenario.phantom, args.frames, scenario.seed, cfg=scenario.control,
                            render=scenario.render, perception=scenario.perception).as_dict()
    if args.out:
        _write_json(os.path.join(_prepare_dir(args.out), "detector_eval.json"), report)
    print(json.dumps(_jsonable(report), indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinescan", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="autonomous robotic scan")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides outputs.directory)")
    p.add_argument("--dump-frames", action="store_true", help="write frames/NNNN.pgm")
    p.add_argument("--realtime", action="store_true", help="pace the loop to wall-clock time")
    p.set_defaults(func=lambda a: _cmd_scan(a, "robotic"))

    p = sub.add_parser("manual", help="simulated freehand scan of the same phantom")
    p.add_argument("config")
    p.add_argument("--out")
    p.add_argument("--dump-frames", action="store_true")
    p.set_defaults(func=lambda a: _cmd_scan(a, "manual"))

    p = sub.add_parser("compare", help="robotic vs simulated-manual deviation statistics")
    p.add_argument("config")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=2, help="worker threads (default 2)")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("detector-eval", help="perception metrics on a synthetic frame sweep")
    p.add_argument("config")
    p.add_argument("--frames", type=int, default=500)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_detector_eval)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which would read as a safety stop
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    try:
        return args.func(args)
    except (ScenarioError, DomainError, ScanAborted, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
