"""Command-line front end: sweeps, scatter export, model table, convergence runs.

Subcommands:

* ``sweep``    run a BER sweep over a power (and optional pilot) grid
* ``scatter``  export normalized fused weight differences for one cell
* ``lemma1``   measure the kernel-density estimator's convergence gap
* ``cv-table`` print the fitted link models and their coefficients of variation

Runs are configured by a YAML file; every value that shapes the numbers
lives there, while ``--seed`` and ``--workers`` may override reproducibility
and scheduling knobs.  Each output file is accompanied by a JSON manifest
(``<out>.manifest.json``) recording the tool version, the resolved
configuration, and the seed.  Exit codes: 0 on success, 2 for configuration
problems (with file and line where known), 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from typing import Any

import yaml

from . import __version__
from .channel import (
    BODY_CHANNEL_MODELS,
    GainDistribution,
    NoiseSpec,
    coefficient_of_variation,
    dbm_to_watts,
)
from .errors import ConfigError, NumericalError, OokFusionError
from .frames import FrameConfig
from .harness import (
    DETECTOR_IDS,
    SweepConfig,
    collect_scatter,
    render_convergence_csv,
    render_scatter_csv,
    render_sweep_csv,
    run_convergence,
    run_sweep,
)
from .oracle import StatCsiDetector


def _collect_lines(node, prefix: str, out: dict[str, int]) -> None:
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            key = str(key_node.value)
            dotted = f"{prefix}.{key}" if prefix else key
            out[dotted] = key_node.start_mark.line + 1
            _collect_lines(value_node, dotted, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            _collect_lines(item, f"{prefix}[{i}]", out)


class ConfigReader:
    """Typed access to a loaded YAML config with line-anchored errors."""

    def __init__(self, path: str):
        self.path = path
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config: {exc}") from exc
        try:
            self.data = yaml.safe_load(text)
            root = yaml.compose(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            loc = f"{path}:{mark.line + 1}: " if mark else f"{path}: "
            raise ConfigError(f"{loc}invalid YAML: {exc}") from exc
        if self.data is None:
            self.data = {}
        if not isinstance(self.data, dict):
            raise ConfigError(f"{path}:1: top level must be a mapping")
        self.lines: dict[str, int] = {}
        if root is not None:
            _collect_lines(root, "", self.lines)

    def fail(self, key: str, msg: str) -> None:
        line = self.lines.get(key)
        loc = f"{self.path}:{line}" if line else self.path
        raise ConfigError(f"{loc}: {key}: {msg}")

    def get(self, dotted: str, default=None):
        node: Any = self.data
        for part in dotted.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def require(self, dotted: str):
        sentinel = object()
        value = self.get(dotted, sentinel)
        if value is sentinel:
            self.fail(dotted, "required key is missing")
        return value

    def number(self, dotted: str, default=None, *, minimum=None):
        value = self.get(dotted, default)
        if value is None:
            self.fail(dotted, "required key is missing")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(dotted, f"expected a number, got {type(value).__name__}")
        if not math.isfinite(value):
            self.fail(dotted, "must be finite")
        if minimum is not None and value < minimum:
            self.fail(dotted, f"must be >= {minimum}")
        return float(value)

    def integer(self, dotted: str, default=None, *, minimum=None):
        value = self.get(dotted, default)
        if value is None:
            self.fail(dotted, "required key is missing")
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(dotted, f"expected an integer, got {type(value).__name__}")
        if minimum is not None and value < minimum:
            self.fail(dotted, f"must be >= {minimum}")
        return int(value)


def _parse_channel(reader: ConfigReader, key: str, entry) -> GainDistribution:
    if isinstance(entry, str):
        if entry not in BODY_CHANNEL_MODELS:
            reader.fail(key, f"unknown link model {entry!r} (known: {sorted(BODY_CHANNEL_MODELS)})")
        return BODY_CHANNEL_MODELS[entry][0]
    if isinstance(entry, dict):
        family = entry.get("family")
        params = entry.get("params")
        if family not in ("burr", "weibull"):
            reader.fail(key, "family must be 'burr' or 'weibull'")
        if not isinstance(params, list) or not all(
            isinstance(p, (int, float)) and not isinstance(p, bool) for p in params
        ):
            reader.fail(key, "params must be a list of numbers")
        try:
            if family == "burr":
                if len(params) != 3:
                    reader.fail(key, "burr takes 3 params: [scale, shape_c, shape_k]")
                return GainDistribution.burr(*params)
            if len(params) != 2:
                reader.fail(key, "weibull takes 2 params: [scale, shape]")
            return GainDistribution.weibull(*params)
        except ValueError as exc:
            reader.fail(key, str(exc))
    reader.fail(key, "must be a model id string or {family, params} mapping")
    raise AssertionError("unreachable")


def _noise_spec(reader: ConfigReader, base: str) -> NoiseSpec:
    n0 = reader.number(f"{base}.n0_dbm_per_hz", default=-174.0)
    bw = reader.number(f"{base}.bandwidth_hz", default=100e6)
    if bw <= 0:
        reader.fail(f"{base}.bandwidth_hz", "must be positive")
    return NoiseSpec(n0_dbm_per_hz=n0, bandwidth_hz=bw)


def _frame_config(reader: ConfigReader, tx_power_watts: float) -> FrameConfig:
    channels = reader.require("frame.channels")
    if not isinstance(channels, list) or not channels:
        reader.fail("frame.channels", "must be a non-empty list")
    dists = tuple(
        _parse_channel(reader, f"frame.channels[{i}]", entry)
        for i, entry in enumerate(channels)
    )
    k_nodes = reader.integer("frame.k_nodes", default=len(dists), minimum=1)
    if k_nodes != len(dists):
        if len(dists) == 1:
            dists = dists * k_nodes
        else:
            reader.fail("frame.channels", f"expected {k_nodes} entries, got {len(dists)}")
    n_pilot = reader.integer("frame.np", default=40, minimum=4)
    if n_pilot % 2 != 0:
        reader.fail("frame.np", "pilot length must be even")
    n_data = reader.integer("frame.nd", default=1000, minimum=1)
    noise = _noise_spec(reader, "frame.noise")
    try:
        return FrameConfig(
            k_nodes=k_nodes,
            n_pilot=n_pilot,
            n_data=n_data,
            tx_power_watts=tx_power_watts,
            node_dists=dists,
            noise=noise,
        )
    except ConfigError as exc:
        raise ConfigError(f"{reader.path}: frame: {exc}") from exc


def _master_seed(reader: ConfigReader, override) -> int:
    if override is not None:
        seed = int(override)
    else:
        seed = reader.integer("seed", default=0, minimum=0)
    if not 0 <= seed < 2**64:
        raise ConfigError(f"{reader.path}: seed: must fit in an unsigned 64-bit integer")
    return seed


def _sweep_config(reader: ConfigReader, seed_override) -> SweepConfig:
    detectors = reader.require("sweep.detectors")
    if not isinstance(detectors, list) or not detectors:
        reader.fail("sweep.detectors", "must be a non-empty list")
    for i, det in enumerate(detectors):
        if det not in DETECTOR_IDS:
            reader.fail(f"sweep.detectors[{i}]", f"unknown detector {det!r} (known: {list(DETECTOR_IDS)})")
    powers = reader.require("sweep.power_grid_dbm")
    if not isinstance(powers, list) or not powers:
        reader.fail("sweep.power_grid_dbm", "must be a non-empty list of dBm values")
    for i, p in enumerate(powers):
        if isinstance(p, bool) or not isinstance(p, (int, float)) or not math.isfinite(p):
            reader.fail(f"sweep.power_grid_dbm[{i}]", "must be a finite number")
    pilot_grid = reader.get("sweep.pilot_grid", [])
    if not isinstance(pilot_grid, list):
        reader.fail("sweep.pilot_grid", "must be a list of even integers")
    for i, n in enumerate(pilot_grid):
        if isinstance(n, bool) or not isinstance(n, int) or n < 4 or n % 2 != 0:
            reader.fail(f"sweep.pilot_grid[{i}]", "must be an even integer >= 4")
    frame = _frame_config(reader, tx_power_watts=1.0)
    try:
        return SweepConfig(
            frame=frame,
            detectors=tuple(detectors),
            power_grid_dbm=tuple(float(p) for p in powers),
            pilot_grid=tuple(int(n) for n in pilot_grid),
            min_errors=reader.integer("sweep.min_errors", default=100, minimum=1),
            max_data_symbols=reader.integer(
                "sweep.max_data_symbols", default=10_000_000, minimum=1
            ),
            kernel_c_scale=reader.number("sweep.kernel_c_scale", default=1.0),
            master_seed=_master_seed(reader, seed_override),
        )
    except ConfigError as exc:
        if str(exc).startswith(reader.path):
            raise
        raise ConfigError(f"{reader.path}: sweep: {exc}") from exc


def _write_output(out_path: str, text: str, manifest: dict) -> None:
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    manifest = dict(manifest)
    manifest["tool"] = "ookfusion"
    manifest["version"] = __version__
    manifest["created_utc"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_sweep(args) -> int:
    reader = ConfigReader(args.config)
    cfg = _sweep_config(reader, args.seed)
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    points = run_sweep(cfg, workers=args.workers)
    manifest = {
        "command": "sweep",
        "seed": cfg.master_seed,
        "workers": args.workers,
        "config": reader.data,
        "cells": len(points),
        "degenerate_frames": sum(p.degenerate_frames for p in points),
    }
    _write_output(args.out, render_sweep_csv(points), manifest)
    print(f"wrote {args.out}: {len(points)} cells")
    return 0


def _cmd_cv_table(args) -> int:
    lines = ["model,family,cv,reference_cv,abs_dev"]
    for model_id, (dist, reference_cv) in BODY_CHANNEL_MODELS.items():
        cv = coefficient_of_variation(dist)
        lines.append(
            f"{model_id},{dist.family.value},{cv:.9g},{reference_cv:.9g},{abs(cv - reference_cv):.9g}"
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        _write_output(args.out, text, {"command": "cv-table"})
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_scatter(args) -> int:
    reader = ConfigReader(args.config)
    detector = reader.require("scatter.detector")
    if detector not in ("m-wcnde", "p-wcnde", "d-wcnde", "c-wcnde"):
        reader.fail("scatter.detector", f"need a weight-comparing detector, got {detector!r}")
    power_dbm = reader.number("scatter.power_dbm")
    n_symbols = reader.integer("scatter.n_symbols", default=10_000, minimum=1)
    frame = _frame_config(reader, tx_power_watts=dbm_to_watts(power_dbm))
    seed = _master_seed(reader, args.seed)
    points = collect_scatter(frame, detector, n_symbols, seed)
    manifest = {
        "command": "scatter",
        "seed": seed,
        "detector": detector,
        "power_dbm": power_dbm,
        "n_symbols": n_symbols,
        "config": reader.data,
    }
    _write_output(args.out, render_scatter_csv(points), manifest)
    print(f"wrote {args.out}: {len(points)} symbols")
    return 0


def _cmd_lemma1(args) -> int:
    reader = ConfigReader(args.config)
    model = reader.get("convergence.model", "d7")
    dist = _parse_channel(reader, "convergence.model", model)
    power_dbm = reader.number("convergence.power_dbm", default=0.0)
    noise = _noise_spec(reader, "convergence.noise")
    pilot_grid = reader.get("convergence.pilot_grid", [100, 1000, 10000])
    if not isinstance(pilot_grid, list) or not pilot_grid:
        reader.fail("convergence.pilot_grid", "must be a non-empty list")
    for i, n in enumerate(pilot_grid):
        if isinstance(n, bool) or not isinstance(n, int) or n < 2 or n % 2 != 0:
            reader.fail(f"convergence.pilot_grid[{i}]", "must be an even integer >= 2")
    c_grid = reader.get("convergence.kernel_c_scale_grid", [0.01, 1.0, 10.0])
    if not isinstance(c_grid, list) or not c_grid:
        reader.fail("convergence.kernel_c_scale_grid", "must be a non-empty list")
    for i, c in enumerate(c_grid):
        if isinstance(c, bool) or not isinstance(c, (int, float)) or not c > 0:
            reader.fail(f"convergence.kernel_c_scale_grid[{i}]", "must be a positive number")
    n_seeds = reader.integer("convergence.n_seeds", default=20, minimum=2)
    seed = _master_seed(reader, args.seed)

    det = StatCsiDetector(
        dist=dist, noise=noise, tx_power_watts=dbm_to_watts(power_dbm)
    )
    kernel_c_grid = tuple(float(c) / noise.power_watts for c in c_grid)
    probe, cells = run_convergence(
        det, tuple(int(n) for n in pilot_grid), kernel_c_grid, n_seeds, seed
    )
    manifest = {
        "command": "lemma1",
        "seed": seed,
        "power_dbm": power_dbm,
        "probe_re": probe.real,
        "probe_im": probe.imag,
        "config": reader.data,
    }
    _write_output(args.out, render_convergence_csv(cells), manifest)
    print(f"wrote {args.out}: {len(cells)} cells")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ookfusion",
        description="Link-level Monte Carlo for noncoherent distributed on-off keying.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run a BER sweep over a power grid")
    sweep.add_argument("--config", required=True, help="YAML run configuration")
    sweep.add_argument("--out", required=True, help="output CSV path")
    sweep.add_argument("--seed", type=int, default=None, help="override the config seed")
    sweep.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    sweep.set_defaults(func=_cmd_sweep)

    scatter = sub.add_parser("scatter", help="export fused weight differences")
    scatter.add_argument("--config", required=True)
    scatter.add_argument("--out", required=True)
    scatter.add_argument("--seed", type=int, default=None)
    scatter.set_defaults(func=_cmd_scatter)

    lemma1 = sub.add_parser(
        "lemma1", help="measure the kernel-density estimator's convergence gap"
    )
    lemma1.add_argument("--config", required=True)
    lemma1.add_argument("--out", required=True)
    lemma1.add_argument("--seed", type=int, default=None)
    lemma1.set_defaults(func=_cmd_lemma1)

    cv = sub.add_parser("cv-table", help="print the fitted link models' dispersion table")
    cv.add_argument("--out", default=None, help="optional output CSV path")
    cv.set_defaults(func=_cmd_cv_table)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OokFusionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
