"""Typed readers for the sweep and scatter CSV schemas."""

from __future__ import annotations

import csv
from dataclasses import dataclass

SWEEP_COLUMNS = (
    "detector",
    "power_dbm",
    "np",
    "k_nodes",
    "data_symbols",
    "errors",
    "ber",
    "ci_lo",
    "ci_hi",
    "ties",
    "seed",
)

SCATTER_COLUMNS = ("true_bit", "norm_weight_diff", "decided_bit")


class SchemaError(ValueError):
    """The CSV does not match the documented schema."""


@dataclass(frozen=True)
class SweepRow:
    detector: str
    power_dbm: float
    np: int
    k_nodes: int
    data_symbols: int
    errors: int
    ber: float
    ci_lo: float
    ci_hi: float
    ties: int
    seed: int


@dataclass(frozen=True)
class ScatterRow:
    true_bit: int
    norm_weight_diff: float
    decided_bit: int


def _check_header(found, expected, path) -> None:
    if found is None:
        raise SchemaError(f"{path}: empty file, expected columns {','.join(expected)}")
    missing = [c for c in expected if c not in found]
    if missing:
        raise SchemaError(f"{path}: missing column `{missing[0]}`")


def _field(record, column, cast, path, line):
    raw = record[column]
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise SchemaError(
            f"{path}:{line}: column `{column}`: cannot parse {raw!r}"
        ) from exc


def read_sweep(path: str) -> list[SweepRow]:
    """Parse a sweep CSV, failing loudly on any schema deviation."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, SWEEP_COLUMNS, path)
        for line, record in enumerate(reader, start=2):
            row = SweepRow(
                detector=record["detector"],
                power_dbm=_field(record, "power_dbm", float, path, line),
                np=_field(record, "np", int, path, line),
                k_nodes=_field(record, "k_nodes", int, path, line),
                data_symbols=_field(record, "data_symbols", int, path, line),
                errors=_field(record, "errors", int, path, line),
                ber=_field(record, "ber", float, path, line),
                ci_lo=_field(record, "ci_lo", float, path, line),
                ci_hi=_field(record, "ci_hi", float, path, line),
                ties=_field(record, "ties", int, path, line),
                seed=_field(record, "seed", int, path, line),
            )
            if not row.detector:
                raise SchemaError(f"{path}:{line}: column `detector`: empty")
            if not 0.0 <= row.ci_lo <= row.ci_hi <= 1.0:
                raise SchemaError(
                    f"{path}:{line}: interval [{row.ci_lo}, {row.ci_hi}] is not "
                    "an ordered sub-interval of [0, 1]"
                )
            rows.append(row)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def read_scatter(path: str) -> list[ScatterRow]:
    """Parse a scatter CSV of per-symbol fused weight differences."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, SCATTER_COLUMNS, path)
        for line, record in enumerate(reader, start=2):
            row = ScatterRow(
                true_bit=_field(record, "true_bit", int, path, line),
                norm_weight_diff=_field(record, "norm_weight_diff", float, path, line),
                decided_bit=_field(record, "decided_bit", int, path, line),
            )
            if row.true_bit not in (0, 1) or row.decided_bit not in (0, 1):
                raise SchemaError(f"{path}:{line}: bits must be 0 or 1")
            rows.append(row)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows
