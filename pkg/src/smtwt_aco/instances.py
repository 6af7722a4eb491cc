"""Benchmark instance generation, OR-Library file parsing, reference values.

The generator follows the standard weighted-tardiness benchmark recipe:
processing times and weights uniform on fixed integer ranges, due dates
uniform on an interval around the total processing time whose location is
set by a tardiness factor TF and whose width by a relative due-date range
RDD, with negative draws clamped to zero.
"""

from __future__ import annotations

import csv
import io
import math
import os
import re
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .model import Instance
from .seeds import derive_seed

TF_GRID = (0.2, 0.4, 0.6, 0.8, 1.0)
RDD_GRID = (0.2, 0.4, 0.6, 0.8, 1.0)

DEFAULT_P_RANGE = (1, 100)
DEFAULT_W_RANGE = (1, 10)


class ParseError(ValueError):
    """Malformed instance or reference data; carries the byte offset."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters for drawing one random instance."""

    n: int
    tf: float
    rdd: float
    seed: int
    p_range: tuple[int, int] = DEFAULT_P_RANGE
    w_range: tuple[int, int] = DEFAULT_W_RANGE

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 < self.tf <= 1.0:
            raise ValueError(f"tf must be in (0, 1], got {self.tf}")
        if not 0.0 < self.rdd <= 1.0:
            raise ValueError(f"rdd must be in (0, 1], got {self.rdd}")
        for name, (lo, hi) in (("p_range", self.p_range), ("w_range", self.w_range)):
            if lo < 1 or hi < lo:
                raise ValueError(f"{name} must satisfy 1 <= low <= high, got {(lo, hi)}")


def instance_label(n: int, tf: float, rdd: float, seed: int) -> str:
    return f"gen_n{n}_tf{tf:g}_rdd{rdd:g}_s{seed}"


def generate_instance(cfg: GeneratorConfig) -> Instance:
    """Draw one instance; a pure function of the config (seed included).

    Draw order is fixed: all processing times, then all weights, then all
    due dates. Due dates are uniform over the integer points of
    [sum(p) * (1 - TF - RDD/2), sum(p) * (1 - TF + RDD/2)], and any
    negative draw is set to 0.
    """
    rng = np.random.default_rng(cfg.seed)
    p = rng.integers(cfg.p_range[0], cfg.p_range[1] + 1, size=cfg.n)
    w = rng.integers(cfg.w_range[0], cfg.w_range[1] + 1, size=cfg.n)
    total_p = int(p.sum())
    lo = math.ceil(total_p * (1.0 - cfg.tf - cfg.rdd / 2.0))
    hi = math.floor(total_p * (1.0 - cfg.tf + cfg.rdd / 2.0))
    if lo > hi:
        # interval narrower than one lattice step (tiny instances only)
        lo = hi
    d = rng.integers(lo, hi + 1, size=cfg.n)
    d = np.maximum(d, 0)
    return Instance.from_arrays(
        p.tolist(), d.tolist(), w.tolist(),
        id=instance_label(cfg.n, cfg.tf, cfg.rdd, cfg.seed),
    )


@dataclass(frozen=True)
class EvalSetEntry:
    instance: Instance
    tf: float
    rdd: float
    seed: int


@dataclass(frozen=True)
class EvaluationSet:
    """Generated benchmark instances grouped by their (TF, RDD) cell."""

    entries: tuple[EvalSetEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def instances(self) -> tuple[Instance, ...]:
        return tuple(e.instance for e in self.entries)

    def subset(self, tf: float | None = None, rdd: float | None = None) -> "EvaluationSet":
        kept = tuple(
            e for e in self.entries
            if (tf is None or e.tf == tf) and (rdd is None or e.rdd == rdd)
        )
        return EvaluationSet(entries=kept)

    def combos(self) -> dict[tuple[float, float], tuple[Instance, ...]]:
        grouped: dict[tuple[float, float], list[Instance]] = {}
        for e in self.entries:
            grouped.setdefault((e.tf, e.rdd), []).append(e.instance)
        return {key: tuple(val) for key, val in grouped.items()}


def generate_evaluation_set(
    per_combo: int,
    seed: int,
    n: int = 100,
    p_range: tuple[int, int] = DEFAULT_P_RANGE,
    w_range: tuple[int, int] = DEFAULT_W_RANGE,
) -> EvaluationSet:
    """Benchmark set with ``per_combo`` instances for each (TF, RDD) cell.

    Child seeds mix the master seed with the cell and replicate indices, so
    every instance is reproducible on its own.
    """
    if per_combo < 1:
        raise ValueError("per_combo must be >= 1")
    entries = []
    for tf_idx, tf in enumerate(TF_GRID):
        for rdd_idx, rdd in enumerate(RDD_GRID):
            for rep in range(per_combo):
                child = derive_seed(seed, "instance", tf_idx, rdd_idx, rep)
                cfg = GeneratorConfig(
                    n=n, tf=tf, rdd=rdd, seed=child,
                    p_range=p_range, w_range=w_range,
                )
                entries.append(EvalSetEntry(generate_instance(cfg), tf, rdd, child))
    return EvaluationSet(entries=tuple(entries))


# --- flat integer instance files (OR-Library weighted-tardiness layout) ---

_TOKEN = re.compile(rb"\S+")


def parse_orlib(data: bytes | str, n: int, layout: str = "pwd", id_prefix: str = "inst") -> list[Instance]:
    """Parse whitespace-separated integers into instances of ``n`` jobs each.

    Every consecutive block of 3n integers yields one instance. ``layout``
    gives the order of the three n-value groups within a block; the default
    "pwd" (processing times, weights, due dates) matches the published
    OR-Library wt files. Raises ParseError, naming the byte offset, on a
    non-integer token, a total count that is not a multiple of 3n, or an
    out-of-range value.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if sorted(layout) != ["d", "p", "w"]:
        raise ValueError(f"layout must be a permutation of 'pwd', got {layout!r}")
    if isinstance(data, str):
        data = data.encode("ascii")
    values: list[int] = []
    offsets: list[int] = []
    for m in _TOKEN.finditer(data):
        try:
            values.append(int(m.group()))
        except ValueError:
            raise ParseError(f"not an integer: {m.group()!r}", m.start()) from None
        offsets.append(m.start())
    block = 3 * n
    if len(values) == 0 or len(values) % block != 0:
        raise ParseError(
            f"token count {len(values)} is not a positive multiple of 3n={block}",
            len(data),
        )
    limits = {"p": 1, "w": 1, "d": 0}
    names = {"p": "processing time", "w": "weight", "d": "due date"}
    n_blocks = len(values) // block
    instances = []
    for b in range(n_blocks):
        base = b * block
        groups: dict[str, list[int]] = {}
        for g, key in enumerate(layout):
            start = base + g * n
            vals = values[start : start + n]
            for off, v in enumerate(vals):
                if v < limits[key]:
                    raise ParseError(
                        f"{names[key]} must be >= {limits[key]}, got {v}",
                        offsets[start + off],
                    )
            groups[key] = vals
        instances.append(
            Instance.from_arrays(
                groups["p"], groups["d"], groups["w"],
                id=f"{id_prefix}_{b + 1}" if n_blocks > 1 else id_prefix,
            )
        )
    return instances


def serialize_instance(instance: Instance, layout: str = "pwd") -> str:
    """Inverse of parse_orlib for a single instance: three lines of ints."""
    groups = {
        "p": instance.processing_times,
        "w": instance.weights,
        "d": instance.due_dates,
    }
    lines = [" ".join(str(int(v)) for v in groups[key]) for key in layout]
    return "\n".join(lines) + "\n"


def load_instance_file(path, n: int | None = None, layout: str = "pwd", id_prefix: str | None = None) -> list[Instance]:
    """Read an instance file; if ``n`` is omitted the file must hold exactly
    one instance (token count divisible by 3)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if n is None:
        count = len(_TOKEN.findall(data))
        if count == 0 or count % 3 != 0:
            raise ParseError(f"cannot infer n: token count {count} is not a multiple of 3")
        n = count // 3
    prefix = id_prefix
    if prefix is None:
        prefix = os.path.splitext(os.path.basename(str(path)))[0]
    return parse_orlib(data, n, layout=layout, id_prefix=prefix)


# --- best-known reference values ---


@dataclass(frozen=True)
class ReferenceTable:
    """Lookup from instance id to its best-known objective value."""

    values: dict[str, int] = field(default_factory=dict)

    def __contains__(self, instance_id: str) -> bool:
        return instance_id in self.values

    def __getitem__(self, instance_id: str) -> int:
        return self.values[instance_id]

    def get(self, instance_id: str, default=None):
        return self.values.get(instance_id, default)

    def __len__(self) -> int:
        return len(self.values)


def load_reference(text: str | Iterable[str]) -> ReferenceTable:
    """Load a reference CSV with header ``id,best_twt``.

    Duplicate ids and negative values are rejected. An empty file yields an
    empty table (reports then mark deviations unavailable).
    """
    if isinstance(text, str):
        lines = io.StringIO(text)
    else:
        lines = text
    reader = csv.reader(lines)
    rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        return ReferenceTable(values={})
    header = [cell.strip().lower() for cell in rows[0]]
    body = rows[1:] if header[:2] == ["id", "best_twt"] else rows
    values: dict[str, int] = {}
    for row in body:
        if len(row) < 2:
            raise ParseError(f"reference row needs id and value: {row!r}")
        key = row[0].strip()
        try:
            val = int(row[1])
        except ValueError:
            raise ParseError(f"reference value for {key!r} is not an integer: {row[1]!r}") from None
        if val < 0:
            raise ParseError(f"reference value for {key!r} is negative: {val}")
        if key in values:
            raise ParseError(f"duplicate reference id {key!r}")
        values[key] = val
    return ReferenceTable(values=values)


def load_reference_file(path) -> ReferenceTable:
    with open(path, "r", encoding="utf-8") as fh:
        return load_reference(fh)
