"""Ingestion, scaling, filtering and windowing of multivariate process data.

A :class:`TimeSeriesSet` holds a uniformly sampled ``N_samples x N_tags``
matrix together with per-tag metadata.  Every transformation returns a new
set; instances are treated as read-only once built so they can be shared
between estimator workers.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import EmptySetError, IngestError, ParamError, ScalingError

TAG_KINDS = ("PV", "CV", "MV", "SP", "DV")
SCALING_STATES = ("raw", "standardised", "limit_scaled")
#: kinds scaled by the largest distance to a limit; MV uses the smallest
MAX_SPAN_KINDS = ("PV", "CV", "DV", "SP")

DEFAULT_CONSTANT_TOLERANCE = 1e-12
UNIFORM_RTOL = 1e-3


@dataclass(frozen=True)
class TagMeta:
    name: str
    description: str = ""
    kind: str = "PV"
    nominal: Optional[float] = None
    low_limit: Optional[float] = None
    high_limit: Optional[float] = None

    def __post_init__(self):
        if self.kind not in TAG_KINDS:
            raise IngestError(f"tag {self.name!r}: unknown kind {self.kind!r}")
        limits = (self.nominal, self.low_limit, self.high_limit)
        if all(v is None for v in limits):
            return
        if any(v is None for v in limits):
            raise IngestError(f"tag {self.name!r}: nominal, low and high must be given together")
        if not self.low_limit < self.high_limit:
            raise IngestError(f"tag {self.name!r}: low limit must be below high limit")
        if not self.low_limit <= self.nominal <= self.high_limit:
            raise IngestError(f"tag {self.name!r}: nominal outside limits")

    @property
    def has_limits(self) -> bool:
        return self.nominal is not None

    def span(self) -> float:
        """Allowed change used by process-limit scaling."""
        if not self.has_limits:
            raise ScalingError(f"tag {self.name!r} has no limits")
        up = self.high_limit - self.nominal
        down = self.nominal - self.low_limit
        return max(up, down) if self.kind in MAX_SPAN_KINDS else min(up, down)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "kind": self.kind,
            "nominal": self.nominal,
            "low": self.low_limit,
            "high": self.high_limit,
        }


@dataclass(frozen=True)
class TimeSeriesSet:
    tags: tuple
    sample_period: float
    values: np.ndarray
    start_time: float = 0.0
    scaling_state: str = "raw"
    degenerate: tuple = field(default=())

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise IngestError("values must be a 2-D matrix")
        if values.shape[0] < 2:
            raise IngestError("at least two samples are required")
        if values.shape[1] != len(self.tags):
            raise IngestError("number of columns does not match number of tags")
        if not np.all(np.isfinite(values)):
            raise IngestError("values contain non-finite entries")
        if not self.sample_period > 0:
            raise IngestError("sample_period must be positive")
        if self.scaling_state not in SCALING_STATES:
            raise ParamError(f"unknown scaling state {self.scaling_state!r}")
        names = [t.name for t in self.tags]
        if len(set(names)) != len(names):
            raise IngestError("duplicate tag name")
        values.setflags(write=False)
        object.__setattr__(self, "tags", tuple(self.tags))
        object.__setattr__(self, "values", values)

    @property
    def names(self) -> list:
        return [t.name for t in self.tags]

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_tags(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.start_time + self.sample_period * np.arange(self.n_samples)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.index(name)]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ParamError(f"unknown tag {name!r}") from None

    def tag(self, name: str) -> TagMeta:
        return self.tags[self.index(name)]

    def select(self, names: Sequence[str]) -> "TimeSeriesSet":
        idx = [self.index(n) for n in names]
        return replace(
            self,
            tags=tuple(self.tags[i] for i in idx),
            values=self.values[:, idx],
            degenerate=tuple(d for d in self.degenerate if d in names),
        )

    def with_metadata(self, metas: Sequence[TagMeta]) -> "TimeSeriesSet":
        """Attach metadata records, matched by name; every column needs one."""
        by_name = {m.name: m for m in metas}
        missing = [n for n in self.names if n not in by_name]
        if missing:
            raise IngestError(f"no tag metadata for {', '.join(missing)}")
        return replace(self, tags=tuple(by_name[n] for n in self.names))


def _parse_float(cell, row, col, header):
    try:
        value = float(cell)
    except ValueError:
        raise IngestError(f"non-numeric cell {cell!r} at row {row}, column {col} ({header})") from None
    if not math.isfinite(value):
        raise IngestError(f"non-finite cell {cell!r} at row {row}, column {col} ({header})")
    return value


def load_csv(path, metadata=None) -> TimeSeriesSet:
    """Read ``time,<tag1>,<tag2>,...`` CSV data.

    The sample period is the median timestamp difference; every difference
    must lie within 0.1 % of it.  Rows are numbered from 1 for the header.
    """
    path = Path(path)
    if not path.exists():
        raise IngestError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestError(f"{path} is empty") from None
        if len(header) < 2:
            raise IngestError("header needs a time column and at least one tag")
        names = header[1:]
        seen = set()
        for n in names:
            if n in seen:
                raise IngestError(f"duplicate tag name {n!r}")
            seen.add(n)
        rows = []
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise IngestError(f"row {rownum} has {len(row)} cells, expected {len(header)}")
            rows.append([_parse_float(c, rownum, j + 1, header[j]) for j, c in enumerate(row)])
    if len(rows) < 2:
        raise IngestError("at least two samples are required")
    data = np.array(rows)
    t = data[:, 0]
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise IngestError("timestamps must be strictly increasing")
    period = float(np.median(dt))
    if np.any(np.abs(dt - period) > UNIFORM_RTOL * period):
        bad = int(np.argmax(np.abs(dt - period))) + 3
        raise IngestError(f"non-uniform timestamps (first offending row {bad})")
    ts = TimeSeriesSet(
        tags=tuple(TagMeta(n) for n in names),
        sample_period=period,
        values=data[:, 1:],
        start_time=float(t[0]),
    )
    if metadata is not None:
        if not isinstance(metadata, (list, tuple)):
            metadata = load_tag_metadata(metadata)
        ts = ts.with_metadata(metadata)
    return ts


def write_csv(ts: TimeSeriesSet, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time", *ts.names])
        for t, row in zip(ts.times, ts.values):
            writer.writerow([repr(float(t)), *(repr(float(v)) for v in row)])


def load_tag_metadata(path) -> list:
    with open(path, encoding="utf-8") as fh:
        try:
            records = json.load(fh)
        except json.JSONDecodeError as exc:
            raise IngestError(f"tag metadata is not valid JSON: {exc}") from None
    if not isinstance(records, list):
        raise IngestError("tag metadata must be a JSON array")
    metas = []
    for rec in records:
        try:
            metas.append(
                TagMeta(
                    name=rec["name"],
                    description=rec.get("description", ""),
                    kind=rec.get("kind", "PV"),
                    nominal=rec.get("nominal"),
                    low_limit=rec.get("low"),
                    high_limit=rec.get("high"),
                )
            )
        except KeyError as exc:
            raise IngestError(f"tag metadata record missing key {exc}") from None
    names = [m.name for m in metas]
    if len(set(names)) != len(names):
        raise IngestError("duplicate tag name in metadata")
    return metas


def write_tag_metadata(tags: Sequence[TagMeta], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([t.to_json() for t in tags], fh, indent=2)
        fh.write("\n")


def subsample(ts: TimeSeriesSet, factor: int) -> TimeSeriesSet:
    """Keep every ``factor``-th row starting at row 0."""
    if factor < 1:
        raise ParamError("factor must be a positive integer")
    if factor > ts.n_samples or math.ceil(ts.n_samples / factor) < 2:
        raise ParamError(f"factor {factor} leaves fewer than two of {ts.n_samples} samples")
    return replace(ts, values=ts.values[::factor], sample_period=ts.sample_period * factor)


def standardise(ts: TimeSeriesSet, constant_tolerance=DEFAULT_CONSTANT_TOLERANCE) -> TimeSeriesSet:
    """Zero-mean, unit sample-std columns.

    Columns whose std is below ``constant_tolerance`` are only mean-centred
    and listed in ``degenerate``.
    """
    if ts.scaling_state != "raw":
        raise ScalingError(f"cannot standardise data in state {ts.scaling_state!r}")
    x = ts.values
    mean = x.mean(axis=0)
    std = x.std(axis=0, ddof=1)
    flat = std < constant_tolerance
    out = (x - mean) / np.where(flat, 1.0, std)
    # second centring pass removes the rounding residue of the first
    out = out - out.mean(axis=0)
    return replace(
        ts,
        values=out,
        scaling_state="standardised",
        degenerate=tuple(n for n, f in zip(ts.names, flat) if f),
    )


def limit_scale(ts: TimeSeriesSet) -> TimeSeriesSet:
    """Scale each column as ``(x - nominal) / span`` using the tag limits."""
    if ts.scaling_state != "raw":
        raise ScalingError(f"cannot limit-scale data in state {ts.scaling_state!r}")
    nominal = np.empty(ts.n_tags)
    span = np.empty(ts.n_tags)
    for j, tag in enumerate(ts.tags):
        if not tag.has_limits:
            raise ScalingError(f"tag {tag.name!r} has no limits")
        span[j] = tag.span()
        if span[j] <= 0:
            raise ScalingError(f"tag {tag.name!r} has zero span (nominal on a limit)")
        nominal[j] = tag.nominal
    return replace(ts, values=(ts.values - nominal) / span, scaling_state="limit_scaled")


def filter_constant(ts: TimeSeriesSet, tolerance=DEFAULT_CONSTANT_TOLERANCE):
    """Drop columns with sample std <= tolerance.

    Returns ``(filtered_set, removed_names)``.
    """
    if tolerance < 0:
        raise ParamError("tolerance must be non-negative")
    std = ts.values.std(axis=0, ddof=1)
    keep = [n for n, s in zip(ts.names, std) if not s <= tolerance]
    removed = [n for n, s in zip(ts.names, std) if s <= tolerance]
    if not keep:
        raise EmptySetError("every column is constant")
    if not removed:
        return ts, []
    return ts.select(keep), removed


def window(ts: TimeSeriesSet, start_index: int, length: int) -> TimeSeriesSet:
    if start_index < 0 or length < 2 or start_index + length > ts.n_samples:
        raise ParamError(
            f"window [{start_index}, {start_index + length}) outside 0..{ts.n_samples}"
        )
    return replace(
        ts,
        values=ts.values[start_index : start_index + length],
        start_time=ts.start_time + start_index * ts.sample_period,
    )
