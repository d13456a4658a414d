"""Delay sweeps over every ordered tag pair and assembly of the weighted
information transfer network (ITN)."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import warnings
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .errors import EmptySetError, EstimateUnreliable, ParamError
from .estimators import EmbeddingSpec, EstimatorConfig
from .significance import (
    DirectionalityEvidence,
    SurrogatePolicy,
    directionality_test,
    rank_order_test,
)

MAX_RECOMMENDED_TAGS = 50
DEFAULT_DELAY_SPAN_SECONDS = 300.0
NOT_TESTED = None


def default_delays(sample_period: float, span_seconds: float = DEFAULT_DELAY_SPAN_SECONDS) -> tuple:
    """Every sample from 0 up to ``ceil(span_seconds / sample_period)``."""
    return tuple(range(0, int(math.ceil(span_seconds / sample_period - 1e-9)) + 1))


@dataclass(frozen=True)
class DelaySweepSpec:
    """What to compute for each ordered pair.

    ``surrogate_delays`` selects how surrogate values are obtained for the
    magnitude test: ``"sweep"`` takes each surrogate's maximum over the same
    delay grid (the same statistic as the actual value), ``"optimal"`` only
    evaluates surrogates at the actual value's optimising delay (cheaper,
    but anti-conservative when the grid has many delays).
    """

    delays: tuple = tuple(range(0, 11))
    bidirectional: bool = False
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    weight_kind: str = "simple"
    embedding: EmbeddingSpec = field(default_factory=EmbeddingSpec)
    surrogate_policy: Optional[SurrogatePolicy] = None
    directionality_mode: Optional[str] = None
    surrogate_delays: str = "sweep"

    def __post_init__(self):
        delays = tuple(int(d) for d in self.delays)
        if not delays:
            raise ParamError("delay grid is empty")
        if any(d < 0 for d in delays) or any(b <= a for a, b in zip(delays, delays[1:])):
            raise ParamError("delays must be non-negative and strictly increasing")
        object.__setattr__(self, "delays", delays)
        if self.weight_kind not in ("simple", "directional"):
            raise ParamError(f"unknown weight kind {self.weight_kind!r}")
        if self.directionality_mode not in (None, "corrected", "paper_literal"):
            raise ParamError(f"unknown directionality mode {self.directionality_mode!r}")
        if self.surrogate_delays not in ("sweep", "optimal"):
            raise ParamError(f"unknown surrogate delay rule {self.surrogate_delays!r}")
        if self.directionality_mode is not None and not self.bidirectional:
            object.__setattr__(self, "bidirectional", True)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["delays"] = list(self.delays)
        return d

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class EdgeResult:
    source: str
    target: str
    te_max: float
    delay_opt: int
    weight: float
    passed_magnitude: Optional[bool] = NOT_TESTED
    passed_direction: Optional[bool] = NOT_TESTED
    boundary_flag: bool = False
    te_backward: Optional[float] = None
    delay_backward: Optional[int] = None
    directional_te: Optional[float] = None


@dataclass(frozen=True)
class WeightedDigraph:
    """``weights[i, j]`` is the influence of source ``tags[j]`` on sink ``tags[i]``."""

    tags: tuple
    weights: np.ndarray
    delays: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (len(self.tags), len(self.tags)):
            raise ParamError("weight matrix shape does not match tag count")
        if np.any(w < 0) or np.any(np.diag(w) != 0):
            raise ParamError("weights must be non-negative with a zero diagonal")
        object.__setattr__(self, "tags", tuple(self.tags))
        object.__setattr__(self, "weights", w)


def sweep_delays(source, target, spec: DelaySweepSpec, seed: int = 0, backward: bool = False):
    """TE at every delay of the grid; failed delays are recorded as ``None``.

    ``backward=True`` lets the target lead the source by each delay.
    """
    sign = -1 if backward else 1
    profile = []
    for d in spec.delays:
        try:
            est = spec.estimator.estimate(source, target, spec.embedding.with_lag(sign * d), seed)
            profile.append((d, est.value_nats))
        except (EstimateUnreliable, ParamError):
            profile.append((d, None))
    return profile


def best_delay(profile):
    """``(psi, delta, boundary_flag)``; ties go to the smallest delay."""
    if not profile:
        raise ParamError("empty delay profile")
    points = [(d, v) for d, v in profile if v is not None]
    if not points:
        raise EstimateUnreliable("every delay of the sweep failed")
    psi = max(v for _, v in points)
    delta = min(d for d, v in points if v == psi)
    swept = [d for d, _ in profile]
    boundary = len(swept) > 1 and delta in (swept[0], swept[-1])
    return psi, delta, boundary


def pair_seed(seed: int, source: str, target: str) -> int:
    """Seed for one ordered pair, stable under tag filtering and reordering."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(source.encode()), zlib.crc32(target.encode())])
    return int(ss.generate_state(1)[0])


def _surrogate_values(source, target, spec, delta, seed):
    policy = spec.surrogate_policy
    values = []
    for i in range(policy.count):
        surrogate = policy.generate(source, i, base_seed=seed)
        if spec.surrogate_delays == "sweep":
            prof = [v for _, v in sweep_delays(surrogate, target, spec, seed) if v is not None]
            values.append(max(prof) if prof else -np.inf)
        else:
            try:
                est = spec.estimator.estimate(surrogate, target, spec.embedding.with_lag(delta), seed)
                values.append(est.value_nats)
            except (EstimateUnreliable, ParamError):
                values.append(-np.inf)
    return values


def analyse_pair(source, target, spec: DelaySweepSpec, seed: int = 0,
                 source_name: str = "source", target_name: str = "target") -> EdgeResult:
    """Sweep, test and weight the edge ``source -> target``.

    ``seed`` is used as-is; :func:`build_itn` passes :func:`pair_seed`.
    """
    source = np.asarray(source, dtype=float)
    target = np.asarray(target, dtype=float)
    psi, delta, boundary = best_delay(sweep_delays(source, target, spec, seed))

    passed_mag = NOT_TESTED
    if spec.surrogate_policy is not None:
        passed_mag = rank_order_test(psi, _surrogate_values(source, target, spec, delta, seed))

    psi_b = delta_b = None
    passed_dir = NOT_TESTED
    if spec.bidirectional:
        psi_b, delta_b, _ = best_delay(sweep_delays(source, target, spec, seed, backward=True))
        if spec.directionality_mode is not None:
            evidence = DirectionalityEvidence(psi, delta, psi_b, delta_b)
            passed_dir = directionality_test(evidence, spec.directionality_mode)

    directional = None
    if spec.weight_kind == "directional":
        reverse = spec.estimator.estimate(target, source, spec.embedding.with_lag(delta), seed)
        directional = psi - reverse.value_nats
        weight = max(directional, 0.0)
    else:
        weight = max(psi, 0.0)
    if passed_mag is False or passed_dir is False:
        weight = 0.0
    return EdgeResult(
        source=source_name,
        target=target_name,
        te_max=float(psi),
        delay_opt=int(delta),
        weight=float(weight),
        passed_magnitude=passed_mag,
        passed_direction=passed_dir,
        boundary_flag=bool(boundary),
        te_backward=None if psi_b is None else float(psi_b),
        delay_backward=delta_b,
        directional_te=None if directional is None else float(directional),
    )


def _pair_task(args):
    values, j, i, names, spec, seed = args
    return analyse_pair(
        values[:, j], values[:, i], spec, pair_seed(seed, names[j], names[i]), names[j], names[i]
    )


def run_tasks(fn, tasks, workers=None):
    """Map ``fn`` over ``tasks`` in order, in a process pool when workers > 1."""
    workers = (os.cpu_count() or 1) if workers is None else int(workers)
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def build_itn(ts, spec: DelaySweepSpec, seed: int = 0, workers=1):
    """Analyse every ordered pair of ``ts`` and assemble the weighted digraph.

    Returns ``(WeightedDigraph, edges)`` with edges ordered by source then
    target.  Results do not depend on ``workers``.
    """
    names = ts.names
    n = len(names)
    if n < 2:
        raise EmptySetError("need at least two tags to build a network")
    if n > MAX_RECOMMENDED_TAGS:
        warnings.warn(
            f"{n} tags: analyses are recommended to use at most {MAX_RECOMMENDED_TAGS}",
            stacklevel=2,
        )
    values = np.asarray(ts.values)
    tasks = [(values, j, i, names, spec, seed) for j in range(n) for i in range(n) if i != j]
    edges = run_tasks(_pair_task, tasks, workers)
    W = np.zeros((n, n))
    D = np.zeros((n, n), dtype=int)
    for e in edges:
        i, j = names.index(e.target), names.index(e.source)
        W[i, j] = e.weight
        D[i, j] = e.delay_opt
    meta = {
        "config_fingerprint": spec.fingerprint(),
        "seed": seed,
        "sample_period": ts.sample_period,
        "scaling_state": ts.scaling_state,
    }
    if spec.directionality_mode is not None:
        meta["directionality_mode"] = spec.directionality_mode
    return WeightedDigraph(tuple(names), W, D, meta), edges


EDGE_COLUMNS = [
    "source", "target", "te_max", "delay_samples", "delay_seconds", "weight",
    "passed_magnitude", "passed_direction", "boundary_flag",
]


def _flag(v):
    return "not_tested" if v is None else str(bool(v)).lower()


def _unflag(s):
    return None if s == "not_tested" else s == "true"


def write_edge_csv(path, edges, sample_period: float) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EDGE_COLUMNS)
        for e in edges:
            writer.writerow([
                e.source, e.target, repr(e.te_max), e.delay_opt, repr(e.delay_opt * sample_period),
                repr(e.weight), _flag(e.passed_magnitude), _flag(e.passed_direction),
                str(e.boundary_flag).lower(),
            ])


def read_edge_csv(path):
    """Parse an edge report into ``(tags, weights, delay_seconds, edges)``.

    Tags are ordered by first appearance.
    """
    edges, tags = [], []
    delay_s = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(EDGE_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ParamError(f"edge CSV lacks columns {sorted(missing)}")
        for row in reader:
            e = EdgeResult(
                source=row["source"], target=row["target"], te_max=float(row["te_max"]),
                delay_opt=int(row["delay_samples"]), weight=float(row["weight"]),
                passed_magnitude=_unflag(row["passed_magnitude"]),
                passed_direction=_unflag(row["passed_direction"]),
                boundary_flag=row["boundary_flag"] == "true",
            )
            edges.append(e)
            delay_s[(e.source, e.target)] = float(row["delay_seconds"])
            for name in (e.source, e.target):
                if name not in tags:
                    tags.append(name)
    n = len(tags)
    W = np.zeros((n, n))
    D = np.zeros((n, n))
    for e in edges:
        i, j = tags.index(e.target), tags.index(e.source)
        W[i, j] = e.weight
        D[i, j] = delay_s[(e.source, e.target)]
    return tags, W, D, edges
