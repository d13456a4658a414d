"""Multiple time region (MTR) ranking over overlapping rolling windows."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .engine import DelaySweepSpec, build_itn, run_tasks
from .errors import EmptySetError, ParamError
from .ranking import RankSpec, rank_graph
from .signals import DEFAULT_CONSTANT_TOLERANCE, filter_constant, window


@dataclass(frozen=True)
class WindowPlan:
    window_samples: int
    overlap_fraction: float
    starts: tuple

    @property
    def step(self) -> int:
        return int(round(self.window_samples * (1.0 - self.overlap_fraction)))

    def __len__(self):
        return len(self.starts)


def plan_windows(total_samples: int, window_samples: int, overlap_fraction: float) -> WindowPlan:
    """Evenly stepped windows from index 0 for as long as they fit.

    The step is ``round(window_samples * (1 - overlap_fraction))``.

    Examples
    --------
    >>> len(plan_windows(16800, 2400, 0.75))
    25
    """
    total_samples, window_samples = int(total_samples), int(window_samples)
    if window_samples < 2:
        raise ParamError("windows need at least two samples")
    if window_samples > total_samples:
        raise ParamError(f"window of {window_samples} samples exceeds the {total_samples} available")
    if not 0 <= overlap_fraction < 1:
        raise ParamError("overlap_fraction must lie in [0, 1)")
    step = int(round(window_samples * (1.0 - overlap_fraction)))
    if step < 1:
        raise ParamError("overlap leaves a window step below one sample")
    starts = tuple(range(0, total_samples - window_samples + 1, step))
    return WindowPlan(window_samples, float(overlap_fraction), starts)


@dataclass(frozen=True)
class MTRResult:
    """Per-window scores; ``absent[w, k]`` marks tags filtered out of window ``w``."""

    window_mid_times: np.ndarray
    tags: tuple
    scores: np.ndarray
    absent: np.ndarray
    degenerate: tuple
    fingerprint: str = ""
    metadata: dict = field(default_factory=dict)

    def argmax_tags(self) -> list:
        return [self.tags[k] for k in np.argmax(self.scores, axis=1)]


def _window_task(args):
    ts, start, length, sweep, rank, seed, tolerance = args
    names = ts.names
    piece = window(ts, start, length)
    row = np.zeros(len(names))
    absent = np.zeros(len(names), dtype=bool)
    try:
        kept, removed = filter_constant(piece, tolerance)
    except EmptySetError:
        return np.full(len(names), 1.0 / len(names)), np.ones(len(names), dtype=bool), True
    for name in removed:
        absent[names.index(name)] = True
    if kept.n_tags < 2:
        return np.full(len(names), 1.0 / len(names)), absent, True
    graph, _ = build_itn(kept, sweep, seed=seed, workers=1)
    bias = None
    if rank.reset_bias is not None:
        bias = tuple(rank.reset_bias[names.index(n)] for n in kept.names)
    sub = RankSpec(rank.m, bias, rank.katz_alpha_fraction)
    scores = rank_graph(graph, sub).scores
    for name, s in zip(kept.names, scores):
        row[names.index(name)] = s
    return row, absent, False


def window_seed(seed: int, index: int) -> int:
    """Seed of window ``index``; only the window index enters, so a window
    run on its own reproduces its row."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def mtr_rank(ts, plan: WindowPlan, sweep: DelaySweepSpec, rank: RankSpec = RankSpec(),
             seed: int = 0, workers=1, constant_tolerance=DEFAULT_CONSTANT_TOLERANCE) -> MTRResult:
    """Rank every window of ``plan``.

    Each window is constant-filtered, turned into a network and ranked by
    reset-mixed eigenvector centrality.  Filtered tags score 0 and are
    marked absent; windows keeping fewer than two tags get uniform scores
    and are listed in ``degenerate``.  Windows are spread over ``workers``
    processes; rows come back in window order.
    """
    if plan.starts and plan.starts[-1] + plan.window_samples > ts.n_samples:
        raise ParamError("window plan does not fit the series")
    if rank.reset_bias is not None and len(rank.reset_bias) != ts.n_tags:
        raise ParamError("reset bias length must match the tag count")
    tasks = [
        (ts, start, plan.window_samples, sweep, rank, window_seed(seed, k), constant_tolerance)
        for k, start in enumerate(plan.starts)
    ]
    rows = run_tasks(_window_task, tasks, workers)
    scores = np.array([r[0] for r in rows]).reshape(len(rows), ts.n_tags)
    absent = np.array([r[1] for r in rows]).reshape(len(rows), ts.n_tags)
    degenerate = tuple(k for k, r in enumerate(rows) if r[2])
    mids = ts.start_time + (np.asarray(plan.starts) + (plan.window_samples - 1) / 2.0) * ts.sample_period
    return MTRResult(
        window_mid_times=mids,
        tags=tuple(ts.names),
        scores=scores,
        absent=absent,
        degenerate=degenerate,
        fingerprint=sweep.fingerprint(),
        metadata={"seed": seed, "window_samples": plan.window_samples,
                  "overlap_fraction": plan.overlap_fraction},
    )


def export_mtr_csv(result: MTRResult, path) -> None:
    """``window_mid_time,<tag1>,...``, one row per window."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["window_mid_time", *result.tags])
        for t, row in zip(result.window_mid_times, result.scores):
            writer.writerow([repr(float(t)), *(repr(float(v)) for v in row)])


def read_mtr_csv(path):
    """Parse an MTR CSV into ``(mid_times, tags, scores)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "window_mid_time":
        raise ParamError("not an MTR CSV")
    data = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(len(rows) - 1, len(rows[0]))
    return data[:, 0], tuple(rows[0][1:]), data[:, 1:]
