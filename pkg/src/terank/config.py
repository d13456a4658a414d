"""Run configuration: one JSON file per run, unknown keys rejected.

Relative paths inside a config file resolve against the file's directory.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, asdict, fields, replace
from pathlib import Path
from typing import Optional

from .engine import DelaySweepSpec, default_delays
from .errors import ConfigError, ParamError
from .estimators import EmbeddingSpec, EstimatorConfig, auto_embed
from .mtr import plan_windows
from .ranking import RankSpec
from .significance import SurrogatePolicy


@dataclass(frozen=True)
class EstimatorSection:
    kind: str = "ksg"
    k_neighbours: int = 4
    bandwidth: float = 0.3
    theiler_window: int = 10
    noise_amplitude: float = 1e-8


@dataclass(frozen=True)
class EmbeddingSection:
    k_target: int = 1
    l_source: int = 1
    tau: int = 1
    auto: bool = False
    max_k: int = 4
    max_tau: int = 4


@dataclass(frozen=True)
class DelaySection:
    """Either an explicit ``samples`` list or ``0..ceil(max_seconds / period)``
    in steps of ``step`` starting at ``start``."""

    samples: Optional[tuple] = None
    max_seconds: float = 300.0
    start: int = 0
    step: int = 1


@dataclass(frozen=True)
class SurrogateSection:
    method: str = "iaaft"
    alpha: float = 0.05
    count: Optional[int] = None
    iaaft_iterations: int = 100
    delays: str = "sweep"


@dataclass(frozen=True)
class RankSection:
    m: float = 0.999
    reset_bias: Optional[dict] = None
    katz_alpha_fraction: float = 0.9
    method: str = "eigenvector"


@dataclass(frozen=True)
class WindowSection:
    """``start``/``length`` pick the single ``analyse`` window (``start``
    null means the final ``length`` samples, ``length`` null the whole set);
    ``mtr_samples``/``overlap`` define the rolling plan."""

    start: Optional[int] = None
    length: Optional[int] = None
    mtr_samples: Optional[int] = None
    overlap: float = 0.75


_SECTIONS = {
    "estimator": EstimatorSection,
    "embedding": EmbeddingSection,
    "delays": DelaySection,
    "surrogates": SurrogateSection,
    "rank": RankSection,
    "window": WindowSection,
}


@dataclass(frozen=True)
class RunConfig:
    data: str
    metadata: Optional[str] = None
    scaling: str = "standardise"
    subsample: int = 1
    constant_tolerance: float = 1e-12
    estimator: EstimatorSection = field(default_factory=EstimatorSection)
    embedding: EmbeddingSection = field(default_factory=EmbeddingSection)
    delays: DelaySection = field(default_factory=DelaySection)
    surrogates: Optional[SurrogateSection] = None
    directionality: Optional[str] = None
    weight_kind: str = "simple"
    rank: RankSection = field(default_factory=RankSection)
    window: WindowSection = field(default_factory=WindowSection)
    output_dir: str = "terank_out"
    seed: int = 0
    workers: Optional[int] = None

    def __post_init__(self):
        if self.scaling not in ("standardise", "limit_scale", "none"):
            raise ConfigError(f"unknown scaling {self.scaling!r}")
        if self.directionality not in (None, "corrected", "paper_literal"):
            raise ConfigError(f"unknown directionality mode {self.directionality!r}")
        if self.weight_kind not in ("simple", "directional"):
            raise ConfigError(f"unknown weight kind {self.weight_kind!r}")
        if self.rank.method not in ("eigenvector", "katz"):
            raise ConfigError(f"unknown ranking method {self.rank.method!r}")
        if self.estimator.kind not in ("ksg", "kernel"):
            raise ConfigError(f"unknown estimator {self.estimator.kind!r}")
        if int(self.subsample) < 1:
            raise ConfigError("subsample must be a positive integer")

    # ----- (de)serialisation -------------------------------------------------

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        _reject_unknown(d, {f.name for f in fields(cls)}, "config")
        if "data" not in d:
            raise ConfigError("config needs a 'data' path")
        kwargs = dict(d)
        for key, section in _SECTIONS.items():
            if key in kwargs and kwargs[key] is not None:
                sub = kwargs[key]
                if not isinstance(sub, dict):
                    raise ConfigError(f"'{key}' must be an object")
                _reject_unknown(sub, {f.name for f in fields(section)}, key)
                if key == "delays" and sub.get("samples") is not None:
                    sub = {**sub, "samples": tuple(sub["samples"])}
                try:
                    kwargs[key] = section(**sub)
                except TypeError as exc:
                    raise ConfigError(f"bad '{key}' section: {exc}") from None
            elif key in kwargs and key != "surrogates":
                raise ConfigError(f"'{key}' may not be null")
        if base_dir is not None:
            base = Path(base_dir)
            for key in ("data", "metadata", "output_dir"):
                value = kwargs.get(key)
                if value is not None and not Path(value).is_absolute():
                    kwargs[key] = str(base / value)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            with open(path, encoding="utf-8") as fh:
                d = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"no such config file: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(d, base_dir=path.parent)

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.delays.samples is not None:
            d["delays"]["samples"] = list(self.delays.samples)
        return d

    def with_overrides(self, **overrides) -> "RunConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    # ----- translation into library objects ---------------------------------

    def estimator_config(self) -> EstimatorConfig:
        return EstimatorConfig(**asdict(self.estimator))

    def delay_grid(self, sample_period: float) -> tuple:
        d = self.delays
        if d.samples is not None:
            return tuple(int(v) for v in d.samples)
        if d.step < 1 or d.start < 0:
            raise ConfigError("delay start must be >= 0 and step >= 1")
        top = default_delays(sample_period, d.max_seconds)[-1]
        return tuple(range(d.start, top + 1, d.step))

    def surrogate_policy(self) -> Optional[SurrogatePolicy]:
        s = self.surrogates
        if s is None:
            return None
        extra = {"method": s.method, "iaaft_iterations": s.iaaft_iterations, "rng_seed": 0}
        if s.count is None:
            return SurrogatePolicy.from_alpha(s.alpha, **extra)
        return SurrogatePolicy(count=s.count, alpha=s.alpha, **extra)

    def embedding_spec(self, ts=None) -> EmbeddingSpec:
        e = self.embedding
        if not e.auto:
            return EmbeddingSpec(e.k_target, e.l_source, e.tau)
        if ts is None:
            raise ConfigError("automatic embedding needs the data")
        return EmbeddingSpec(*_consensus_embedding(ts, e, self.estimator_config(), self.seed), e.l_source)

    def sweep_spec(self, ts) -> DelaySweepSpec:
        try:
            return DelaySweepSpec(
                delays=self.delay_grid(ts.sample_period),
                estimator=self.estimator_config(),
                weight_kind=self.weight_kind,
                embedding=self.embedding_spec(ts),
                surrogate_policy=self.surrogate_policy(),
                directionality_mode=self.directionality,
                surrogate_delays=self.surrogates.delays if self.surrogates else "sweep",
            )
        except ParamError as exc:
            raise ConfigError(str(exc)) from None

    def rank_spec(self, tags) -> RankSpec:
        r = self.rank
        bias = None
        if r.reset_bias is not None:
            unknown = set(r.reset_bias) - set(tags)
            if unknown:
                raise ConfigError(f"reset bias names unknown tags {sorted(unknown)}")
            bias = tuple(float(r.reset_bias.get(t, 1.0)) for t in tags)
        return RankSpec(r.m, bias, r.katz_alpha_fraction)

    def window_plan(self, n_samples: int):
        w = self.window
        if w.mtr_samples is None:
            raise ConfigError("window.mtr_samples is required for mtr")
        return plan_windows(n_samples, w.mtr_samples, w.overlap)

    def analysis_slice(self, n_samples: int) -> tuple:
        w = self.window
        length = n_samples if w.length is None else int(w.length)
        start = n_samples - length if w.start is None else int(w.start)
        return start, length


def _reject_unknown(d, known, where):
    unknown = set(d) - set(known)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _consensus_embedding(ts, section, config, seed):
    """Most frequent per-tag choice of ``(k, tau)``; ties go to the smaller."""
    votes = Counter()
    for name in ts.names:
        res = auto_embed(
            ts.column(name), range(1, section.max_k + 1), range(1, section.max_tau + 1),
            config, rng_seed=seed,
        )
        votes[(res.k_target, res.tau)] += 1
    top = max(votes.values())
    return min(key for key, v in votes.items() if v == top)
