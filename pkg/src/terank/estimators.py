"""Transfer entropy between two scalar series.

Two estimators share the same time alignment.  For a source ``y`` and a
target ``x`` with prediction lag ``h`` every evaluation point ``i`` uses

* the target sample ``x[i + h]`` (the "future"),
* the target history of ``k_target`` samples ending at ``x[i + h - 1]``,
* the source history of ``l_source`` samples ending at ``y[i]``,

with history samples spaced ``tau`` apart.  Negative ``h`` lets the target
lead the source, which is what the backward delay sweep uses.

``te_kernel`` averages log ratios of box-kernel plug-in conditionals.
``te_ksg`` is the Kraskov-Stoegbauer-Grassberger conditional mutual
information estimator (algorithm 1 counting, max-norm).  Both exclude
temporally adjacent points from neighbour searches (Theiler window).
All values are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np
from scipy.special import digamma

from ._neighbours import count_within, knn_distance
from .errors import EstimateUnreliable, ParamError

DEFAULT_BANDWIDTH = 0.3
DEFAULT_THEILER = 10
DEFAULT_K_NEIGHBOURS = 4
DEFAULT_NOISE = 1e-8


@dataclass(frozen=True)
class EmbeddingSpec:
    k_target: int = 1
    l_source: int = 1
    tau: int = 1
    h: int = 1

    def __post_init__(self):
        if self.k_target < 1 or self.l_source < 1 or self.tau < 1:
            raise ParamError("embedding dimensions and tau must be >= 1")

    def with_lag(self, h: int) -> "EmbeddingSpec":
        return EmbeddingSpec(self.k_target, self.l_source, self.tau, int(h))

    @property
    def history_length(self) -> int:
        return (max(self.k_target, self.l_source) - 1) * self.tau + abs(self.h) + 1


@dataclass(frozen=True)
class TEEstimate:
    value_nats: float
    estimator: str
    n_effective: int
    params: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value_nats)


@dataclass(frozen=True)
class EstimatorConfig:
    """Estimator choice plus its parameters, as carried by the engine config."""

    kind: str = "ksg"
    k_neighbours: int = DEFAULT_K_NEIGHBOURS
    bandwidth: float = DEFAULT_BANDWIDTH
    theiler_window: int = DEFAULT_THEILER
    noise_amplitude: float = DEFAULT_NOISE

    def __post_init__(self):
        if self.kind not in ("kernel", "ksg"):
            raise ParamError(f"unknown estimator {self.kind!r}")
        if self.bandwidth <= 0:
            raise ParamError("bandwidth must be positive")
        if self.k_neighbours < 1:
            raise ParamError("k_neighbours must be >= 1")
        if self.theiler_window < 0 or self.noise_amplitude < 0:
            raise ParamError("theiler_window and noise_amplitude must be non-negative")

    def estimate(self, source, target, spec: EmbeddingSpec, seed: int = 0) -> TEEstimate:
        if self.kind == "kernel":
            return te_kernel(source, target, spec, self.bandwidth, self.theiler_window)
        return te_ksg(
            source, target, spec, self.k_neighbours, self.theiler_window,
            self.noise_amplitude, seed,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def embed(series, dim: int, tau: int, end_offset: int = 0) -> np.ndarray:
    """Delay-embed ``series``: row for time i is ``[x[i-(dim-1)tau], ..., x[i]]``.

    Rows run over i = (dim-1)*tau .. N-1-end_offset, so two calls with the
    same ``(dim - 1) * tau`` and ``end_offset`` give time-aligned rows.
    """
    x = np.asarray(series, dtype=float)
    if dim < 1 or tau < 1 or end_offset < 0:
        raise ParamError("dim and tau must be >= 1, end_offset >= 0")
    first = (dim - 1) * tau
    last = len(x) - 1 - end_offset
    if last < first:
        raise ParamError(f"series of length {len(x)} too short for dim={dim}, tau={tau}")
    ends = np.arange(first, last + 1)
    return x[_history_index(ends, dim, tau)]


def _history_index(ends, dim, tau):
    return ends[:, None] - tau * np.arange(dim - 1, -1, -1)[None, :]


def te_arrays(source, target, spec: EmbeddingSpec):
    """Aligned ``(future, target_past, source_past)`` matrices for ``spec``."""
    y = np.asarray(source, dtype=float)
    x = np.asarray(target, dtype=float)
    if y.ndim != 1 or x.ndim != 1 or len(x) != len(y):
        raise ParamError("source and target must be 1-D series of equal length")
    n = len(x)
    k, l, tau, h = spec.k_target, spec.l_source, spec.tau, spec.h
    i_min = max((l - 1) * tau, (k - 1) * tau + 1 - h, -h)
    i_max = min(n - 1, n - 1 - h)
    if i_max - i_min + 1 < 2:
        raise ParamError(f"series of length {n} too short for {spec}")
    ends = np.arange(i_min, i_max + 1)
    future = x[ends + h][:, None]
    target_past = x[_history_index(ends + h - 1, k, tau)]
    source_past = y[_history_index(ends, l, tau)]
    return future, target_past, source_past


def ksg_cmi(x, y, z=None, k_neighbours=DEFAULT_K_NEIGHBOURS, theiler_window=0):
    """KSG conditional mutual information I(x; y | z) in nats.

    ``x``, ``y``, ``z`` are ``(n, d)`` arrays of time-ordered rows; ``z=None``
    gives plain mutual information.  Returns ``(value, n_points)``.
    """
    x = np.asarray(x, dtype=float).reshape(len(x), -1)
    y = np.asarray(y, dtype=float).reshape(len(y), -1)
    n = len(x)
    z = np.empty((n, 0)) if z is None else np.asarray(z, dtype=float).reshape(n, -1)
    w = int(theiler_window)
    if n - (2 * w + 1) < k_neighbours:
        raise EstimateUnreliable(f"{n} points too few for k={k_neighbours}, theiler={w}")
    eps = knn_distance(np.hstack([x, y, z]), k_neighbours, w)
    if not np.all(np.isfinite(eps)):
        raise EstimateUnreliable("neighbour search exhausted by excluded points")
    if np.any(eps <= 0):
        raise EstimateUnreliable("duplicate points: zero neighbour distance")
    n_xz = count_within(np.hstack([x, z]), eps, w, strict=True)
    n_yz = count_within(np.hstack([y, z]), eps, w, strict=True)
    n_z = count_within(z, eps, w, strict=True)
    value = digamma(k_neighbours) + np.mean(
        digamma(n_z + 1) - digamma(n_xz + 1) - digamma(n_yz + 1)
    )
    return float(value), n


def te_ksg(
    source,
    target,
    spec: EmbeddingSpec,
    k_neighbours: int = DEFAULT_K_NEIGHBOURS,
    theiler_window: int = DEFAULT_THEILER,
    noise_amplitude: float = DEFAULT_NOISE,
    rng_seed: int = 0,
) -> TEEstimate:
    """KSG transfer entropy source -> target.

    Uniform noise on ``[-noise_amplitude, noise_amplitude]`` is added to both
    series (source first) to break ties; the draw depends only on
    ``rng_seed`` so repeated calls are bit-identical.
    """
    y = np.asarray(source, dtype=float)
    x = np.asarray(target, dtype=float)
    if noise_amplitude > 0:
        rng = np.random.default_rng(rng_seed)
        y = y + rng.uniform(-noise_amplitude, noise_amplitude, size=y.shape)
        x = x + rng.uniform(-noise_amplitude, noise_amplitude, size=x.shape)
    future, tpast, spast = te_arrays(y, x, spec)
    value, n = ksg_cmi(future, spast, tpast, k_neighbours, theiler_window)
    return TEEstimate(
        value_nats=value,
        estimator="ksg",
        n_effective=n,
        params={
            "k_neighbours": k_neighbours,
            "theiler_window": theiler_window,
            "noise_amplitude": noise_amplitude,
            "rng_seed": rng_seed,
        },
    )


def te_kernel(
    source,
    target,
    spec: EmbeddingSpec,
    bandwidth: float = DEFAULT_BANDWIDTH,
    theiler_window: int = DEFAULT_THEILER,
) -> TEEstimate:
    """Box-kernel transfer entropy source -> target.

    Each point contributes
    ``log(C(x+, xp, yp) * C(xp) / (C(xp, yp) * C(x+, xp)))`` where ``C``
    counts points inside a max-norm box of half-width ``bandwidth``.  Points
    within ``theiler_window`` samples of the evaluation point, the point
    itself included, are left out of every count.  Evaluation points with
    an empty count are skipped and lower ``n_effective``.
    """
    if bandwidth <= 0:
        raise ParamError("bandwidth must be positive")
    future, tpast, spast = te_arrays(source, target, spec)
    n = len(future)
    r = np.full(n, float(bandwidth))
    w = int(theiler_window)

    c_joint = count_within(np.hstack([future, tpast, spast]), r, w, strict=False)
    c_fz = count_within(np.hstack([future, tpast]), r, w, strict=False)
    c_yz = count_within(np.hstack([spast, tpast]), r, w, strict=False)
    c_z = count_within(tpast, r, w, strict=False)
    ok = (c_joint > 0) & (c_fz > 0) & (c_yz > 0) & (c_z > 0)
    n_eff = int(ok.sum())
    if n_eff < 0.5 * n:
        raise EstimateUnreliable(f"only {n_eff} of {n} points usable")
    local = np.log(c_joint[ok]) + np.log(c_z[ok]) - np.log(c_yz[ok]) - np.log(c_fz[ok])
    return TEEstimate(
        value_nats=float(local.mean()),
        estimator="kernel",
        n_effective=n_eff,
        params={"bandwidth": float(bandwidth), "theiler_window": w},
    )


def te_directional(source, target, spec: EmbeddingSpec, config: EstimatorConfig, seed: int = 0) -> float:
    """Forward minus reverse transfer entropy at the same embedding and lag."""
    forward = config.estimate(source, target, spec, seed)
    reverse = config.estimate(target, source, spec, seed)
    return forward.value_nats - reverse.value_nats


@dataclass(frozen=True)
class AutoEmbedResult:
    k_target: int
    tau: int
    ais: float
    boundary_flag: bool
    scores: dict


def _ais_terms(series, k, tau, k_neighbours, theiler_window, n_surrogates, noise_amplitude, rng_seed):
    rng = np.random.default_rng(rng_seed)
    x = np.asarray(series, dtype=float)
    if noise_amplitude > 0:
        x = x + rng.uniform(-noise_amplitude, noise_amplitude, size=x.shape)
    past = embed(x, k, tau, end_offset=1)
    nxt = x[(k - 1) * tau + 1 :][:, None]
    mi, _ = ksg_cmi(nxt, past, None, k_neighbours, theiler_window)
    null = [
        ksg_cmi(rng.permutation(nxt), past, None, k_neighbours, theiler_window)[0]
        for _ in range(n_surrogates)
    ]
    spread = float(np.std(null, ddof=1)) if n_surrogates > 1 else 0.0
    return mi - float(np.mean(null)), spread


def active_information_storage(series, k, tau, k_neighbours=DEFAULT_K_NEIGHBOURS,
                               theiler_window=DEFAULT_THEILER, n_surrogates=5,
                               noise_amplitude=DEFAULT_NOISE, rng_seed=0):
    """Bias-corrected AIS: KSG MI between the next sample and the embedded
    past, minus the mean MI over surrogates with the next sample shuffled."""
    return _ais_terms(series, k, tau, k_neighbours, theiler_window, n_surrogates,
                      noise_amplitude, rng_seed)[0]


def auto_embed(
    target,
    candidate_ks=range(1, 5),
    candidate_taus=range(1, 5),
    config: Optional[EstimatorConfig] = None,
    tolerance: float = 0.01,
    rng_seed: int = 0,
    spread_factor: float = 3.0,
) -> AutoEmbedResult:
    """Grid search for the target embedding maximising corrected AIS.

    Candidates are visited in order of increasing ``k`` then ``tau``; the
    first whose score is within a margin of the best wins, so estimator
    noise does not promote needlessly long histories.  The margin is the
    larger of ``tolerance`` and ``spread_factor`` times the pooled standard
    deviation of the shuffled-surrogate MIs.  ``k = 1`` makes ``tau``
    irrelevant and is evaluated once.
    """
    config = config or EstimatorConfig()
    ks, taus = sorted(candidate_ks), sorted(candidate_taus)
    if not ks or not taus:
        raise ParamError("candidate ranges must be non-empty")
    scores, spreads = {}, []
    for k in ks:
        for tau in taus:
            if k == 1 and tau != taus[0]:
                continue
            try:
                score, spread = _ais_terms(
                    target, k, tau, config.k_neighbours, config.theiler_window, 5,
                    config.noise_amplitude, rng_seed,
                )
            except (EstimateUnreliable, ParamError):
                continue
            scores[(k, tau)] = score
            spreads.append(spread)
    if not scores:
        raise EstimateUnreliable("no embedding candidate could be evaluated")
    margin = max(tolerance, spread_factor * float(np.sqrt(np.mean(np.square(spreads)))))
    best = max(scores.values())
    k, tau = next(key for key in sorted(scores) if scores[key] >= best - margin)
    boundary = (len(ks) > 1 and k == ks[-1]) or (k > 1 and len(taus) > 1 and tau == taus[-1])
    return AutoEmbedResult(k, tau, scores[(k, tau)], boundary, scores)
