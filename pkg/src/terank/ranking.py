"""Node ranking on an information transfer network.

Weight matrices follow the sinks-on-rows, sources-on-columns convention:
entry ``(i, j)`` is the influence of node ``j`` on node ``i``.  Ranking by
outgoing influence therefore works on the transpose ``W = M.T`` of the
row-stochastic mixed matrix ``M``.

Both centralities are computed by power iteration with repeated squaring:
each round applies the current matrix power to the iterate and then squares
the power, so ``r`` rounds cover ``2**r - 1`` plain iterations.  Plain
iteration at ``m = 0.999`` contracts by 0.999 per step and would need tens
of thousands of steps to reach the 1e-12 stopping tolerance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import NumericalError, ParamError

DEFAULT_MIXING = 0.999
DEFAULT_KATZ_FRACTION = 0.9
TOLERANCE = 1e-12
MAX_ROUNDS = 64


@dataclass(frozen=True)
class RankSpec:
    m: float = DEFAULT_MIXING
    reset_bias: Optional[tuple] = None
    katz_alpha_fraction: float = DEFAULT_KATZ_FRACTION

    def __post_init__(self):
        if not 0 < self.m < 1:
            raise ParamError("mixing factor m must lie in (0, 1)")
        if not 0 < self.katz_alpha_fraction < 1:
            raise ParamError("katz_alpha_fraction must lie in (0, 1)")
        if self.reset_bias is not None:
            q = np.asarray(self.reset_bias, dtype=float)
            if np.any(q < 0) or not np.any(q > 0):
                raise ParamError("reset bias must be non-negative and not all zero")
            object.__setattr__(self, "reset_bias", tuple(float(v) for v in q))

    def bias_vector(self, n: int) -> np.ndarray:
        """Reset bias normalised to sum to one (uniform when unset)."""
        if self.reset_bias is None:
            return np.full(n, 1.0 / n)
        q = np.asarray(self.reset_bias, dtype=float)
        if len(q) != n:
            raise ParamError(f"reset bias has {len(q)} entries for {n} nodes")
        return q / q.sum()


@dataclass(frozen=True)
class CentralityScores:
    scores: np.ndarray
    method: str
    lambda_max: float
    iterations: int
    residual: float = 0.0


def _weights(G) -> np.ndarray:
    return np.asarray(getattr(G, "weights", G), dtype=float)


def row_normalise(M) -> np.ndarray:
    """Divide every row by its sum; all-zero rows stay zero."""
    M = np.asarray(M, dtype=float)
    if np.any(M < 0):
        raise ParamError("row_normalise needs non-negative entries")
    sums = M.sum(axis=1, keepdims=True)
    return np.divide(M, sums, out=np.zeros_like(M), where=sums > 0)


def mix_with_reset(G, spec: RankSpec = RankSpec()) -> np.ndarray:
    """Row-stochastic ``M = m * rownorm(G) + (1 - m) * Q``, rows of Q equal to q.

    A final row normalisation repairs rows that were zero in ``G``; those
    rows end up equal to ``q``.
    """
    G = _weights(G)
    n = G.shape[0]
    if G.ndim != 2 or G.shape[1] != n or n < 2:
        raise ParamError("need a square weight matrix with at least two nodes")
    q = spec.bias_vector(n)
    M = spec.m * row_normalise(G) + (1.0 - spec.m) * np.tile(q, (n, 1))
    return row_normalise(M)


def _power_doubling(W, x, tol=TOLERANCE, max_rounds=MAX_ROUNDS):
    P = W.copy()
    for rounds in range(1, max_rounds + 1):
        x_new = P @ x
        total = x_new.sum()
        if total <= 0:
            return x_new, rounds, False
        x_new = x_new / total
        change = np.abs(x_new - x).sum()
        x = x_new
        if change < tol:
            return x, rounds, True
        P = P @ P
        P = P / np.abs(P).max()
    return x, max_rounds, False


def eigenvector_centrality(M, spec: RankSpec = RankSpec(), tol=TOLERANCE, max_rounds=MAX_ROUNDS) -> CentralityScores:
    """Stationary vector of ``W = M.T`` for a row-stochastic ``M``.

    Starts from the uniform vector.  Raises :class:`NumericalError` when the
    iteration does not settle or the residual ``||Wx - x||_1`` exceeds 1e-10.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    W = M.T
    x, rounds, converged = _power_doubling(W, np.full(n, 1.0 / n), tol, max_rounds)
    Wx = W @ x
    lam = float(Wx.sum() / x.sum())
    residual = float(np.abs(Wx - lam * x).sum())
    if not converged or residual >= 1e-10:
        raise NumericalError(f"power iteration did not converge (residual {residual:.3e})")
    x = np.clip(x, 0.0, None)
    return CentralityScores(x / x.sum(), "eigenvector", lam, rounds, residual)


def rank_graph(G, spec: RankSpec = RankSpec()) -> CentralityScores:
    """Reset-mixed eigenvector centrality of a weight matrix or digraph."""
    return eigenvector_centrality(mix_with_reset(G, spec), spec)


def is_acyclic(W) -> bool:
    """True when the non-negative matrix is nilpotent (no directed cycles)."""
    A = (np.asarray(W) > 0).astype(float)
    n = A.shape[0]
    P = A
    steps = 1
    while steps < n:
        P = np.minimum(P @ P, 1.0)
        steps *= 2
    return not np.any(P)


def spectral_radius(W, tol=TOLERANCE, max_rounds=MAX_ROUNDS) -> float:
    """Perron root of a non-negative matrix by power iteration on ``I + W/s``.

    The unit shift makes the Perron root strictly dominant even for periodic
    graphs; acyclic graphs return exactly 0.
    """
    W = np.asarray(W, dtype=float)
    if np.any(W < 0):
        raise ParamError("spectral_radius needs a non-negative matrix")
    if is_acyclic(W):
        return 0.0
    n = W.shape[0]
    s = W.sum(axis=1).max()
    B = np.eye(n) + W / s
    x, _, converged = _power_doubling(B, np.full(n, 1.0 / n), tol, max_rounds)
    if not converged:
        raise NumericalError("dominant eigenvalue search did not converge")
    return float((W @ x).sum() / x.sum())


def katz_centrality(W, spec: RankSpec = RankSpec(), tol=TOLERANCE, max_rounds=MAX_ROUNDS) -> CentralityScores:
    """Attenuated count of outgoing walks, ``c = sum_p (alpha W)^p 1``.

    ``W`` is oriented like ``M.T``: row ``k`` collects walks leaving node
    ``k``.  ``alpha = katz_alpha_fraction / lambda_max``; on acyclic graphs
    (``lambda_max = 0``) the fraction itself is used as attenuation.  A graph
    without walks gets uniform scores.
    """
    W = _weights(W)
    if np.any(W < 0):
        raise ParamError("katz_centrality needs a non-negative matrix")
    n = W.shape[0]
    lam = spectral_radius(W)
    alpha = spec.katz_alpha_fraction / lam if lam > 0 else spec.katz_alpha_fraction
    if lam > 0 and alpha * lam >= 1.0:
        raise ParamError("Katz attenuation at or beyond 1/lambda_max diverges")
    A = alpha * W
    S = A.copy()
    P = A.copy()
    c = S.sum(axis=1)
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        S = S + P @ S
        P = P @ P
        c_new = S.sum(axis=1)
        total = c_new.sum()
        change = np.abs(c_new - c).sum() / total if total > 0 else 0.0
        c = c_new
        if change < tol or not np.any(P):
            break
    else:
        raise NumericalError("Katz series did not converge")
    if c.sum() <= 0:
        return CentralityScores(np.full(n, 1.0 / n), "katz", lam, rounds)
    return CentralityScores(c / c.sum(), "katz", lam, rounds)


def write_ranking_csv(path, tags: Sequence, scores) -> None:
    """``rank,tag,description,kind,score,relative_score``, best first.

    ``tags`` are :class:`~terank.signals.TagMeta` records or plain names.
    """
    scores = np.asarray(getattr(scores, "scores", scores), dtype=float)
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    top = scores.max() if len(scores) and scores.max() > 0 else 1.0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "tag", "description", "kind", "score", "relative_score"])
        for rank, i in enumerate(order, start=1):
            tag = tags[i]
            name = getattr(tag, "name", tag)
            writer.writerow([
                rank, name, getattr(tag, "description", ""), getattr(tag, "kind", ""),
                repr(float(scores[i])), repr(float(scores[i] / top)),
            ])


def _gml_string(s: str) -> str:
    return '"' + str(s).replace("&", "&amp;").replace('"', "&quot;") + '"'


def write_gml(path, tags: Sequence[str], weights, scores=None, delays_seconds=None, percentile=None) -> int:
    """Write the network as GML; returns the number of edges written.

    Edge ``j -> i`` is emitted for every positive ``weights[i, j]``.  With
    ``percentile`` set, edges below that percentile of the positive weights
    are dropped.
    """
    W = _weights(weights)
    n = W.shape[0]
    if scores is not None:
        scores = np.asarray(getattr(scores, "scores", scores), dtype=float)
    positive = W[W > 0]
    cutoff = 0.0
    if percentile is not None and positive.size:
        if not 0 <= percentile <= 100:
            raise ParamError("percentile must lie in [0, 100]")
        cutoff = float(np.percentile(positive, percentile))
    lines = ["graph [", "  directed 1"]
    for k in range(n):
        lines += ["  node [", f"    id {k}", f"    label {_gml_string(tags[k])}"]
        if scores is not None:
            lines.append(f"    score {float(scores[k])!r}")
        lines.append("  ]")
    edges = 0
    for j in range(n):
        for i in range(n):
            w = W[i, j]
            if w > 0 and w >= cutoff:
                lines += ["  edge [", f"    source {j}", f"    target {i}", f"    weight {float(w)!r}"]
                if delays_seconds is not None:
                    lines.append(f"    delay {float(delays_seconds[i][j])!r}")
                lines.append("  ]")
                edges += 1
    lines.append("]")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return edges
