"""Benchmark data with known information flow.

``simulate_var`` produces coupled linear autoregressive systems whose
transfer entropy has a closed-form linear-Gaussian value.
``simulate_mixing`` integrates a level/composition mixing tank under two PI
loops with a disturbance schedule: filtered noise on the B feed first,
set-point steps on the composition afterwards.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict, field
from typing import Optional, Sequence

import numpy as np

from .errors import ParamError, SimulationError
from .signals import TagMeta, TimeSeriesSet


@dataclass(frozen=True)
class ARConfig:
    self_coefficients: tuple = (0.5, 0.5)
    coupling: float = 0.5
    delay: int = 5
    noise_std: float = 1.0
    length: int = 5000
    rng_seed: int = 0
    burn_in: int = 1000


def _normalise_structure(structure, config):
    out = []
    for link in structure:
        if len(link) == 2:
            src, tgt = link
            coef, delay = config.coupling, config.delay
        else:
            src, tgt, coef, delay = link
        if delay < 1:
            raise ParamError("coupling delays must be >= 1")
        out.append((int(src), int(tgt), float(coef), int(delay)))
    return out


def _companion_radius(self_coefs, links, n_vars):
    order = max([1] + [d for *_, d in links])
    A = np.zeros((n_vars * order, n_vars * order))
    for v, a in enumerate(self_coefs):
        A[v, v] += a
    for src, tgt, coef, delay in links:
        A[tgt, (delay - 1) * n_vars + src] += coef
    A[n_vars:, :-n_vars] = np.eye(n_vars * (order - 1))
    return max(abs(np.linalg.eigvals(A)))


def _check_stationary(config, n_vars, links):
    if len(config.self_coefficients) != n_vars:
        raise ParamError(f"need {n_vars} self coefficients")
    for src, tgt, *_ in links:
        if not (0 <= src < n_vars and 0 <= tgt < n_vars) or src == tgt:
            raise ParamError(f"invalid coupling {src}->{tgt}")
    if _companion_radius(config.self_coefficients, links, n_vars) >= 1:
        raise ParamError("AR system is not stationary (spectral radius >= 1)")


def _var_tags(n_vars, names):
    names = names or (["x", "y", "z"][:n_vars] if n_vars <= 3 else [f"v{i}" for i in range(n_vars)])
    return tuple(TagMeta(n, f"AR variable {n}", "PV", 0.0, -5.0, 5.0) for n in names)


def _run_var(config, n_vars, segments, names):
    """``segments`` is a list of ``(start_index, links)`` after burn-in."""
    rng = np.random.default_rng(config.rng_seed)
    total = config.length + config.burn_in
    e = config.noise_std * rng.standard_normal((total, n_vars))
    a = np.asarray(config.self_coefficients, dtype=float)
    x = np.zeros((total, n_vars))
    starts = [config.burn_in + s for s, _ in segments]
    seg = 0
    for t in range(1, total):
        while seg + 1 < len(segments) and t >= starts[seg + 1]:
            seg += 1
        row = a * x[t - 1] + e[t]
        for src, tgt, coef, delay in segments[seg][1]:
            if t >= delay:
                row[tgt] += coef * x[t - delay, src]
        x[t] = row
    return TimeSeriesSet(_var_tags(n_vars, names), 1.0, x[config.burn_in:])


def simulate_var(config: ARConfig = ARConfig(), n_vars: int = 2, structure=((0, 1),), names=None) -> TimeSeriesSet:
    """Coupled AR(1) variables ``v_t = a_v v_{t-1} + sum c u_{t-d} + e_t``.

    ``structure`` lists couplings as ``(source, target)`` (using the
    config's coupling and delay) or ``(source, target, coef, delay)``.  The
    default is ``x -> y`` with ``c = 0.5`` at delay 5.
    """
    links = _normalise_structure(structure, config)
    _check_stationary(config, n_vars, links)
    return _run_var(config, n_vars, [(0, links)], names)


def simulate_switching_var(config: ARConfig, n_vars: int, first, second, switch_index: int, names=None) -> TimeSeriesSet:
    """One continuous AR run whose couplings change from ``first`` to
    ``second`` at sample ``switch_index``."""
    a, b = _normalise_structure(first, config), _normalise_structure(second, config)
    _check_stationary(config, n_vars, a)
    _check_stationary(config, n_vars, b)
    if not 0 < switch_index < config.length:
        raise ParamError("switch index must lie inside the series")
    return _run_var(config, n_vars, [(0, a), (switch_index, b)], names)


def linear_te_oracle(source, target, delay: int) -> float:
    """Linear-Gaussian TE source -> target at lag ``delay`` with one-sample
    histories: ``0.5 * ln(var_reduced / var_full)`` from least squares."""
    y = np.asarray(target, dtype=float)
    x = np.asarray(source, dtype=float)
    fut = y[delay:]
    own = y[delay - 1 : -1]
    src = x[: len(x) - delay]

    def resid_var(*cols):
        X = np.column_stack([np.ones(len(fut)), *cols])
        beta, *_ = np.linalg.lstsq(X, fut, rcond=None)
        return float(np.mean((fut - X @ beta) ** 2))

    return 0.5 * math.log(resid_var(own) / resid_var(own, src))


MIXING_TAGS = ("F_A", "F_B", "F_out", "h", "x", "x_sp", "h_sp")


@dataclass(frozen=True)
class MixingConfig:
    """Mixing tank scenario.  Flows in m3/h, level in m, time in hours.

    Level loop: PI on ``h - h_sp`` plus feedforward of the A feed adds a
    bias to the gravity outflow ``valve_coefficient * sqrt(h)``.
    Composition loop: PI on ``x_sp - x`` moves the A feed.
    """

    tank_area: float = 1.0
    x_A: float = 1.0
    x_B: float = 0.0
    valve_coefficient: float = 1.5
    F_A_nominal: float = 1.0
    F_B_nominal: float = 1.0
    h_sp: float = 1.0
    x_sp_nominal: float = 0.5
    level_gain: float = 16.0
    level_integral_time: float = 0.0625
    composition_gain: float = 8.0
    composition_integral_time: float = 0.25
    F_B_noise_std: float = 0.1
    F_B_noise_time_constant: float = 0.1
    F_B_noise_interval: tuple = (0.0, 20.0)
    x_sp_step_period: float = 2.0
    x_sp_step_magnitude: float = 0.05
    x_sp_interval: tuple = (20.0, 40.0)
    duration: float = 40.0
    step_seconds: float = 1.0
    disturbance_step_seconds: float = 10.0
    sample_seconds: float = 30.0
    rng_seed: int = 0
    limits: dict = field(default_factory=lambda: {
        "F_A": ["MV", "A feed flow", 1.0, 0.0, 2.5],
        "F_B": ["DV", "B feed flow", 1.0, 0.5, 1.5],
        "F_out": ["MV", "outlet flow", 2.0, 0.0, 4.0],
        "h": ["CV", "tank level", 1.0, 0.6, 1.6],
        "x": ["CV", "outlet A fraction", 0.5, 0.45, 0.55],
        "x_sp": ["SP", "composition set-point", 0.5, 0.45, 0.55],
        "h_sp": ["SP", "level set-point", 1.0, 0.6, 1.6],
    })

    def __post_init__(self):
        positive = (
            self.tank_area, self.valve_coefficient, self.F_A_nominal, self.F_B_nominal, self.h_sp,
            self.level_gain, self.level_integral_time, self.composition_gain,
            self.composition_integral_time, self.F_B_noise_time_constant, self.x_sp_step_period,
            self.duration, self.step_seconds, self.disturbance_step_seconds, self.sample_seconds,
        )
        if any(not v > 0 for v in positive):
            raise ParamError("physical parameters, gains and time steps must be positive")
        if not (0 <= self.x_A <= 1 and 0 <= self.x_B <= 1):
            raise ParamError("feed fractions must lie in [0, 1]")
        for lo, hi in (self.F_B_noise_interval, self.x_sp_interval):
            if not 0 <= lo <= hi <= self.duration:
                raise ParamError("disturbance intervals must lie within the run")
        ratio = self.disturbance_step_seconds / self.step_seconds
        sratio = self.sample_seconds / self.step_seconds
        if abs(ratio - round(ratio)) > 1e-9 or abs(sratio - round(sratio)) > 1e-9:
            raise ParamError("disturbance and sample periods must be multiples of the step")

    def to_json(self) -> dict:
        d = asdict(self)
        d["F_B_noise_interval"] = list(self.F_B_noise_interval)
        d["x_sp_interval"] = list(self.x_sp_interval)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "MixingConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ParamError(f"unknown scenario keys {sorted(unknown)}")
        d = dict(d)
        for key in ("F_B_noise_interval", "x_sp_interval"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    def tags(self) -> tuple:
        return tuple(
            TagMeta(name, desc, kind, nom, lo, hi)
            for name, (kind, desc, nom, lo, hi) in ((n, self.limits[n]) for n in MIXING_TAGS)
        )


def _disturbances(cfg: MixingConfig):
    """F_B noise and x_sp on the disturbance grid (independent of the
    integrator step)."""
    rng = np.random.default_rng(cfg.rng_seed)
    dt = cfg.disturbance_step_seconds / 3600.0
    n = int(round(cfg.duration / dt)) + 1
    t = np.arange(n) * dt
    phi = math.exp(-dt / cfg.F_B_noise_time_constant)
    shocks = rng.standard_normal(n) * cfg.F_B_noise_std * math.sqrt(1 - phi * phi)
    ou = np.empty(n)
    ou[0] = rng.standard_normal() * cfg.F_B_noise_std
    for k in range(1, n):
        ou[k] = phi * ou[k - 1] + shocks[k]
    lo, hi = cfg.F_B_noise_interval
    noise = np.where((t >= lo) & (t <= hi), ou, 0.0)

    n_steps = int(math.ceil(cfg.duration / cfg.x_sp_step_period)) + 1
    levels = cfg.x_sp_nominal + cfg.x_sp_step_magnitude * rng.uniform(-1, 1, n_steps)
    slo, shi = cfg.x_sp_interval
    idx = np.floor((t - slo) / cfg.x_sp_step_period).astype(int)
    x_sp = np.where((t > slo) & (t <= shi), levels[np.clip(idx, 0, n_steps - 1)], cfg.x_sp_nominal)
    return noise, x_sp


def simulate_mixing(config: MixingConfig = MixingConfig()) -> TimeSeriesSet:
    """Fixed-step RK4 integration of the mixing tank.

    States are level, composition and the two PI integrals; disturbances are
    held constant over each disturbance step.  Outputs are sampled every
    ``sample_seconds``.
    """
    c = config
    noise, x_sp_grid = _disturbances(c)
    noise, x_sp_grid = noise.tolist(), x_sp_grid.tolist()
    dt = c.step_seconds / 3600.0
    n_steps = int(round(c.duration * 3600.0 / c.step_seconds))
    per_dist = int(round(c.disturbance_step_seconds / c.step_seconds))
    per_sample = int(round(c.sample_seconds / c.step_seconds))
    # A feed that holds x_sp_nominal at the nominal B feed
    if c.x_A == c.x_sp_nominal:
        raise ParamError("x_sp_nominal must differ from the A feed fraction")
    F_A_ss = c.F_B_nominal * (c.x_sp_nominal - c.x_B) / (c.x_A - c.x_sp_nominal)
    if F_A_ss < 0:
        raise ParamError("x_sp_nominal is not reachable with these feeds")
    level_bias = F_A_ss + c.F_B_nominal - c.valve_coefficient * math.sqrt(c.h_sp)
    A, cv, h_sp = c.tank_area, c.valve_coefficient, c.h_sp
    Kl, Tl, Kx, Tx = c.level_gain, c.level_integral_time, c.composition_gain, c.composition_integral_time
    FA0, xA, xB = c.F_A_nominal, c.x_A, c.x_B

    def flows(h, x, i_l, i_x, F_B, x_sp):
        F_A = max(0.0, FA0 + Kx * ((x_sp - x) + i_x / Tx))
        u_l = Kl * ((h - h_sp) + i_l / Tl)
        gravity = cv * math.sqrt(h)
        F_out = gravity + u_l + (F_A - FA0)
        if F_out < 0.0:
            return F_A, 0.0, F_A + F_B
        # feedforward cancels F_A exactly in the level balance
        return F_A, F_out, FA0 + F_B - gravity - u_l

    def deriv(h, x, i_l, i_x, F_B, x_sp):
        if not h > 0:
            raise SimulationError(f"tank level fell to {h}")
        F_A, _, net = flows(h, x, i_l, i_x, F_B, x_sp)
        return net / A, (F_A * (xA - x) + F_B * (xB - x)) / (A * h), h - h_sp, x_sp - x

    # start at the nominal steady state with integrals holding the biases
    state = (h_sp, c.x_sp_nominal, level_bias * Tl / Kl, (F_A_ss - FA0) * Tx / Kx)
    n_out = n_steps // per_sample + 1
    out = np.empty((n_out, len(MIXING_TAGS)))

    def record(k, state, F_B, x_sp):
        F_A, F_out, _ = flows(*state, F_B, x_sp)
        out[k] = (F_A, F_B, F_out, state[0], state[1], x_sp, h_sp)

    half, sixth = 0.5 * dt, dt / 6.0
    for step in range(n_steps):
        g = step // per_dist
        F_B = c.F_B_nominal + noise[g]
        x_sp = x_sp_grid[g]
        if step % per_sample == 0:
            record(step // per_sample, state, F_B, x_sp)
        s0, s1, s2, s3 = state
        k1 = deriv(s0, s1, s2, s3, F_B, x_sp)
        k2 = deriv(s0 + half * k1[0], s1 + half * k1[1], s2 + half * k1[2], s3 + half * k1[3], F_B, x_sp)
        k3 = deriv(s0 + half * k2[0], s1 + half * k2[1], s2 + half * k2[2], s3 + half * k2[3], F_B, x_sp)
        k4 = deriv(s0 + dt * k3[0], s1 + dt * k3[1], s2 + dt * k3[2], s3 + dt * k3[3], F_B, x_sp)
        state = tuple(
            s + sixth * (a1 + 2 * a2 + 2 * a3 + a4)
            for s, a1, a2, a3, a4 in zip(state, k1, k2, k3, k4)
        )
        if not all(math.isfinite(v) for v in state):
            raise SimulationError(f"non-finite state at t={step * dt:.4f} h")
    g = min(n_steps // per_dist, len(noise) - 1)
    record(n_out - 1, state, c.F_B_nominal + float(noise[g]), float(x_sp_grid[g]))
    return TimeSeriesSet(c.tags(), c.sample_seconds, out)


def load_scenario(path) -> MixingConfig:
    with open(path, encoding="utf-8") as fh:
        return MixingConfig.from_json(json.load(fh))


def save_scenario(config: MixingConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_json(), fh, indent=2)
        fh.write("\n")
