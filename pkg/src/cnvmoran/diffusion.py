"""Limiting diffusions of Phi and the two-dimensional toy example.

Square-root type SDEs are integrated with full-truncation Euler-Maruyama: the
coefficients are evaluated at max(Z, 0) and the reported path is max(Z, 0), so
zero is absorbing whenever drift and diffusion vanish there.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

SCHEME = "euler-maruyama-full-truncation"


@dataclass(frozen=True)
class DiffusionSpec:
    drift: Callable[[np.ndarray], np.ndarray]
    sigma2: Callable[[np.ndarray], np.ndarray]
    label: str
    dt: float = 1e-4
    boundary: str = "absorbing at 0"
    scheme: str = SCHEME


def make_limit_spec(case: str, alpha: float = 0.0, variant: str = "derived",
                    dt: float = 1e-4) -> DiffusionSpec:
    """Limit of Phi(X^N).

    case ``i``: dZ = alpha Z dt + sqrt(Z) dW.
    case ``ii``: dZ = sqrt(sigma^2(Z)) dW with sigma^2(z) = z(z+2) (``theorem``)
    or z(z+2)/2 (``derived``, the variance of the fixed-point law).
    """
    if case == "i":
        return DiffusionSpec(lambda z: alpha * z, lambda z: z,
                             f"case-i alpha={alpha}", dt)
    if case != "ii":
        raise ValueError(f"case must be 'i' or 'ii', got {case!r}")
    if alpha != 0.0:
        raise ValueError("the uniform case has no drift")
    if variant == "theorem":
        return DiffusionSpec(lambda z: 0.0 * z, lambda z: z * (z + 2.0),
                             "case-ii sigma2=z(z+2)", dt)
    if variant == "derived":
        return DiffusionSpec(lambda z: 0.0 * z, lambda z: 0.5 * z * (z + 2.0),
                             "case-ii sigma2=z(z+2)/2", dt)
    raise ValueError(f"variant must be 'theorem' or 'derived', got {variant!r}")


@dataclass
class DiffusionPath:
    """``values[p, i]`` is path p at ``times[i]``."""

    times: np.ndarray
    values: np.ndarray

    def at(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9:
            raise ValueError(f"time {t} was not recorded")
        return self.values[:, i]


def _record_plan(t_end: float, dt: float, record_times):
    n_steps = int(round(t_end / dt))
    if n_steps < 1 or abs(n_steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError(f"t_end={t_end} is not a whole number of steps dt={dt}")
    if record_times is None:
        steps = np.arange(n_steps + 1)
    else:
        steps = np.round(np.asarray(record_times, dtype=float) / dt).astype(np.int64)
        if np.any(np.abs(steps * dt - record_times) > 1e-9) or np.any(np.diff(steps) <= 0):
            raise ValueError("record times must be increasing multiples of dt")
        if steps[0] < 0 or steps[-1] > n_steps:
            raise ValueError("record times must lie in [0, t_end]")
    return n_steps, steps


def simulate_sde(spec: DiffusionSpec, z0, t_end: float, rng: np.random.Generator,
                 n_paths: int = 1, record_times=None) -> DiffusionPath:
    """Ensemble of ``n_paths`` full-truncation Euler-Maruyama paths from ``z0``."""
    if spec.dt > 1e-3:
        raise ValueError("dt must be <= 1e-3")
    z = np.broadcast_to(np.asarray(z0, dtype=float), (n_paths,)).copy()
    if np.any(z < 0):
        raise ValueError("z0 must be nonnegative")
    n_steps, steps = _record_plan(t_end, spec.dt, record_times)
    out = np.empty((n_paths, steps.size))
    sqdt = np.sqrt(spec.dt)
    slot = 0
    for i in range(n_steps + 1):
        if slot < steps.size and steps[slot] == i:
            out[:, slot] = np.maximum(z, 0.0)
            slot += 1
        if i == n_steps:
            break
        zp = np.maximum(z, 0.0)
        z = z + spec.drift(zp) * spec.dt + np.sqrt(spec.sigma2(zp)) * sqdt * rng.standard_normal(n_paths)
    return DiffusionPath(steps * spec.dt, out)


@dataclass
class ToyPaths:
    times: np.ndarray
    x: np.ndarray
    y: np.ndarray

    @property
    def phi(self) -> np.ndarray:
        return 0.5 * (self.x + self.y)

    @property
    def gap(self) -> np.ndarray:
        return self.x - self.y


def simulate_toy_diagonal(x0: float, y0: float, n: float, t_end: float,
                          rng: np.random.Generator, n_paths: int = 1,
                          dt: float | None = None, record_times=None) -> ToyPaths:
    """dX = N(Y - X) dt + dW1, dY = N(X - Y) dt + dW2 by Euler-Maruyama with dt <= 1/(20N)."""
    limit = 1.0 / (20.0 * n)
    if dt is None:
        dt = t_end / int(np.ceil(t_end / limit))
    if dt > limit * (1 + 1e-12):
        raise ValueError(f"dt={dt} exceeds 1/(20N)={limit}")
    n_steps, steps = _record_plan(t_end, dt, record_times)
    x = np.full(n_paths, float(x0))
    y = np.full(n_paths, float(y0))
    xs = np.empty((n_paths, steps.size))
    ys = np.empty((n_paths, steps.size))
    sqdt = np.sqrt(dt)
    slot = 0
    for i in range(n_steps + 1):
        if slot < steps.size and steps[slot] == i:
            xs[:, slot] = x
            ys[:, slot] = y
            slot += 1
        if i == n_steps:
            break
        pull = n * (y - x) * dt
        x, y = (x + pull + sqdt * rng.standard_normal(n_paths),
                y - pull + sqdt * rng.standard_normal(n_paths))
    return ToyPaths(steps * dt, xs, ys)


@dataclass
class EnsembleStats:
    mean: float
    variance: float
    mean_se: float
    variance_se: float
    histogram: np.ndarray
    bin_edges: np.ndarray


def ensemble_stats(samples, bins=20) -> EnsembleStats:
    """Mean, variance (with standard errors) and histogram of one time-marginal.

    The variance standard error uses the sample fourth central moment.
    """
    v = np.asarray(samples, dtype=float)
    n = v.size
    mean = float(v.mean())
    var = float(v.var(ddof=1)) if n > 1 else 0.0
    m4 = float(np.mean((v - mean) ** 4))
    var_se = float(np.sqrt(max(m4 - var * var, 0.0) / n)) if n > 1 else 0.0
    hist, edges = np.histogram(v, bins=bins)
    return EnsembleStats(mean, var, float(np.sqrt(var / n)) if n > 1 else 0.0, var_se, hist, edges)
