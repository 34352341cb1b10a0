"""Statistics of population states and trajectories.

Every state-level function accepts either a :class:`~cnvmoran.population.PopulationState`
or a probability vector indexed by copy number.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

MOMENT_NAMES = ("rho1", "rho1^2", "rho2", "rho1^3", "rho2*rho1", "rho3")


def as_distribution(x) -> np.ndarray:
    """Probability vector x_k of a state or distribution-like object."""
    if hasattr(x, "frequencies"):
        return x.frequencies
    if hasattr(x, "probs"):
        return np.asarray(x.probs, dtype=float)
    return np.asarray(x, dtype=float)


def falling_factorial(k, n: int):
    out = np.ones_like(np.asarray(k, dtype=float))
    for i in range(n):
        out = out * (np.asarray(k) - i)
    return out


def factorial_moment(x, n: int) -> float:
    """rho_n(x) = sum_k k(k-1)...(k-n+1) x_k."""
    p = as_distribution(x)
    return float(np.sum(falling_factorial(np.arange(p.size), n) * p))


def mean_phi(x) -> float:
    """Phi(x) = rho_1(x), the mean copy number."""
    return factorial_moment(x, 1)


def variance(x) -> float:
    r1 = factorial_moment(x, 1)
    return factorial_moment(x, 2) + r1 - r1 * r1


def empirical_pgf(x, s: float) -> float:
    """psi_s(x) = sum_n x_n (1 - s)^n."""
    if s == 0.0 and hasattr(x, "counts"):
        return 1.0
    p = as_distribution(x)
    if s == 0.0:
        return float(p.sum())
    return float(p @ (1.0 - s) ** np.arange(p.size))


@dataclass(frozen=True)
class MomentVector:
    """(rho1, rho1^2, rho2, rho1^3, rho2*rho1, rho3), the order used by the moment matrices."""

    entries: tuple[float, float, float, float, float, float]

    @classmethod
    def from_base(cls, rho1: float, rho2: float, rho3: float) -> "MomentVector":
        return cls((rho1, rho1 * rho1, rho2, rho1 * rho1 * rho1, rho2 * rho1, rho3))

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=float)

    def as_dict(self) -> dict:
        return dict(zip(MOMENT_NAMES, self.entries))

    def __getitem__(self, i):
        return self.entries[i]


def moment_vector(x) -> MomentVector:
    return MomentVector.from_base(factorial_moment(x, 1), factorial_moment(x, 2),
                                  factorial_moment(x, 3))


def moment_array_from_sums(sums: np.ndarray, n_individuals: int) -> np.ndarray:
    """Moment vectors (last axis of length 6) from raw falling-factorial sums."""
    r = np.asarray(sums, dtype=float) / n_individuals
    r1, r2, r3 = r[..., 0], r[..., 1], r[..., 2]
    return np.stack([r1, r1 * r1, r2, r1 * r1 * r1, r2 * r1, r3], axis=-1)


@dataclass
class Trajectory:
    """Observations at strictly increasing times; ``values`` maps name -> array."""

    times: np.ndarray
    values: dict = field(default_factory=dict)
    events: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1:
            raise ValueError("times must be one-dimensional")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        for name, v in self.values.items():
            if len(v) != self.times.size:
                raise ValueError(f"observable {name!r} has {len(v)} entries for {self.times.size} times")

    def __getitem__(self, name):
        return self.values[name]

    def write_csv(self, path, digits: int = 17) -> None:
        names = list(self.values)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time", *names])
            for i, t in enumerate(self.times):
                w.writerow([format_float(t, digits),
                            *(format_float(self.values[n][i], digits) for n in names)])


def format_float(v, digits: int = 17) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.{digits}g}"


@dataclass
class OccupationMeasure:
    """Discretised e^{-s}-weighted time-value occupation measure."""

    time_bin_edges: np.ndarray
    value_bin_edges: np.ndarray
    weights: np.ndarray

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def value_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=0)

    def write_csv(self, path, digits: int = 17) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t_lo", "t_hi", "v_lo", "v_hi", "weight"])
            te, ve = self.time_bin_edges, self.value_bin_edges
            for i in range(te.size - 1):
                for j in range(ve.size - 1):
                    w.writerow([format_float(te[i], digits), format_float(te[i + 1], digits),
                                format_float(ve[j], digits), format_float(ve[j + 1], digits),
                                format_float(self.weights[i, j], digits)])


def _discount_mass(a, b):
    """int_a^b e^{-s} ds, written to keep precision for short intervals."""
    return np.exp(-a) * -np.expm1(-(np.asarray(b) - a))


def _bin_index(values, edges):
    idx = np.searchsorted(edges, values, side="right") - 1
    # the right-most edge belongs to the last bin
    idx = np.where(values == edges[-1], edges.size - 2, idx)
    if np.any((idx < 0) | (idx >= edges.size - 1)):
        raise ValueError("path value outside the value bins")
    return idx


def occupation_measure(trajectory: Trajectory, value_bins, time_bins=None,
                       observable: str | None = None, horizon: float | None = None,
                       sampled: bool = False) -> OccupationMeasure:
    """Gamma([t0, t1) x A) = int e^{-s} 1{xi_s in A} ds for one path.

    Jump paths (``sampled=False``) are piecewise constant: the value recorded at
    ``times[i]`` holds until ``times[i+1]`` and the last value until ``horizon``;
    the e^{-s} weight is integrated exactly.  Sampled paths (diffusions) use the
    trapezoidal rule, splitting each interval's mass between its end points.
    """
    name = observable if observable is not None else next(iter(trajectory.values))
    values = np.asarray(trajectory.values[name], dtype=float)
    times = trajectory.times
    value_bins = np.asarray(value_bins, dtype=float)
    end = times[-1] if horizon is None else float(horizon)
    if end < times[-1]:
        raise ValueError("horizon precedes the last observation")
    if time_bins is None:
        time_bins = np.array([times[0], end])
    time_bins = np.asarray(time_bins, dtype=float)
    weights = np.zeros((time_bins.size - 1, value_bins.size - 1))
    vidx = _bin_index(values, value_bins)
    starts = times
    stops = np.append(times[1:], end)

    def deposit(a, b, vi, scale=1.0):
        # split [a, b) over the time bins
        lo = np.clip(np.searchsorted(time_bins, a, side="right") - 1, 0, time_bins.size - 2)
        hi = np.clip(np.searchsorted(time_bins, b, side="left") - 1, 0, time_bins.size - 2)
        for ti in range(lo, hi + 1):
            aa = max(a, time_bins[ti])
            bb = min(b, time_bins[ti + 1])
            if bb > aa:
                weights[ti, vi] += scale * float(_discount_mass(aa, bb))

    if not sampled:
        for a, b, vi in zip(starts, stops, vidx):
            if b > a:
                deposit(a, b, vi)
    else:
        for i in range(times.size - 1):
            deposit(times[i], times[i + 1], vidx[i], 0.5)
            deposit(times[i], times[i + 1], vidx[i + 1], 0.5)
        if end > times[-1]:
            deposit(times[-1], end, vidx[-1])
    return OccupationMeasure(time_bins, value_bins, weights)


def ensemble_occupation_measure(times, paths, value_bins, horizon: float | None = None) -> OccupationMeasure:
    """Average over paths of the sampled-path occupation measure on one time bin.

    ``paths[p, i]`` is path p at ``times[i]``.  Same trapezoidal rule as
    :func:`occupation_measure` with ``sampled=True``, vectorised over paths.
    """
    times = np.asarray(times, dtype=float)
    paths = np.atleast_2d(np.asarray(paths, dtype=float))
    edges = np.asarray(value_bins, dtype=float)
    end = times[-1] if horizon is None else float(horizon)
    idx = _bin_index(paths.ravel(), edges).reshape(paths.shape)
    mass = _discount_mass(times[:-1], times[1:])
    weights = np.zeros(edges.size - 1)
    for side in (idx[:, :-1], idx[:, 1:]):
        weights += np.bincount(side.ravel(), weights=np.tile(0.5 * mass, paths.shape[0]),
                               minlength=edges.size - 1)
    if end > times[-1]:
        weights += np.bincount(idx[:, -1], minlength=edges.size - 1) * float(_discount_mass(times[-1], end))
    return OccupationMeasure(np.array([times[0], end]), edges, weights[None, :] / paths.shape[0])


def measure_distance(a: OccupationMeasure, b: OccupationMeasure) -> float:
    """Total-variation distance between two occupation measures on the same bins,
    each normalised to unit mass."""
    if a.weights.shape != b.weights.shape:
        raise ValueError("occupation measures use different bins")
    wa = a.weights / a.total
    wb = b.weights / b.total
    return 0.5 * float(np.abs(wa - wb).sum())


def tv_distance(x, reference) -> float:
    """1/2 sum_k |x_k - q_k|; the reference mass beyond its table counts in full."""
    p = as_distribution(x)
    q = as_distribution(reference)
    n = max(p.size, q.size)
    pp = np.zeros(n)
    qq = np.zeros(n)
    pp[: p.size] = p
    qq[: q.size] = q
    # missing tail of a truncated reference
    tail = max(0.0, 1.0 - qq.sum())
    return float(0.5 * (np.abs(pp - qq).sum() + tail))


def quadratic_variation_estimate(phi_path) -> float:
    """Sum of squared increments of a grid-sampled Phi path."""
    v = np.asarray(phi_path.values["phi"] if isinstance(phi_path, Trajectory) else phi_path,
                   dtype=float)
    return float(np.sum(np.diff(v) ** 2))


def slow_diffusion_coefficient(x, a2: float) -> float:
    """F(x) = (a2 + 1/2) rho2 + rho1 - 3/4 rho1^2, the quadratic-variation density of Phi."""
    r1 = factorial_moment(x, 1)
    r2 = factorial_moment(x, 2)
    return (a2 + 0.5) * r2 + r1 - 0.75 * r1 * r1
