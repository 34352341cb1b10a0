"""Exact simulation of the N-individual copy-number jump process.

Reproduction events arrive at total rate N^2/2.  At each event a dying
individual and two parents are drawn uniformly with replacement; the parents
pass j ~ p_k^N and j' ~ p_l^N elements, and the dying individual is replaced by
one of type m = j + j'.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .inheritance import InheritanceFamily, sample_offspring_count
from .observables import Trajectory, moment_array_from_sums

DEFAULT_EVENT_CAP = 10**9
INIT_KINDS = ("iid-poisson", "iid-negbin", "histogram")


class EventCapExceeded(RuntimeError):
    pass


@dataclass
class PopulationState:
    """Histogram ``counts[k]`` of individuals carrying k elements."""

    n_individuals: int
    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.n_individuals < 1:
            raise ValueError("population size must be >= 1")
        if self.counts.ndim != 1 or self.counts.size == 0:
            raise ValueError("counts must be a non-empty 1-d array")
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")
        if int(self.counts.sum()) != self.n_individuals:
            raise ValueError(f"counts sum to {int(self.counts.sum())}, expected {self.n_individuals}")

    @classmethod
    def from_types(cls, types) -> "PopulationState":
        types = np.asarray(types, dtype=np.int64)
        return cls(types.size, np.bincount(types, minlength=1))

    def to_types(self) -> np.ndarray:
        return np.repeat(np.arange(self.counts.size, dtype=np.int64), self.counts)

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.n_individuals

    @property
    def k_max(self) -> int:
        return self.counts.size - 1

    @property
    def occupied(self) -> np.ndarray:
        return np.flatnonzero(self.counts)

    def copy(self) -> "PopulationState":
        return PopulationState(self.n_individuals, self.counts.copy())


@dataclass(frozen=True)
class InitialSpec:
    kind: str
    z: float = 0.0
    histogram: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in INIT_KINDS:
            raise ValueError(f"unknown initial kind {self.kind!r}; expected one of {INIT_KINDS}")
        if self.z < 0:
            raise ValueError(f"initial mean z must be >= 0, got {self.z}")
        if self.kind == "histogram" and self.histogram is None:
            raise ValueError("histogram initial spec needs a histogram")


@dataclass(frozen=True)
class EventRecord:
    time: float
    dying_type: int
    parent_types: tuple[int, int]
    contributions: tuple[int, int]
    offspring_type: int


def init_state(n: int, spec: InitialSpec, rng: np.random.Generator | None = None) -> PopulationState:
    """N individuals drawn i.i.d. from Poi(z) or NB(2, 2/(z+2)), or an exact histogram."""
    if spec.kind == "histogram":
        hist = np.asarray(spec.histogram, dtype=np.int64)
        if hist.sum() != n:
            raise ValueError(f"histogram sums to {int(hist.sum())}, expected N={n}")
        return PopulationState(n, hist)
    if rng is None:
        raise ValueError("random initial states need a generator")
    if spec.kind == "iid-poisson":
        types = rng.poisson(spec.z, size=n)
    elif spec.z == 0.0:
        types = np.zeros(n, dtype=np.int64)
    else:
        types = rng.negative_binomial(2, 2.0 / (spec.z + 2.0), size=n)
    return PopulationState.from_types(types)


def _draw_type(state: PopulationState, rng: np.random.Generator) -> int:
    i = rng.integers(0, state.n_individuals)
    return int(np.searchsorted(np.cumsum(state.counts), i, side="right"))


def step(state: PopulationState, family: InheritanceFamily, rng: np.random.Generator):
    """One reproduction event; returns (new state, elapsed time, event record).

    Events with m = n leave the histogram unchanged but still take time.
    """
    n_ind = state.n_individuals
    elapsed = float(rng.exponential(2.0 / (n_ind * n_ind)))
    n = _draw_type(state, rng)
    k = _draw_type(state, rng)
    l = _draw_type(state, rng)
    j = sample_offspring_count(family, k, rng)
    jj = sample_offspring_count(family, l, rng)
    m = j + jj
    counts = state.counts.copy()
    if m >= counts.size:
        grown = np.zeros(max(2 * counts.size, m + 1), dtype=np.int64)
        grown[: counts.size] = counts
        counts = grown
    counts[n] -= 1
    counts[m] += 1
    return PopulationState(n_ind, counts), elapsed, EventRecord(elapsed, n, (k, l), (j, jj), m)


def kernel_family_args(family: InheritanceFamily):
    """(code, success probability, cumulative table) for the compiled kernels."""
    codes = {"binomial-biased": _kernels.BINOMIAL, "uniform": _kernels.UNIFORM,
             "all-or-nothing": _kernels.ALL_OR_NOTHING, "custom-table": _kernels.TABLE}
    code = codes[family.kind]
    if code == _kernels.TABLE:
        cdf = np.cumsum(family.row_table(family.k_max), axis=1)
    else:
        # sampled directly; the table only needs a valid shape
        cdf = np.zeros((1, 1))
    return code, float(family.success_prob), np.ascontiguousarray(cdf)


def _check_status(status: int, n_events: int, max_events: int) -> None:
    if status == _kernels.EVENT_CAP:
        raise EventCapExceeded(f"event cap of {max_events} reached; runaway configuration?")
    if status == _kernels.TABLE_RANGE:
        raise ValueError("a parent's copy number exceeds the custom table's k_max")


BUILTIN_OBSERVERS = {
    "phi": lambda m: m[..., 0],
    "rho1": lambda m: m[..., 0],
    "rho1^2": lambda m: m[..., 1],
    "rho2": lambda m: m[..., 2],
    "rho1^3": lambda m: m[..., 3],
    "rho2*rho1": lambda m: m[..., 4],
    "rho3": lambda m: m[..., 5],
}


def _check_grid(grid, t_end):
    grid = np.asarray(grid, dtype=float)
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("observation grid must be strictly increasing")
    if grid.size and (grid[0] < 0 or grid[-1] > t_end):
        raise ValueError("observation grid must lie within [0, t_end]")
    return grid


def simulate(state0: PopulationState, family: InheritanceFamily, t_end: float, grid,
             observers=("phi",), seed: int = 0, record_events: bool = False,
             max_events: int = DEFAULT_EVENT_CAP) -> Trajectory:
    """Run one replicate to ``t_end`` and observe it at the grid times.

    ``observers`` holds builtin names (``phi``, ``rho2``, ...) or a mapping of
    name -> callable(PopulationState).  Each grid time sees the state in force
    just before it (left limit).  ``seed`` fixes the whole path.
    """
    if family.n_individuals != state0.n_individuals:
        raise ValueError(f"family built for N={family.n_individuals}, state has N={state0.n_individuals}")
    grid = _check_grid(grid, t_end)
    if not isinstance(observers, dict):
        observers = {name: name for name in observers}
    for name, obs in observers.items():
        if isinstance(obs, str) and obs not in BUILTIN_OBSERVERS:
            raise ValueError(f"unknown observer {obs!r}")
    need_snaps = any(callable(obs) for obs in observers.values())
    code, q, cdf = kernel_family_args(family)
    n_ind = state0.n_individuals
    n_grid = grid.size
    slot = np.arange(n_grid) if need_snaps else np.full(n_grid, -1)
    expected = 0.5 * n_ind * n_ind * t_end
    log_rows = int(expected + 10 * np.sqrt(expected) + 100) if record_events else 0
    while True:
        types = state0.to_types()
        sums = np.zeros((n_grid, 3), dtype=np.int64)
        snaps = np.zeros((n_grid if need_snaps else 0, n_ind), dtype=np.int64)
        log = np.zeros((log_rows, 7))
        status, n_events = _kernels.run_replicate(
            types, code, q, cdf, float(t_end), grid, slot, np.int64(seed), max_events, sums, snaps, log)
        if status != _kernels.LOG_FULL:
            break
        log_rows *= 2
    _check_status(status, n_events, max_events)
    moments = moment_array_from_sums(sums, n_ind)
    values = {}
    for name, obs in observers.items():
        if isinstance(obs, str):
            values[name] = BUILTIN_OBSERVERS[obs](moments)
        else:
            values[name] = np.array([obs(PopulationState.from_types(s)) for s in snaps])
    events = log[:n_events] if record_events else None
    return Trajectory(grid, values, events=events)


@dataclass
class BatchResult:
    """Raw output of :func:`simulate_batch`.

    ``moments[r, g]`` is the 6-moment vector of replicate r at grid point g;
    ``snapshots[r, i]`` the type vector at ``snapshot_times[i]``.
    """

    grid: np.ndarray
    moments: np.ndarray
    snapshot_times: np.ndarray
    snapshots: np.ndarray
    n_events: np.ndarray
    n_individuals: int

    @property
    def phi(self) -> np.ndarray:
        return self.moments[..., 0]

    def snapshot_state(self, replicate: int, i: int) -> PopulationState:
        return PopulationState.from_types(self.snapshots[replicate, i])


def simulate_batch(types0: np.ndarray, family: InheritanceFamily, t_end: float, grid,
                   seeds, snapshot_times=(), max_events: int = DEFAULT_EVENT_CAP) -> BatchResult:
    """Independent replicates, one row of ``types0`` and one seed each.

    Replicates run in parallel over numba threads; since each reseeds its own
    generator the output does not depend on the thread count.
    """
    types0 = np.ascontiguousarray(types0, dtype=np.int64)
    if types0.ndim != 2:
        raise ValueError("types0 must be (replicates, N)")
    n_rep, n_ind = types0.shape
    if family.n_individuals != n_ind:
        raise ValueError(f"family built for N={family.n_individuals}, states have N={n_ind}")
    grid = _check_grid(grid, t_end)
    seeds = np.asarray(seeds, dtype=np.int64)
    if seeds.shape != (n_rep,):
        raise ValueError("need one seed per replicate")
    snapshot_times = np.asarray(snapshot_times, dtype=float)
    slot = np.full(grid.size, -1, dtype=np.int64)
    for i, ts in enumerate(snapshot_times):
        hit = np.flatnonzero(np.isclose(grid, ts, rtol=0, atol=1e-12))
        if hit.size == 0:
            raise ValueError(f"snapshot time {ts} is not on the grid")
        slot[hit[0]] = i
    code, q, cdf = kernel_family_args(family)
    sums = np.zeros((n_rep, grid.size, 3), dtype=np.int64)
    snaps = np.zeros((n_rep, snapshot_times.size, n_ind), dtype=np.int64)
    status, events = _kernels.run_batch(types0, code, q, cdf, float(t_end), grid, slot, seeds,
                                        max_events, sums, snaps)
    for st, ne in zip(status, events):
        _check_status(int(st), int(ne), max_events)
    return BatchResult(grid, moment_array_from_sums(sums, n_ind), snapshot_times, snaps,
                       events, n_ind)


def apply_generator_exact(state: PopulationState, family: InheritanceFamily,
                          f: Callable[[np.ndarray], float], max_occupied: int = 50,
                          max_k: int = 30) -> float:
    """G^N f(x) by summing rate x [f(x + (e_m - e_n)/N) - f(x)] over every transition.

    ``f`` receives the probability vector x (index = copy number).  The offspring
    law sum_{k,l} x_k x_l (p_k^N * p_l^N) is the self-convolution of the mixture
    sum_k x_k p_k^N, which is how the (k, l, j, j') sum is carried out.
    """
    occ = state.occupied
    if occ.size > max_occupied or state.k_max > max_k:
        raise ValueError(f"state too large for the exact generator "
                         f"({occ.size} occupied types, k_max={state.k_max})")
    n_ind = state.n_individuals
    kmax = int(occ.max())
    size = max(2 * kmax + 1, state.counts.size)
    x = np.zeros(size)
    x[: state.counts.size] = state.frequencies
    mixture = np.zeros(kmax + 1)
    for k in occ:
        mixture[: k + 1] += x[k] * family.row(int(k))
    offspring = np.convolve(mixture, mixture)
    base = f(x)
    total = 0.0
    for n in occ:
        for m in np.flatnonzero(offspring):
            if m == n:
                continue
            y = x.copy()
            y[n] -= 1.0 / n_ind
            y[m] += 1.0 / n_ind
            total += x[n] * offspring[m] * (f(y) - base)
    return 0.5 * n_ind * n_ind * total


@dataclass
class AllOrNothingRun:
    trajectory: Trajectory
    hitting_time: float | None


def simulate_all_or_nothing(n: int, count_at_zero: int, t_end: float, seed: int = 0,
                            max_events: int = DEFAULT_EVENT_CAP) -> AllOrNothingRun:
    """Birth-death chain of the number of type-0 individuals under all-or-nothing inheritance.

    With y = count/N the count goes up at rate N^2 (1-y)(1/4 (1-y)^2 + (1-y) y + y^2)
    and down at rate N^2 y (3/4 (1-y)^2 + (1-y) y); N is absorbing.
    """
    if not 0 <= count_at_zero <= n:
        raise ValueError(f"count_at_zero must lie in [0, {n}]")
    times, counts, hit, status = _kernels.run_birth_death(count_at_zero, n, float(t_end),
                                                          np.int64(seed), max_events)
    _check_status(status, len(times), max_events)
    return AllOrNothingRun(Trajectory(times, {"zero_count": counts}),
                           None if hit < 0 else float(hit))


def birth_death_rates(n: int, count: int) -> tuple[float, float]:
    """(up, down) rates of the zero-type count at ``count``."""
    y = count / n
    w = 1.0 - y
    up = n * n * w * (0.25 * w * w + w * y + y * y)
    down = n * n * y * (0.75 * w * w + w * y)
    return up, down
