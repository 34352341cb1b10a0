"""Inheritance-distribution families p_k^N, their limits p_k and perturbations r_k.

A parent carrying ``k`` elements passes ``j ~ p_k^N`` of them to the offspring.
Four kinds are supported:

* ``binomial-biased``: p_k^N = Bin(k, 1/2 + alpha/N), limit Bin(k, 1/2)
* ``uniform``: p_k^N = p_k = U{0, ..., k}
* ``all-or-nothing``: p_k = (delta_0 + delta_k) / 2
* ``custom-table``: an N-independent row-stochastic table up to ``k_max``
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats

KINDS = ("binomial-biased", "uniform", "all-or-nothing", "custom-table")

# Reference values for b2, b3 that disagree with the binomial expansion; kept
# only so reports can show both candidates.
REFERENCE_BINOMIAL_B2 = 0.25
REFERENCE_BINOMIAL_B3 = -0.125

ROW_TOL = 1e-12
DEFAULT_N_PROBE = 10**6


@dataclass(frozen=True)
class MomentParams:
    """Factorial-moment coefficients of the limit family and its perturbation.

    rho_1(p_k) = k/2, rho_2(p_k) = a2 k(k-1), rho_3(p_k) = a3 k(k-1)(k-2),
    rho_1(r_k) = alpha k, rho_2(r_k) = b2 k(k-1), rho_3(r_k) = b3 k(k-1)(k-2).
    """

    alpha: float = 0.0
    a2: float = 0.0
    a3: float = 0.0
    b2: float = 0.0
    b3: float = 0.0

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "a2": self.a2, "a3": self.a3,
                "b2": self.b2, "b3": self.b3}


@dataclass(frozen=True)
class InheritanceFamily:
    kind: str
    bias_intensity: float
    n_individuals: int
    moment_params: MomentParams
    custom_probs: tuple[tuple[float, ...], ...] | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def k_max(self) -> int | None:
        if self.custom_probs is None:
            return None
        return len(self.custom_probs) - 1

    @property
    def success_prob(self) -> float:
        """Binomial success probability 1/2 + alpha/N (1/2 for other kinds)."""
        if self.kind == "binomial-biased":
            return 0.5 + self.bias_intensity / self.n_individuals
        return 0.5

    def with_population_size(self, n: int) -> "InheritanceFamily":
        """Same family at another N; moment parameters are left as they are."""
        _check_bias(self.kind, self.bias_intensity, n)
        return replace(self, n_individuals=n)

    def _check_k(self, k: int) -> None:
        if k < 0:
            raise ValueError(f"copy number must be nonnegative, got {k}")
        if self.k_max is not None and k > self.k_max:
            raise ValueError(f"k={k} exceeds the custom table's k_max={self.k_max}")

    def row(self, k: int) -> np.ndarray:
        """Finite-N law p_k^N on {0, ..., k}."""
        self._check_k(k)
        if self.kind == "binomial-biased":
            return stats.binom.pmf(np.arange(k + 1), k, self.success_prob)
        return self.limit_row(k)

    def limit_row(self, k: int) -> np.ndarray:
        """Limit law p_k on {0, ..., k}."""
        self._check_k(k)
        if self.kind == "binomial-biased":
            return stats.binom.pmf(np.arange(k + 1), k, 0.5)
        if self.kind == "uniform":
            return np.full(k + 1, 1.0 / (k + 1))
        if self.kind == "all-or-nothing":
            out = np.zeros(k + 1)
            out[0] += 0.5
            out[k] += 0.5
            return out
        return np.asarray(self.custom_probs[k], dtype=float)

    def perturbation_row(self, k: int) -> np.ndarray:
        """r_k = lim N (p_k^N - p_k)."""
        self._check_k(k)
        if self.kind != "binomial-biased" or self.bias_intensity == 0.0:
            return np.zeros(k + 1)
        j = np.arange(k + 1)
        # d/dq Bin(k, q)(j) at q = 1/2 equals 4 (j - k/2) Bin(k, 1/2)(j)
        return self.bias_intensity * 4.0 * (j - k / 2) * self.limit_row(k)

    def row_table(self, k_max: int) -> np.ndarray:
        """Rows p_0^N .. p_{k_max}^N padded into a square array."""
        out = np.zeros((k_max + 1, k_max + 1))
        for k in range(k_max + 1):
            out[k, : k + 1] = self.row(k)
        return out


def _check_bias(kind: str, alpha: float, n: int) -> None:
    if n < 1:
        raise ValueError(f"population size must be >= 1, got {n}")
    if kind == "binomial-biased" and not abs(alpha / n) < 0.5:
        raise ValueError(f"bias alpha/N = {alpha / n} outside (-1/2, 1/2)")


def _check_table(table) -> tuple[tuple[float, ...], ...]:
    rows = []
    for k, row in enumerate(table):
        row = np.asarray(row, dtype=float)
        if row.shape != (k + 1,):
            raise ValueError(f"row {k} must have {k + 1} entries, got {row.size}")
        if np.any(row < 0):
            raise ValueError(f"row {k} has negative probabilities")
        if abs(row.sum() - 1.0) > ROW_TOL:
            raise ValueError(f"row {k} sums to {row.sum()!r}, not 1")
        rows.append(tuple(float(v) for v in row))
    if not rows:
        raise ValueError("custom table is empty")
    return tuple(rows)


def _table_coefficients(rows) -> tuple[float, float]:
    """Least-squares a2, a3 of a custom table (0 when undetermined)."""
    coef = []
    for n in (2, 3):
        ks = np.arange(len(rows))
        x = np.array([_falling(k, n) for k in ks], dtype=float)
        y = np.array([_row_factorial_moment(np.asarray(r), n) for r in rows])
        coef.append(float(x @ y / (x @ x)) if x @ x > 0 else 0.0)
    return coef[0], coef[1]


def _falling(k, n: int):
    out = 1
    for i in range(n):
        out = out * (k - i)
    return out


def _row_factorial_moment(row: np.ndarray, n: int) -> float:
    j = np.arange(row.size)
    return float(np.sum(_falling(j, n) * row))


def make_family(kind: str, alpha: float = 0.0, n: int = 1,
                custom_probs=None, n_probe: int = DEFAULT_N_PROBE) -> InheritanceFamily:
    """Build a family and populate its moment parameters.

    For ``binomial-biased`` the perturbation coefficients b2, b3 come from
    :func:`numeric_perturbation_moments`; the reference values
    REFERENCE_BINOMIAL_B2/B3 are kept in ``metadata`` for comparison.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown family kind {kind!r}; expected one of {KINDS}")
    _check_bias(kind, alpha, n)
    if kind == "binomial-biased":
        probe = InheritanceFamily(kind, float(alpha), n, MomentParams(alpha, 0.25, 0.125))
        if alpha == 0.0:
            b2 = b3 = 0.0
        else:
            _, b2, b3 = numeric_perturbation_moments(probe, n_probe)
        params = MomentParams(float(alpha), 0.25, 0.125, b2, b3)
        meta = {"b2_numeric": b2, "b3_numeric": b3,
                "b2_reference": REFERENCE_BINOMIAL_B2, "b3_reference": REFERENCE_BINOMIAL_B3,
                "n_probe": n_probe}
        return InheritanceFamily(kind, float(alpha), n, params, metadata=meta)
    if alpha != 0.0:
        raise ValueError(f"{kind} family carries no bias; got alpha={alpha}")
    if kind == "uniform":
        return InheritanceFamily(kind, 0.0, n, MomentParams(0.0, 1 / 3, 0.25))
    if kind == "all-or-nothing":
        return InheritanceFamily(kind, 0.0, n, MomentParams(0.0, 0.5, 0.5))
    if custom_probs is None:
        raise ValueError("custom-table family needs custom_probs")
    rows = _check_table(custom_probs)
    a2, a3 = _table_coefficients(rows)
    return InheritanceFamily(kind, 0.0, n, MomentParams(0.0, a2, a3), custom_probs=rows)


def load_custom_table(path) -> list[list[float]]:
    """Read plain-text rows ``k p0 p1 ... pk`` (blank lines and # comments skipped)."""
    rows: dict[int, list[float]] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            k = int(fields[0])
            probs = [float(v) for v in fields[1:]]
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: cannot parse row") from exc
        if k in rows:
            raise ValueError(f"{path}:{lineno}: duplicate row for k={k}")
        rows[k] = probs
    if not rows:
        raise ValueError(f"{path}: empty family table")
    if sorted(rows) != list(range(len(rows))):
        raise ValueError(f"{path}: rows must cover k = 0..k_max without gaps")
    return [rows[k] for k in range(len(rows))]


def sample_offspring_count(family: InheritanceFamily, k: int, rng: np.random.Generator) -> int:
    """One draw from p_k^N."""
    return int(sample_offspring_counts(family, k, 1, rng)[0])


def sample_offspring_counts(family: InheritanceFamily, k: int, size: int,
                            rng: np.random.Generator) -> np.ndarray:
    family._check_k(k)
    if k == 0:
        return np.zeros(size, dtype=np.int64)
    if family.kind == "binomial-biased":
        return rng.binomial(k, family.success_prob, size=size).astype(np.int64)
    if family.kind == "uniform":
        return rng.integers(0, k + 1, size=size, dtype=np.int64)
    if family.kind == "all-or-nothing":
        return np.where(rng.random(size) < 0.5, k, 0).astype(np.int64)
    return rng.choice(k + 1, size=size, p=family.limit_row(k)).astype(np.int64)


def pgf(family: InheritanceFamily, k: int, s: float) -> float:
    """psi_s(p_k) = sum_j p_k(j) (1 - s)^j for the limit law."""
    if k == 0:
        return 1.0
    if family.kind == "binomial-biased":
        return (1.0 - s / 2) ** k
    if family.kind == "uniform":
        if s == 0.0:
            return 1.0
        # expm1/log1p keep precision when s is tiny
        with np.errstate(divide="ignore"):
            return float(-np.expm1((k + 1) * np.log1p(-s)) / ((k + 1) * s))
    if family.kind == "all-or-nothing":
        return 0.5 + 0.5 * (1.0 - s) ** k
    row = family.limit_row(k)
    return float(np.sum(row * (1.0 - s) ** np.arange(k + 1)))


def pgf_finite(family: InheritanceFamily, k: int, s: float) -> float:
    """psi_s(p_k^N) at the family's own N."""
    if family.kind == "binomial-biased":
        return (1.0 - s * family.success_prob) ** k
    return pgf(family, k, s)


def factorial_moment(family: InheritanceFamily, k: int, n: int) -> float:
    """n-th factorial moment of the limit law p_k, n in {1, 2, 3}."""
    if n not in (1, 2, 3):
        raise ValueError(f"factorial moment order must be 1, 2 or 3, got {n}")
    if family.kind == "custom-table":
        return _row_factorial_moment(family.limit_row(k), n)
    coef = {1: 0.5, 2: family.moment_params.a2, 3: family.moment_params.a3}[n]
    return coef * _falling(k, n)


def perturbation_pgf(family: InheritanceFamily, k: int, s: float) -> float:
    """psi_s(r_k); zero unless the family is binomial-biased."""
    if family.kind != "binomial-biased" or k == 0:
        return 0.0
    return -family.bias_intensity * k * s * (1.0 - s / 2) ** (k - 1)


def numeric_perturbation_moments(family: InheritanceFamily, n_probe: int = DEFAULT_N_PROBE,
                                 k_range=range(1, 21), tol: float = 1e-4):
    """Fit (alpha, b2, b3) from finite-N factorial-moment differences.

    Computes N_probe (rho_n(p_k^N_probe) - rho_n(p_k)) by direct summation over
    the pmf rows and regresses it on k, k(k-1), k(k-1)(k-2).
    """
    if n_probe < 10**4:
        raise ValueError(f"n_probe must be >= 1e4, got {n_probe}")
    probe = family.with_population_size(n_probe)
    coefs = []
    for n in (1, 2, 3):
        x, y = [], []
        for k in k_range:
            diff = _row_factorial_moment(probe.row(k), n) - _row_factorial_moment(probe.limit_row(k), n)
            x.append(_falling(k, n))
            y.append(n_probe * diff)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y)
        c = float(x @ y / (x @ x))
        scale = max(1.0, float(np.max(np.abs(y))))
        resid = float(np.max(np.abs(y - c * x))) / scale
        if resid > tol:
            raise ValueError(
                f"rho_{n}(r_k) is not proportional to k^(falling {n}): relative residual {resid:.3g}")
        coefs.append(c)
    return tuple(coefs)


def perturbation_series_coefficients(alpha: float, k: int) -> tuple[float, float, float]:
    """rho_1..3(r_k) read off the Taylor series of -alpha k s (1 - s/2)^(k-1)."""
    poly = np.polynomial.Polynomial([1.0, -0.5]) ** (k - 1) * np.polynomial.Polynomial([0.0, -alpha * k])
    c = np.zeros(4)
    c[: min(4, poly.coef.size)] = poly.coef[:4]
    # psi_s = sum_n rho_n (-s)^n / n!
    return -c[1], 2.0 * c[2], -6.0 * c[3]


__all__ = [
    "InheritanceFamily", "MomentParams", "KINDS", "make_family", "load_custom_table",
    "sample_offspring_count", "sample_offspring_counts", "pgf", "pgf_finite",
    "factorial_moment", "perturbation_pgf", "numeric_perturbation_moments",
    "perturbation_series_coefficients",
]
