"""Closed-form actions of the fast (G1) and slow (G0) generators.

Covers generating functions psi_s, the six-moment linear system and its
spectrum, the fixed-point laws Xi(z) with residual certificates, the limiting
drift/diffusion coefficients of Phi, and the ODE behind the negative-binomial
characterisation.

All closed forms take (alpha, a2, a3, b2, b3) explicitly so that disputed
coefficients can be swapped in without touching the code.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, linalg, stats

from .inheritance import InheritanceFamily, MomentParams, perturbation_pgf, pgf
from .observables import as_distribution, empirical_pgf, factorial_moment, variance

FIXED_POINT_KINDS = ("poisson", "negative-binomial")
RESIDUAL_GRID = np.round(np.arange(1, 51) * 0.02, 10)
TAIL = 1e-12


# -- generating functions ---------------------------------------------------

def mixed_pgf(x, family: InheritanceFamily, s: float) -> float:
    """sum_k x_k psi_s(p_k): the pgf of one parent's contribution."""
    p = as_distribution(x)
    return float(sum(p[k] * pgf(family, k, s) for k in np.flatnonzero(p)))


def mixed_perturbation_pgf(x, family: InheritanceFamily, s: float) -> float:
    """sum_k x_k psi_s(r_k)."""
    p = as_distribution(x)
    return float(sum(p[k] * perturbation_pgf(family, k, s) for k in np.flatnonzero(p)))


def g1_psi(x, family: InheritanceFamily, s: float) -> float:
    """G1 psi_s(x) = 1/2 [(sum_k x_k psi_s(p_k))^2 - psi_s(x)]."""
    return 0.5 * (mixed_pgf(x, family, s) ** 2 - empirical_pgf(x, s))


def g1_psi_product(x, family: InheritanceFamily, s: float, r: float) -> float:
    # G1 is a first-order operator
    return (empirical_pgf(x, s) * g1_psi(x, family, r)
            + empirical_pgf(x, r) * g1_psi(x, family, s))


def g0_psi(x, family: InheritanceFamily, s: float) -> float:
    """G0 psi_s(x) = (sum_k x_k psi_s(p_k)) (sum_l x_l psi_s(r_l))."""
    return mixed_pgf(x, family, s) * mixed_perturbation_pgf(x, family, s)


def g0_psi_product(x, family: InheritanceFamily, s: float, r: float,
                   cross_weight: float = 0.5) -> float:
    """G0 (psi_s psi_r)(x).

    psi_s G0 psi_r + psi_r G0 psi_s + w [A_u^2 - psi_s A_r^2 - psi_r A_s^2 + psi_u(x)]
    with u = s + r - sr and A_t = sum_k x_k psi_t(p_k).  The second-order part of
    the generator gives w = 1/2; ``cross_weight=0.25`` is the alternative
    coefficient, kept for comparison.
    """
    u = s + r - s * r
    ps, pr, pu = empirical_pgf(x, s), empirical_pgf(x, r), empirical_pgf(x, u)
    a_s, a_r, a_u = mixed_pgf(x, family, s), mixed_pgf(x, family, r), mixed_pgf(x, family, u)
    cross = a_u ** 2 - ps * a_r ** 2 - pr * a_s ** 2 + pu
    return ps * g0_psi(x, family, r) + pr * g0_psi(x, family, s) + cross_weight * cross


# -- moment system ----------------------------------------------------------

@dataclass(frozen=True)
class MomentMatrices:
    """G1 rho = M1 rho and G0 rho = M0 rho for rho = (rho1, rho1^2, rho2, rho1^3, rho2 rho1, rho3)."""

    M1: np.ndarray
    M0: np.ndarray
    params: MomentParams
    n: float
    row5: str

    @property
    def generator(self) -> np.ndarray:
        return self.n * self.M1 + self.M0


def moment_matrix_fast(a2: float, a3: float) -> np.ndarray:
    m1 = np.zeros((6, 6))
    m1[2, 1] = 0.25
    m1[2, 2] = -0.5 * (1 - 2 * a2)
    m1[4, 3] = 0.25
    m1[4, 4] = -0.5 * (1 - 2 * a2)
    m1[5, 4] = 1.5 * a2
    m1[5, 5] = -0.5 * (1 - 2 * a3)
    return m1


def moment_matrix_slow(alpha: float, a2: float, a3: float, b2: float, b3: float,
                       row5: str = "coupled") -> np.ndarray:
    """M0.  ``row5`` picks the G0(rho2 rho1) row: ``coupled`` is what the generator
    gives (it involves rho3); ``uncoupled`` is an alternative without rho3, kept
    so the two can be compared against the exact generator."""
    m0 = np.zeros((6, 6))
    m0[0, 0] = alpha
    m0[1, :3] = [1.0, 2 * alpha - 0.75, a2 + 0.5]
    m0[2, 1:3] = [alpha, b2]
    m0[3, [1, 3, 4]] = [3.0, 3 * alpha - 2.25, 3 * (a2 + 0.5)]
    if row5 == "uncoupled":
        m0[4, 1:5] = [-0.5, -(2 * a2 + 1), 0.5 * (0.5 + 2 * alpha),
                      a2 - b2 + 0.5 * (1 - 2 * alpha)]
    elif row5 == "coupled":
        m0[4, 1:6] = [0.5, 2 * a2 + 1, alpha - 0.25,
                      b2 + alpha + 0.5 * (a2 - 1), a3 + 0.5]
    else:
        raise ValueError(f"row5 must be 'coupled' or 'uncoupled', got {row5!r}")
    m0[5, 4:6] = [3 * alpha * a2 + 1.5 * b2, b3]
    return m0


def build_moment_matrices(alpha: float, a2: float, a3: float, b2: float, b3: float,
                          n: float, row5: str = "coupled") -> MomentMatrices:
    return MomentMatrices(moment_matrix_fast(a2, a3),
                          moment_matrix_slow(alpha, a2, a3, b2, b3, row5),
                          MomentParams(alpha, a2, a3, b2, b3), n, row5)


def matrices_for_family(family: InheritanceFamily, n: float | None = None,
                        row5: str = "coupled") -> MomentMatrices:
    p = family.moment_params
    return build_moment_matrices(p.alpha, p.a2, p.a3, p.b2, p.b3,
                                 family.n_individuals if n is None else n, row5)


def g1_moments(m, a2: float, a3: float) -> np.ndarray:
    return moment_matrix_fast(a2, a3) @ np.asarray(m, dtype=float)


def g0_moments(m, alpha: float, a2: float, b2: float, b3: float, a3: float = 0.0,
               row5: str = "coupled") -> np.ndarray:
    """M0 m.  Only the coupled rho2 rho1 row depends on a3."""
    return moment_matrix_slow(alpha, a2, a3, b2, b3, row5) @ np.asarray(m, dtype=float)


def moment_flow(m0, matrices: MomentMatrices, t: float) -> np.ndarray:
    """exp(t (N M1 + M0)) m0."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return linalg.expm(t * matrices.generator) @ np.asarray(m0, dtype=float)


def eigen_analysis(matrices: MomentMatrices) -> np.ndarray:
    """Eigenvalues of N M1 + M0, sorted by real part (most negative first)."""
    lam = np.linalg.eigvals(matrices.generator)
    return lam[np.argsort(lam.real)]


def fast_eigenvalue_predictions(a2: float, a3: float, n: float) -> np.ndarray:
    """Leading-order fast eigenvalues -N(1/2 - a2) (twice) and -N(1/2 - a3)."""
    return np.array([-n * (0.5 - a2), -n * (0.5 - a2), -n * (0.5 - a3)])


# -- fixed points -----------------------------------------------------------

@dataclass(frozen=True)
class FixedPointLaw:
    kind: str
    mean: float
    probs: np.ndarray

    @property
    def success_prob(self) -> float | None:
        if self.kind == "negative-binomial":
            return 2.0 / (self.mean + 2.0)
        return None


def _table(dist, tail: float) -> np.ndarray:
    kmax = int(dist.isf(tail)) + 1
    return dist.pmf(np.arange(kmax + 1))


def xi_map(kind: str, z: float, tail: float = TAIL) -> FixedPointLaw:
    """Poi(z) or NB(2, 2/(z+2)), tabulated until the tail mass drops below ``tail``."""
    if kind not in FIXED_POINT_KINDS:
        raise ValueError(f"unknown fixed-point kind {kind!r}")
    if z < 0:
        raise ValueError("z must be nonnegative")
    if z == 0:
        return FixedPointLaw(kind, 0.0, np.array([1.0]))
    if kind == "poisson":
        probs = _table(stats.poisson(z), tail)
    else:
        probs = _table(stats.nbinom(2, 2.0 / (z + 2.0)), tail)
    return FixedPointLaw(kind, float(z), probs)


def xi_kind_for_family(family: InheritanceFamily) -> str:
    if family.kind == "binomial-biased":
        return "poisson"
    if family.kind == "uniform":
        return "negative-binomial"
    raise ValueError(f"no fixed-point law implemented for {family.kind}")


def poisson_residual(x, grid=RESIDUAL_GRID) -> float:
    """sup_s |psi_{s/2}(x)^2 - psi_s(x)|, zero exactly for Poisson laws."""
    return float(max(abs(empirical_pgf(x, s / 2) ** 2 - empirical_pgf(x, s)) for s in grid))


def negbin_residual(x, grid=RESIDUAL_GRID, epsabs: float = 1e-12) -> float:
    """sup_t |((1/t) int_0^t psi_s(x) ds)^2 - psi_t(x)|, zero exactly for NB(2, .)."""
    p = as_distribution(x)
    worst = 0.0
    for t in grid:
        val, _ = integrate.quad(lambda s: empirical_pgf(p, s), 0.0, t,
                                epsabs=epsabs, epsrel=0.0, limit=200)
        worst = max(worst, abs((val / t) ** 2 - empirical_pgf(p, t)))
    return float(worst)


def _point_mass(k: int) -> np.ndarray:
    q = np.zeros(k + 1)
    q[k] = 1.0
    return q


def _two_point(k: int) -> np.ndarray:
    q = np.zeros(k + 1)
    q[0] = q[k] = 0.5
    return q


# Distant mass: a small weight near the bulk of Xi(z) barely moves psi_s, so
# contamination at 10% is only visible through mass far out in the tail.
CONTAMINANTS = (
    *(_point_mass(k) for k in (25, 50, 100, 200, 400)),
    *(_two_point(k) for k in (50, 100, 200, 400)),
    np.full(101, 1 / 101),
)


def contaminated_laws(kind: str, z: float, weight: float = 0.1) -> list[np.ndarray]:
    """Ten perturbed laws (1-w) Xi(z) + w Q, one for each fixed contaminant Q."""
    base = xi_map(kind, z).probs
    out = []
    for q in CONTAMINANTS:
        n = max(base.size, q.size)
        mix = np.zeros(n)
        mix[: base.size] += (1 - weight) * base
        mix[: q.size] += weight * q
        out.append(mix / mix.sum())
    return out


# -- slow dynamics of Phi ---------------------------------------------------

def g0_phi_coefficients(x, alpha: float, a2: float) -> tuple[float, float]:
    """G0(g o Phi)(x) = drift g'(Phi) + 1/2 coef g''(Phi).

    Returns (drift, coef) with drift = alpha Phi(x) and
    coef = (a2 + 1/2) rho2 + rho1 - 3/4 rho1^2, the quadratic-variation density of Phi.
    """
    r1 = factorial_moment(x, 1)
    r2 = factorial_moment(x, 2)
    return alpha * r1, (a2 + 0.5) * r2 + r1 - 0.75 * r1 * r1


def limit_generator_coefficients(kind: str, z: float, alpha: float = 0.0) -> tuple[float, float]:
    """(drift, squared diffusion coefficient) of the limit at z: alpha z and v(Xi(z))."""
    law = xi_map(kind, z, tail=1e-16)
    return alpha * z, variance(law)


def case2_diffusion_candidates(z: float) -> dict:
    """Squared diffusion coefficient of the uniform-case limit, both readings.

    ``theorem``: dZ = sqrt(Z(Z+2)) dW.  ``derived``: sigma^2 = v(Xi(z)) = z(z+2)/2.
    """
    return {"theorem": z * (z + 2.0), "derived": 0.5 * z * (z + 2.0)}


# -- the beta ODE ------------------------------------------------------------

def beta_closed_form(z: float, t) -> np.ndarray:
    return 1.0 / (1.0 + np.asarray(t, dtype=float) * z / 2.0)


def beta_ode(z: float, t_grid, t_start: float = 1e-3, series_terms: int = 12):
    """Solve beta^2 - beta - t beta' = 0 with beta_t = 1 - z t/2 + O(t^2).

    The ODE is singular at t = 0, so the solution is started at ``t_start`` from
    the power series sum_n (-z t/2)^n and continued with DOP853.  Grid points
    below ``t_start`` take the series value.  Returns (numeric, closed form).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0) or t_grid[0] < 0:
        raise ValueError("t_grid must be nonnegative and increasing")

    def series(t):
        return np.sum([(-z * np.asarray(t) / 2.0) ** n for n in range(series_terms)], axis=0)

    out = np.empty_like(t_grid)
    early = t_grid <= t_start
    out[early] = series(t_grid[early])
    late = t_grid[~early]
    if late.size:
        sol = integrate.solve_ivp(lambda t, b: (b * b - b) / t, (t_start, late[-1]),
                                  [series(t_start)], method="DOP853", t_eval=late,
                                  rtol=1e-13, atol=1e-15)
        out[~early] = sol.y[0]
    return out, beta_closed_form(z, t_grid)


__all__ = [
    "mixed_pgf", "mixed_perturbation_pgf", "g1_psi", "g1_psi_product", "g0_psi",
    "g0_psi_product", "MomentMatrices", "build_moment_matrices", "matrices_for_family",
    "moment_matrix_fast", "moment_matrix_slow", "g1_moments", "g0_moments", "moment_flow",
    "eigen_analysis", "fast_eigenvalue_predictions", "FixedPointLaw", "xi_map",
    "xi_kind_for_family", "poisson_residual", "negbin_residual", "contaminated_laws",
    "g0_phi_coefficients", "limit_generator_coefficients", "case2_diffusion_candidates",
    "beta_closed_form", "beta_ode",
]
