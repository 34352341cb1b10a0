import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cnvmoran import generator_algebra as ga
from cnvmoran.inheritance import make_family
from cnvmoran.observables import moment_vector, variance

BINOM = make_family("binomial-biased", 0.0, 100)
UNIFORM = make_family("uniform", 0.0, 100)


def test_g1_psi_of_point_mass():
    # delta_2: each parent passes nothing with probability 1/4, so 1/2 (1/16 - 0)
    assert ga.g1_psi([0, 0, 1.0], BINOM, 1.0) == pytest.approx(1 / 32)


def test_xi_map_examples():
    nb = ga.xi_map("negative-binomial", 2.0)
    assert nb.success_prob == 0.5
    assert moment_vector(nb)[0] == pytest.approx(2.0)
    assert moment_vector(nb)[2] == pytest.approx(6.0)
    poi = ga.xi_map("poisson", 1.5)
    assert poi.probs.sum() == pytest.approx(1.0, abs=1e-11)
    assert ga.xi_map("poisson", 0.0).probs.tolist() == [1.0]
    with pytest.raises(ValueError):
        ga.xi_map("geometric", 1.0)


@settings(max_examples=40, deadline=None)
@given(z=st.floats(0.05, 5.0), s=st.floats(0.0, 1.0))
def test_fixed_points_annihilate_g1(z, s):
    assert abs(ga.g1_psi(ga.xi_map("poisson", z), BINOM, s)) < 1e-10
    assert abs(ga.g1_psi(ga.xi_map("negative-binomial", z), UNIFORM, s)) < 1e-10


@pytest.mark.parametrize("z", [0.5, 1.0, 3.0])
def test_residual_certificates(z):
    assert ga.poisson_residual(ga.xi_map("poisson", z).probs) < 1e-10
    assert ga.negbin_residual(ga.xi_map("negative-binomial", z).probs) < 1e-8
    # each certificate rejects the other law
    assert ga.poisson_residual(ga.xi_map("negative-binomial", z).probs) > 1e-3
    assert ga.negbin_residual(ga.xi_map("poisson", z).probs) > 1e-3


def test_contaminated_laws_fail_both_certificates():
    for kind in ga.FIXED_POINT_KINDS:
        laws = ga.contaminated_laws(kind, 1.0)
        assert len(laws) == 10
        for law in laws:
            assert law.sum() == pytest.approx(1.0)
            assert ga.poisson_residual(law) >= 1e-2
            assert ga.negbin_residual(law) >= 1e-2


@pytest.mark.parametrize("kind,fam", [("poisson", BINOM), ("negative-binomial", UNIFORM)])
@pytest.mark.parametrize("z", [0.5, 2.0])
def test_fast_matrix_vanishes_on_fixed_points(kind, fam, z):
    m = moment_vector(ga.xi_map(kind, z, tail=1e-16)).as_array()
    p = fam.moment_params
    assert np.allclose(ga.g1_moments(m, p.a2, p.a3), 0.0, atol=1e-9)


def test_fast_matrix_matches_pgf_generator():
    # G1 rho_n = (-1)^n d^n/ds^n G1 psi_s at s = 0; check rho2 with a finite difference
    x = np.array([0.2, 0.3, 0.1, 0.4])
    h = 1e-3
    g = [ga.g1_psi(x, UNIFORM, s) for s in (-h, 0.0, h)]
    second = (g[2] - 2 * g[1] + g[0]) / h ** 2
    p = UNIFORM.moment_params
    assert ga.g1_moments(moment_vector(x).as_array(), p.a2, p.a3)[2] == pytest.approx(second, rel=1e-5)


@pytest.mark.parametrize("fam,expected", [
    (BINOM, [-1 / 4, -1 / 4, -3 / 8]),
    (UNIFORM, [-1 / 6, -1 / 6, -1 / 4]),
])
def test_fast_spectrum(fam, expected):
    n = 10_000
    lam = ga.eigen_analysis(ga.matrices_for_family(fam, n=n))
    pred = ga.fast_eigenvalue_predictions(fam.moment_params.a2, fam.moment_params.a3, n)
    assert np.allclose(np.sort(pred), np.sort(np.array(expected) * n))
    fast = np.sort(lam.real)[:3]
    assert np.allclose(fast, np.sort(pred), rtol=0.01)
    # the remaining modes stay O(1)
    assert np.all(np.abs(np.sort(lam.real)[3:]) < 10)


def test_moment_flow_semigroup_and_validation():
    mats = ga.matrices_for_family(make_family("binomial-biased", 1.0, 50))
    m0 = np.array([1.0, 1.0, 1.3, 1.0, 1.3, 1.1])
    a = ga.moment_flow(ga.moment_flow(m0, mats, 0.1), mats, 0.2)
    assert np.allclose(a, ga.moment_flow(m0, mats, 0.3), rtol=1e-10)
    assert np.array_equal(ga.moment_flow(m0, mats, 0.0), m0)
    # rho1 grows like e^{alpha t}
    assert ga.moment_flow(m0, mats, 0.5)[0] == pytest.approx(np.exp(0.5))
    with pytest.raises(ValueError):
        ga.moment_flow(m0, mats, -1.0)
    with pytest.raises(ValueError):
        ga.moment_matrix_slow(0, 0.25, 0.125, 0, 0, row5="other")


@pytest.mark.parametrize("kind,a2,expect", [
    ("poisson", 0.25, lambda z: z),
    ("negative-binomial", 1 / 3, lambda z: z * (z + 2) / 2),
])
@pytest.mark.parametrize("z", [0.5, 2.0, 4.0])
def test_phi_coefficient_equals_fixed_point_variance(kind, a2, expect, z):
    law = ga.xi_map(kind, z, tail=1e-16)
    drift, coef = ga.g0_phi_coefficients(law, 0.7, a2)
    assert drift == pytest.approx(0.7 * z)
    assert coef == pytest.approx(expect(z), rel=1e-9)
    assert coef == pytest.approx(variance(law), rel=1e-9)
    assert ga.limit_generator_coefficients(kind, z, 0.7) == pytest.approx((0.7 * z, expect(z)))


def test_case2_candidates():
    assert ga.case2_diffusion_candidates(2.0) == {"theorem": 8.0, "derived": 4.0}


def test_beta_ode_matches_closed_form():
    t = np.linspace(0, 2, 41)
    num, closed = ga.beta_ode(2.0, t)
    assert np.max(np.abs(num - closed)) < 1e-9
    assert ga.beta_closed_form(2.0, 1.0) == pytest.approx(0.5)
    # slope at 0 is -z/2
    assert (ga.beta_closed_form(3.0, 1e-7) - 1) / 1e-7 == pytest.approx(-1.5, rel=1e-5)


def test_perturbation_pgf_pieces():
    fam = make_family("binomial-biased", 1.0, 100)
    x = np.array([0.0, 0.5, 0.5])
    # sum_k x_k (-alpha k s (1 - s/2)^(k-1)) at s = 1/2
    expect = 0.5 * (-0.5) + 0.5 * (-2 * 0.5 * 0.75)
    assert ga.mixed_perturbation_pgf(x, fam, 0.5) == pytest.approx(expect)
    assert ga.g0_psi(x, fam, 0.5) == pytest.approx(ga.mixed_pgf(x, fam, 0.5) * expect)
