import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from cnvmoran.inheritance import make_family
from cnvmoran.observables import moment_vector
from cnvmoran.population import (
    EventCapExceeded, InitialSpec, PopulationState, apply_generator_exact, birth_death_rates,
    init_state, simulate, simulate_all_or_nothing, simulate_batch, step,
)


def test_state_validation():
    with pytest.raises(ValueError, match="sum"):
        PopulationState(5, [2, 2])
    with pytest.raises(ValueError, match="nonnegative"):
        PopulationState(1, [2, -1])
    s = PopulationState.from_types([0, 2, 2, 5])
    assert s.n_individuals == 4 and s.k_max == 5
    assert list(s.occupied) == [0, 2, 5]
    assert sorted(s.to_types()) == [0, 2, 2, 5]


def test_init_state_kinds():
    rng = np.random.default_rng(0)
    s = init_state(2000, InitialSpec("iid-poisson", 1.5), rng)
    assert s.n_individuals == 2000
    assert abs(moment_vector(s)[0] - 1.5) < 0.15
    nb = init_state(4000, InitialSpec("iid-negbin", 2.0), rng)
    # NB(2, 1/2): mean 2, variance 4
    assert abs(moment_vector(nb)[0] - 2.0) < 0.2
    h = init_state(3, InitialSpec("histogram", histogram=(1, 2)))
    assert list(h.counts) == [1, 2]
    with pytest.raises(ValueError):
        init_state(4, InitialSpec("histogram", histogram=(1, 2)))
    with pytest.raises(ValueError):
        InitialSpec("iid-poisson", -1.0)


def test_step_on_all_zero_state_changes_nothing_but_time():
    fam = make_family("uniform", 0.0, 10)
    state = PopulationState(10, [10])
    rng = np.random.default_rng(1)
    elapsed = []
    for _ in range(20000):
        new, dt, ev = step(state, fam, rng)
        assert list(new.counts[:1]) == [10] and new.counts[1:].sum() == 0
        assert ev.offspring_type == 0
        elapsed.append(dt)
    # event rate N^2 / 2, so the mean holding time is 2 / N^2
    assert np.mean(elapsed) == pytest.approx(2 / 100, rel=0.03)


def test_step_draws_dying_individual_uniformly():
    fam = make_family("binomial-biased", 0.0, 10)
    state = PopulationState(10, [5, 3, 2])
    rng = np.random.default_rng(2)
    dying = np.zeros(3)
    for _ in range(6000):
        new, _, ev = step(state, fam, rng)
        dying[ev.dying_type] += 1
        assert new.n_individuals == 10
        assert ev.offspring_type == sum(ev.contributions)
        assert all(c <= p for c, p in zip(ev.contributions, ev.parent_types))
    assert stats.chisquare(dying, 6000 * state.frequencies).pvalue > 1e-3


def test_event_log_replays_to_recorded_moments():
    fam = make_family("uniform", 0.0, 30)
    rng = np.random.default_rng(4)
    s0 = init_state(30, InitialSpec("iid-poisson", 2.0), rng)
    traj = simulate(s0, fam, 0.5, [0.25, 0.5], observers=("rho1", "rho2", "rho3"),
                    seed=11, record_events=True)
    log = traj.events
    assert log.shape[1] == 7
    assert np.all(np.diff(log[:, 0]) > 0) and log[-1, 0] <= 0.5
    assert np.all(log[:, 6] == log[:, 4] + log[:, 5])
    assert np.all(log[:, 4] <= log[:, 2]) and np.all(log[:, 5] <= log[:, 3])
    counts = np.zeros(200, dtype=np.int64)
    counts[: s0.counts.size] = s0.counts
    for row in log:
        counts[int(row[1])] -= 1
        counts[int(row[6])] += 1
        assert counts.min() >= 0
    mv = moment_vector(PopulationState(30, counts))
    assert traj["rho1"][-1] == pytest.approx(mv[0])
    assert traj["rho2"][-1] == pytest.approx(mv[2])
    assert traj["rho3"][-1] == pytest.approx(mv[5])
    # about N^2 t / 2 events
    assert abs(len(log) - 225) < 6 * np.sqrt(225)


def test_simulate_is_a_function_of_the_seed():
    fam = make_family("binomial-biased", 1.0, 40)
    s0 = PopulationState(40, [10, 10, 10, 10])
    grid = np.linspace(0.1, 1.0, 10)
    a = simulate(s0, fam, 1.0, grid, seed=5)
    b = simulate(s0, fam, 1.0, grid, seed=5)
    c = simulate(s0, fam, 1.0, grid, seed=6)
    assert np.array_equal(a["phi"], b["phi"])
    assert not np.array_equal(a["phi"], c["phi"])
    batch = simulate_batch(np.tile(s0.to_types(), (3, 1)), fam, 1.0, grid, [6, 5, 6])
    assert np.array_equal(batch.phi[1], a["phi"])
    assert np.array_equal(batch.phi[0], c["phi"]) and np.array_equal(batch.phi[2], c["phi"])


def test_callable_observer_and_snapshots():
    fam = make_family("uniform", 0.0, 20)
    s0 = PopulationState(20, [0, 20])
    traj = simulate(s0, fam, 0.3, [0.1, 0.3], observers={"zeros": lambda s: s.counts[0]}, seed=3)
    assert traj["zeros"].shape == (2,)
    res = simulate_batch(np.tile(s0.to_types(), (2, 1)), fam, 0.3, [0.1, 0.3], [1, 2],
                         snapshot_times=[0.3])
    snap = res.snapshot_state(0, 0)
    assert snap.n_individuals == 20
    assert moment_vector(snap)[0] == pytest.approx(res.phi[0, 1])
    with pytest.raises(ValueError, match="not on the grid"):
        simulate_batch(np.tile(s0.to_types(), (1, 1)), fam, 0.3, [0.1], [1], snapshot_times=[0.2])


def test_grid_semantics_left_limit():
    fam = make_family("uniform", 0.0, 20)
    s0 = PopulationState(20, [0, 0, 20])
    traj = simulate(s0, fam, 1.0, [0.0, 1.0], seed=1)
    assert traj["phi"][0] == 2.0


def test_input_checks():
    fam = make_family("uniform", 0.0, 10)
    s0 = PopulationState(10, [10])
    with pytest.raises(ValueError, match="increasing"):
        simulate(s0, fam, 1.0, [0.5, 0.2])
    with pytest.raises(ValueError, match="within"):
        simulate(s0, fam, 1.0, [2.0])
    with pytest.raises(ValueError, match="N="):
        simulate(PopulationState(5, [5]), fam, 1.0, [1.0])
    with pytest.raises(ValueError, match="observer"):
        simulate(s0, fam, 1.0, [1.0], observers=("nope",))
    with pytest.raises(EventCapExceeded):
        simulate(s0, fam, 1.0, [1.0], max_events=10)


def test_custom_table_range_is_reported():
    fam = make_family("custom-table", 0.0, 4, custom_probs=[[1.0], [0.5, 0.5]])
    with pytest.raises(ValueError, match="k_max"):
        simulate(PopulationState(4, [0, 0, 4]), fam, 1.0, [1.0])


@settings(max_examples=25, deadline=None)
@given(hist=st.lists(st.integers(0, 4), min_size=1, max_size=5).filter(lambda h: sum(h) > 0),
       s=st.floats(0.05, 0.95))
def test_exact_generator_kills_constants_and_is_linear(hist, s):
    n = sum(hist)
    fam = make_family("uniform", 0.0, n)
    state = PopulationState(n, hist)
    assert apply_generator_exact(state, fam, lambda x: 3.0) == 0.0
    f = lambda x: float(np.sum(x * (1 - s) ** np.arange(x.size)))
    g = lambda x: float(np.sum(x * np.arange(x.size)))
    lhs = apply_generator_exact(state, fam, lambda x: 2 * f(x) - g(x))
    rhs = 2 * apply_generator_exact(state, fam, f) - apply_generator_exact(state, fam, g)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_exact_generator_on_mean_without_bias_is_zero():
    # E[offspring] = rho1 under unbiased inheritance, so G Phi = 0
    for kind in ("binomial-biased", "uniform", "all-or-nothing"):
        fam = make_family(kind, 0.0, 12)
        state = PopulationState(12, [3, 4, 2, 3])
        assert apply_generator_exact(state, fam, lambda x: float(np.arange(x.size) @ x)) == pytest.approx(0, abs=1e-9)


def test_all_or_nothing_chain():
    up, down = birth_death_rates(50, 25)
    assert up - down == pytest.approx(50 ** 2 / 16)
    run = simulate_all_or_nothing(30, 0, 50.0, seed=9)
    counts = np.asarray(run.trajectory["zero_count"])
    assert counts[0] == 0
    assert np.all(np.abs(np.diff(counts)) == 1)
    assert run.hitting_time is not None and counts[-1] == 30
    assert simulate_all_or_nothing(30, 30, 1.0).hitting_time == 0.0
    with pytest.raises(ValueError):
        simulate_all_or_nothing(30, 31, 1.0)
