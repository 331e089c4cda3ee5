import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motility_rd.errors import InvalidInput, NegativityBreach, SingularSystem, ValidationError
from motility_rd.grid import FieldState, Grid, integrate
from motility_rd.model import ModelParams, MotilitySpec, ResponseSpec
from motility_rd.stepping import (
    EXPLICIT,
    IMEX,
    SchemeConfig,
    run,
    solve_tridiagonal,
    stable_dt,
    step_explicit,
    step_imex,
)

FIG1_GAMMA = MotilitySpec.exponential(10.0, 0.1, 1.0)
HILL2 = ResponseSpec.hill(1.0, 2.0)


def fig1(dcoef=0.1, alpha=1.0, theta=0.0, response=HILL2):
    return ModelParams(alpha, theta, dcoef, FIG1_GAMMA, response)


def random_state(n=64, length=20.0, seed=0, wbase=1.0):
    g = Grid(length, n)
    rng = np.random.default_rng(seed)
    return FieldState(g, 4 + rng.random(n), 4 + rng.random(n), wbase * rng.random(n))


def total(state, alpha):
    return integrate(state.u, state.grid) + alpha * integrate(state.w, state.grid)


# -- tridiagonal ----------------------------------------------------------------

def test_tridiagonal_identity():
    r = np.array([1.0, -2.0, 3.0, 0.5])
    np.testing.assert_array_equal(solve_tridiagonal(np.zeros(3), np.ones(4), np.zeros(3), r), r)


def test_tridiagonal_small_example():
    x = solve_tridiagonal([-1.0, -1.0], [2.0, 2.0, 2.0], [-1.0, -1.0], [1.0, 0.0, 1.0])
    np.testing.assert_allclose(x, [1.0, 1.0, 1.0], rtol=0, atol=1e-15)


def test_tridiagonal_dominant_residual():
    rng = np.random.default_rng(1)
    n = 100
    sub, sup = rng.uniform(-1, 1, n - 1), rng.uniform(-1, 1, n - 1)
    diag = 2.5 + rng.random(n)
    b = rng.normal(size=n)
    x = solve_tridiagonal(sub, diag, sup, b)
    a = np.diag(diag) + np.diag(sub, -1) + np.diag(sup, 1)
    assert np.linalg.norm(a @ x - b) <= 1e-12 * np.linalg.norm(b)


def test_tridiagonal_errors():
    with pytest.raises(SingularSystem):
        solve_tridiagonal([1.0], [0.0, 1.0], [1.0], [1.0, 1.0])
    with pytest.raises(InvalidInput):
        solve_tridiagonal([1.0, 1.0], [1.0, 1.0], [1.0], [1.0, 1.0])


# -- step size ------------------------------------------------------------------

def test_stable_dt_examples():
    g = Grid(20.0, 512)
    s = FieldState(g, np.full(512, 4.0), np.zeros(512), np.zeros(512))
    dx = 20.0 / 512
    assert stable_dt(fig1(), s, 0.9) == pytest.approx(0.9 * dx * dx / (2 * 10.1), rel=1e-14)
    assert stable_dt(fig1(), s, 0.9) == pytest.approx(6.7985e-05, rel=1e-4)
    g1 = Grid(8.0, 8)
    s1 = FieldState(g1, np.ones(8), np.ones(8), np.zeros(8))
    const = ModelParams(1.0, 0.0, 1.0, MotilitySpec.constant(1.0), ResponseSpec.linear())
    assert stable_dt(const, s1, 1.0) == 0.5
    assert stable_dt(const.replace(dcoef=100.0), s1, 0.7) == pytest.approx(0.7 / 200)


def test_scheme_config_validation():
    with pytest.raises(ValidationError):
        SchemeConfig(mode="rk4")
    with pytest.raises(ValidationError):
        SchemeConfig(dt=0.0)


# -- single steps -----------------------------------------------------------------

@pytest.mark.parametrize("step", [step_explicit, step_imex])
def test_equilibrium_is_fixed_point(step):
    g = Grid(20.0, 64)
    s = FieldState(g, np.full(64, 4.0), np.full(64, 4.0), np.zeros(64))
    for _ in range(50):
        s = step(s, fig1(), 1e-3)
    np.testing.assert_array_equal(s.u, 4.0)
    np.testing.assert_array_equal(s.v, 4.0)
    np.testing.assert_array_equal(s.w, 0.0)


def test_explicit_without_cells():
    g = Grid(20.0, 32)
    s = FieldState(g, np.zeros(32), np.full(32, 2.0), np.full(32, 1.5))
    for _ in range(10):
        s = step_explicit(s, fig1(), 1e-3)
    assert np.all(s.u == 0.0)
    assert np.all(s.w == 1.5)
    np.testing.assert_allclose(s.v, 2.0 * (1 - 1e-3) ** 10, rtol=1e-14)


def test_imex_signal_decay_closed_form():
    g = Grid(20.0, 32)
    s = FieldState(g, np.zeros(32), np.full(32, 3.0), np.zeros(32))
    dt = 0.05
    for _ in range(20):
        s = step_imex(s, fig1(), dt)
    np.testing.assert_allclose(s.v, 3.0 / (1 + dt) ** 20, rtol=1e-13)


@pytest.mark.parametrize("step", [step_explicit, step_imex])
def test_one_step_ledger(step):
    s = random_state(seed=2)
    p = fig1()
    dt = 0.9 * stable_dt(p, s, 0.9)
    m0 = total(s, p.alpha)
    s1 = step(s, p, dt)
    assert abs(total(s1, p.alpha) - m0) <= 1e-12 * m0


def test_step_rejects_bad_dt():
    with pytest.raises(InvalidInput):
        step_explicit(random_state(), fig1(), 0.0)


def test_negativity_aborts():
    g = Grid(20.0, 32)
    u = np.zeros(32)
    u[16] = 50.0
    s = FieldState(g, u, np.zeros(32), np.zeros(32))
    with pytest.raises(NegativityBreach):
        step_explicit(s, fig1(), 0.5)


# -- full runs --------------------------------------------------------------------

def test_run_zero_horizon_returns_initial():
    s = random_state()
    res = run(s, fig1(), SchemeConfig(t_end=0.0))
    assert res.final.same_as(s)
    assert res.steps == 0
    assert len(res.observations) == 1


def test_run_equilibrium_stays_put():
    g = Grid(20.0, 64)
    s = FieldState(g, np.full(64, 4.0), np.full(64, 4.0), np.zeros(64))
    res = run(s, fig1(), SchemeConfig(t_end=1.0, dt=1e-2))
    assert np.max(np.abs(res.final.u - 4.0)) == 0.0


def test_hooks_fire_at_cadence():
    seen = []
    run(random_state(), fig1(), SchemeConfig(t_end=1.0, dt=1e-3), [lambda o: seen.append(o.state.t)], cadence=0.25)
    np.testing.assert_allclose(seen, [0, 0.25, 0.5, 0.75, 1.0], atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    alpha=st.floats(0.0, 3.0),
    mode=st.sampled_from([EXPLICIT, IMEX]),
)
def test_ledger_exact_and_nonnegative(seed, alpha, mode):
    s = random_state(n=48, seed=seed)
    p = fig1(alpha=alpha)
    scheme = SchemeConfig(mode=mode, dt_policy="auto", t_end=0.5) if mode == EXPLICIT else SchemeConfig(t_end=0.5, dt=1e-3)
    m0 = total(s, alpha)
    residuals = []

    def hook(obs):
        residuals.append(abs(total(obs.state, alpha) - m0))
        assert obs.state.is_nonnegative()

    run(s, p, scheme, [hook], cadence=0.05)
    assert max(residuals) <= 1e-12 * m0


def test_w_maximum_principle():
    s = random_state(seed=5, wbase=3.0)
    p = fig1(response=ResponseSpec.linear())
    maxima = []
    run(s, p, SchemeConfig(mode=EXPLICIT, dt_policy="auto", t_end=2.0), [lambda o: maxima.append(o.state.w.max())], cadence=0.01)
    assert np.all(np.diff(maxima) <= 1e-12)


def test_imex_approaches_explicit():
    g = Grid(20.0, 64)
    x = g.x
    s = FieldState(g, 4 + 0.5 * np.cos(math.pi * x / 20), 4 + 0.3 * np.cos(2 * math.pi * x / 20), 0.5 + 0.2 * np.cos(math.pi * x / 10))
    p = fig1(response=ResponseSpec.linear())
    ref = run(s, p, SchemeConfig(mode=EXPLICIT, dt=1e-5, t_end=0.1)).final
    diffs = []
    for dt in (1e-3, 5e-4):
        out = run(s, p, SchemeConfig(mode=IMEX, dt=dt, t_end=0.1)).final
        diffs.append(max(np.max(np.abs(out.u - ref.u)), np.max(np.abs(out.v - ref.v)), np.max(np.abs(out.w - ref.w))))
    assert diffs[0] <= 1e-3
    assert 1.6 < diffs[0] / diffs[1] < 2.4
