import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motility_rd.diagnostics import (
    CONVERGE_TO_U_STAR,
    DECAY_TO_W_STAR,
    PATTERN,
    TIMESERIES_HEADER,
    UNDECIDED,
    MassLedger,
    Monitor,
    TrajectorySummary,
    boundedness_watch,
    classify_asymptotics,
    consumption_bound_check,
    ledger_check,
    pattern_metrics,
    plateau_growth,
    w_monotonicity_check,
)
from motility_rd.grid import FieldState, Grid, integrate
from motility_rd.model import ModelParams, MotilitySpec, ResponseSpec
from motility_rd.stepping import SchemeConfig, run

FIG1_GAMMA = MotilitySpec.exponential(10.0, 0.1, 1.0)
HILL2 = ResponseSpec.hill(1.0, 2.0)


def fig1(dcoef=0.1, theta=0.0):
    return ModelParams(1.0, theta, dcoef, FIG1_GAMMA, HILL2)


def perturbed(n=64, seed=0, w=0.0, base=4.0):
    g = Grid(20.0, n)
    rng = np.random.default_rng(seed)
    return FieldState(g, base * (1 + 0.01 * rng.uniform(-1, 1, n)), base * np.ones(n), np.full(n, w))


def test_ledger_exact_for_theta_zero():
    s = perturbed(w=1.0)
    mon = Monitor(fig1())
    run(s, fig1(), SchemeConfig(t_end=2.0, dt=1e-3), [mon], cadence=0.1)
    assert mon.relative_residual <= 1e-12
    assert mon.ledger_failures == 0


def test_ledger_zero_cells_zero_residual():
    g = Grid(20.0, 32)
    s = FieldState(g, np.zeros(32), np.zeros(32), np.full(32, 2.0))
    mon = Monitor(fig1(theta=0.5))
    run(s, fig1(theta=0.5), SchemeConfig(t_end=1.0, dt=1e-2), [mon])
    assert mon.max_abs_residual == 0.0


def test_ledger_theta_halves_with_dt():
    s = perturbed(w=1.0, base=1.0)
    p = fig1(theta=0.5)
    res = []
    for dt in (2e-3, 1e-3):
        mon = Monitor(p)
        run(s, p, SchemeConfig(t_end=2.0, dt=dt), [mon])
        res.append(abs(mon.residuals[-1]))
    assert 1.7 <= res[0] / res[1] <= 2.3


def test_ledger_check_trapezoid_fallback():
    g = Grid(1.0, 8)
    s0 = FieldState(g, np.full(8, 2.0), np.zeros(8), np.zeros(8))
    led = MassLedger.start(s0, fig1(theta=1.0))
    s1 = FieldState(g, np.full(8, 1.0), np.zeros(8), np.zeros(8), 1.0)
    led, ok = ledger_check(s1, led, 1e-12)
    # 1 + 1 * (2 + 1) / 2 - 2 = 0.5
    assert led.residual == pytest.approx(0.5)
    assert not ok


def test_w_monotonicity():
    assert w_monotonicity_check([1.0, 1.0, 1.0]) == (True, None)
    assert w_monotonicity_check([3.0, 2.0, 2.5, 1.0]) == (False, 2)
    assert w_monotonicity_check([1.0, 1.0 + 5e-13]) == (True, None)


def test_consumption_bound():
    assert consumption_bound_check(0.0, 0.0)
    assert consumption_bound_check(10.0, 10.0)
    assert not consumption_bound_check(10.1, 10.0)


def test_no_consumption_without_nutrient():
    mon = Monitor(fig1())
    run(perturbed(), fig1(), SchemeConfig(t_end=1.0, dt=1e-3), [mon])
    assert mon.consumption == 0.0 and mon.w0_mass == 0.0


def test_w_mass_bookkeeping():
    mon = Monitor(fig1())
    run(perturbed(w=1.5), fig1(), SchemeConfig(t_end=3.0, dt=1e-3), [mon])
    assert mon.consumption > 0
    assert mon.w_mass_gap() <= 1e-10


def test_boundedness_watch():
    g = Grid(1.0, 8)
    s = FieldState(g, np.full(8, 4.0), np.full(8, 4.0), np.zeros(8))
    b = boundedness_watch(s, envelope=math.inf)
    assert b.running_max == 4.0 and not b.exceeded
    assert boundedness_watch(s, envelope=1.0).exceeded
    assert plateau_growth([0, 1, 2, 3, 4], [4, 4, 4, 4, 4]) == 0.0
    assert plateau_growth([0, 1, 2, 3, 4], [1, 2, 2, 2, 3]) == pytest.approx(0.5)


def test_pattern_metrics_constant():
    m = pattern_metrics(np.full(64, 4.0))
    assert (m.amplitude, m.dominant_mode, m.peak_count) == (0.0, None, 0)


def test_pattern_metrics_single_mode():
    g = Grid(20.0, 256)
    m = pattern_metrics(4 + np.cos(3 * math.pi * g.x / 20), g)
    assert m.dominant_mode == 3
    assert m.amplitude == pytest.approx(2.0, abs=1e-3)
    assert m.mode_spectrum[2] == pytest.approx(1.0, abs=1e-12)
    assert m.peak_count == 1


@given(n=st.integers(1, 63), amp=st.floats(1e-3, 10.0))
def test_injected_eigenmode_recovered(n, amp):
    g = Grid(13.0, 256)
    assert pattern_metrics(1 + amp * np.cos(n * math.pi * g.x / 13.0), g).dominant_mode == n


def _summary(final_u, tail_noise, n=32, steps=21):
    g = Grid(20.0, n)
    rng = np.random.default_rng(0)
    times = list(np.linspace(0, 100, steps))
    us = [final_u + tail_noise * rng.uniform(-1, 1, n) * (i < steps - 1) for i in range(steps)]
    vs = [u.copy() for u in us]
    ws = [np.zeros(n) for _ in us]
    mass = integrate(final_u, g)
    return TrajectorySummary(g, times, us, vs, ws, mass, 0.0, 0.0)


def test_classifier_examples():
    g = Grid(20.0, 32)
    flat = np.full(32, 4.0)
    r = classify_asymptotics(_summary(flat, 0.0), fig1(100.0))
    assert r.regime == CONVERGE_TO_U_STAR and r.settled
    bumpy = 4 + np.cos(4 * math.pi * g.x / 20)
    bumpy += 4 - bumpy.mean()
    assert classify_asymptotics(_summary(bumpy, 0.0), fig1()).regime == PATTERN
    assert classify_asymptotics(_summary(bumpy, 1e-2), fig1()).regime == UNDECIDED


def test_classifier_decay():
    g = Grid(10.0, 16)
    times = [0.0, 50.0, 99.0, 100.0]
    zeros = np.zeros(16)
    w_end = np.full(16, 0.3)
    summary = TrajectorySummary(g, times, [np.ones(16), zeros, zeros, zeros], [np.ones(16), zeros, zeros, zeros],
                                [np.ones(16), w_end, w_end, w_end], 10.0, 10.0, 7.0)
    r = classify_asymptotics(summary, fig1(theta=1.0))
    assert r.regime == DECAY_TO_W_STAR
    assert r.w_star_pred == pytest.approx(0.3)
    assert r.settling_time == 50.0


def test_classifier_single_snapshot_undecided():
    g = Grid(20.0, 16)
    s = TrajectorySummary(g, [0.0], [np.full(16, 4.0)], [np.full(16, 4.0)], [np.zeros(16)], 80.0, 0.0, 0.0)
    assert classify_asymptotics(s, fig1()).regime == UNDECIDED


ORDER = {UNDECIDED: 0}


@settings(max_examples=200)
@given(offset=st.floats(0.0, 0.2), amp=st.floats(0.0, 0.3), noise=st.floats(0.0, 2e-4), eps=st.floats(1e-4, 0.1))
def test_classifier_scale_consistent(offset, amp, noise, eps):
    g = Grid(20.0, 32)
    u = 4 + offset + amp * np.cos(math.pi * g.x / 20)
    s = _summary(u, noise)
    # mass taken from a shifted state so the final u sits `offset` away from u*
    s.u0_mass -= offset * 20.0
    p = fig1()
    a = classify_asymptotics(s, p, eps_conv=eps).regime
    b = classify_asymptotics(s, p, eps_conv=2 * eps).regime
    if a != UNDECIDED:
        assert b == a


def test_monitor_timeseries_header():
    mon = Monitor(fig1())
    run(perturbed(), fig1(), SchemeConfig(t_end=0.2, dt=1e-2), [mon], cadence=0.1)
    lines = mon.timeseries_csv().splitlines()
    assert lines[0] == TIMESERIES_HEADER
    assert len(lines) == 4


@pytest.mark.slow
def test_fig1_run_diagnostics(long_run):
    out = long_run("d0.1")
    mon = out.monitor
    assert mon.w_monotone() == (True, None)
    assert mon.consumption == 0.0
    assert mon.plateau_growth() < 1e-3
    assert mon.relative_residual <= 1e-12


@pytest.mark.slow
def test_fig1_final_dominant_mode_near_fastest(long_run):
    """Cross-module prediction check on the final state.  Expected to fail:
    coarsening has merged peaks well before t=200 (see the decisions ledger)."""
    out = long_run("d0.1")
    mode = pattern_metrics(out.result.final.u).dominant_mode
    assert abs(mode - out.stability.fastest_mode) <= 2


@pytest.mark.slow
def test_fig1_classified_as_pattern(long_run):
    """Expected to fail at t_end=200: the pattern is still coarsening, so the
    tail is not settled and the verdict is UNDECIDED."""
    assert long_run("d0.1").asymptote.regime == PATTERN


@pytest.mark.slow
def test_large_d_converges(long_run):
    r = long_run("d100").asymptote
    assert r.regime == CONVERGE_TO_U_STAR
    assert max(r.dist_u, r.dist_v) < 1e-2


@pytest.mark.slow
def test_theta_decay(long_run):
    r = long_run("theta0.5").asymptote
    assert r.regime == DECAY_TO_W_STAR and r.w_star_pred > 0
