"""Runtime checks of the conservation identities, bounds and long-time limits.

:class:`Monitor` is an observer hook for :func:`motility_rd.stepping.run`
that keeps the mass ledger, sup-norm histories and the snapshots needed to
classify the long-time behaviour of a run.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.fft import dct

from .grid import FieldState, Grid, integrate
from .model import ModelParams

DECAY_TO_W_STAR = "DECAY_TO_W_STAR"
CONVERGE_TO_U_STAR = "CONVERGE_TO_U_STAR"
PATTERN = "PATTERN"
UNDECIDED = "UNDECIDED"

EPS_CONV = 1e-2
EPS_PAT = 1e-1
SETTLE_TOL = 1e-4
SETTLE_FRACTION = 0.05
W_SLACK = 1e-12
N_SPECTRUM = 64

TIMESERIES_HEADER = "t,mass_u,mass_w,theta_integral,ledger_residual,sup_u,sup_v,sup_w,amplitude_u,dominant_mode"


# -- mass ledger ---------------------------------------------------------------

@dataclass(frozen=True)
class MassLedger:
    alpha: float
    theta: float
    initial_total: float
    current_u_mass: float
    current_w_mass: float
    theta_integral: float = 0.0
    t: float = 0.0

    @classmethod
    def start(cls, state: FieldState, params: ModelParams) -> "MassLedger":
        mu = integrate(state.u, state.grid)
        mw = integrate(state.w, state.grid)
        return cls(params.alpha, params.theta, mu + params.alpha * mw, mu, mw, 0.0, state.t)

    @property
    def residual(self) -> float:
        return self.current_u_mass + self.alpha * self.current_w_mass + self.theta_integral - self.initial_total


def ledger_check(
    state: FieldState,
    ledger: MassLedger,
    tolerance: float = 1e-12,
    theta_integral: Optional[float] = None,
) -> tuple:
    """Update the ledger with ``state``; returns (ledger, passed).

    ``theta_integral`` is the cumulative theta-weighted time integral of the
    u-mass supplied by the stepper (step-level trapezoid).  When omitted the
    increment since the previous check is added by the trapezoid rule on the
    two observation points.
    """
    mu = integrate(state.u, state.grid)
    mw = integrate(state.w, state.grid)
    if theta_integral is None:
        theta_integral = ledger.theta_integral + ledger.theta * (state.t - ledger.t) * 0.5 * (ledger.current_u_mass + mu)
    new = replace(ledger, current_u_mass=mu, current_w_mass=mw, theta_integral=theta_integral, t=state.t)
    ok = math.isfinite(new.residual) and abs(new.residual) <= tolerance * max(1.0, new.initial_total)
    return new, ok


# -- bounds --------------------------------------------------------------------

def w_monotonicity_check(sup_w_history: Sequence[float], slack: float = W_SLACK) -> tuple:
    """(passed, first_violation_index); the index is None when passing."""
    hist = np.asarray(sup_w_history, dtype=float)
    if hist.size == 0:
        raise ValueError("history must be nonempty")
    bad = np.nonzero(hist[1:] > hist[:-1] + slack)[0]
    if bad.size:
        return False, int(bad[0] + 1)
    return True, None


def consumption_bound_check(consumption: float, w0_mass: float) -> bool:
    return consumption <= w0_mass * (1.0 + 1e-10)


@dataclass(frozen=True)
class BoundWatch:
    running_max: float
    exceeded: bool


def boundedness_watch(state: FieldState, envelope: float, previous: Optional[BoundWatch] = None) -> BoundWatch:
    sup_u = float(np.max(state.u))
    running = sup_u if previous is None else max(previous.running_max, sup_u)
    exceeded = sup_u > envelope or (previous is not None and previous.exceeded)
    return BoundWatch(running, exceeded)


def plateau_growth(times: Sequence[float], running_max: Sequence[float]) -> float:
    """Relative growth of the running max of sup u over the final half of the run."""
    times = np.asarray(times, dtype=float)
    rm = np.asarray(running_max, dtype=float)
    t_half = times[0] + 0.5 * (times[-1] - times[0])
    idx = int(np.searchsorted(times, t_half, side="left"))
    base = rm[min(idx, rm.size - 1)]
    return float((rm[-1] - base) / base) if base > 0 else 0.0


# -- pattern metrics -----------------------------------------------------------

@dataclass(frozen=True)
class PatternMetrics:
    amplitude: float
    dominant_mode: Optional[int]
    mode_spectrum: np.ndarray
    peak_count: int


def cosine_coefficients(f) -> np.ndarray:
    """Coefficients a_n of f = a_0/2 + sum a_n cos(n pi x / l) on cell centres."""
    f = np.asarray(f, dtype=float)
    return dct(f, type=2) / f.size


def pattern_metrics(u, grid: Optional[Grid] = None) -> PatternMetrics:
    if isinstance(u, FieldState):
        u = u.u
    u = np.asarray(u, dtype=float)
    if grid is not None:
        grid.check(u)
    amplitude = float(u.max() - u.min())
    coeffs = cosine_coefficients(u)
    floor = 1e-12 * max(1.0, float(np.max(np.abs(u))))
    dominant = None
    if amplitude > floor:
        dominant = int(np.argmax(np.abs(coeffs[1:])) + 1)
    spectrum = coeffs[1 : N_SPECTRUM + 1].copy()
    interior = u[1:-1]
    is_peak = (interior > u[:-2]) & (interior > u[2:]) & (interior > u.min() + 0.05 * amplitude)
    peaks = int(np.count_nonzero(is_peak)) if amplitude > floor else 0
    return PatternMetrics(amplitude, dominant, spectrum, peaks)


# -- long-time classification -----------------------------------------------------

@dataclass
class TrajectorySummary:
    """What the classifier needs from a run: snapshots plus the ledger sums."""

    grid: Grid
    times: list
    us: list
    vs: list
    ws: list
    u0_mass: float
    w0_mass: float
    consumption: float

    @property
    def final(self) -> tuple:
        return self.us[-1], self.vs[-1], self.ws[-1]

    def tail_variation(self, fraction: float = SETTLE_FRACTION) -> float:
        """Largest sup-norm distance to the final fields over the last window."""
        if len(self.times) < 2:
            return math.inf
        t_end = self.times[-1]
        t0 = self.times[0]
        if t_end <= t0:
            return math.inf
        start = t_end - fraction * (t_end - t0)
        var = 0.0
        for t, u, v, w in zip(self.times, self.us, self.vs, self.ws):
            if t < start - 1e-12:
                continue
            var = max(var, np.max(np.abs(u - self.us[-1])), np.max(np.abs(v - self.vs[-1])),
                      np.max(np.abs(w - self.ws[-1])))
        if sum(1 for t in self.times if t >= start - 1e-12) < 2:
            return math.inf
        return float(var)


@dataclass(frozen=True)
class AsymptoteReport:
    regime: str
    u_star_pred: float
    w_star_pred: float
    dist_u: float
    dist_v: float
    dist_w: float
    amplitude: float
    settled: bool
    tail_variation: float
    settling_time: Optional[float]

    def to_text(self) -> str:
        def fmt(x):
            if x is None:
                return "NONE"
            if isinstance(x, bool):
                return "true" if x else "false"
            return repr(x) if isinstance(x, float) else str(x)

        keys = ("regime", "u_star_pred", "w_star_pred", "dist_u", "dist_v", "dist_w",
                "amplitude", "settled", "tail_variation", "settling_time")
        return "".join(f"{k}={fmt(getattr(self, k))}\n" for k in keys)


def _distances(u, v, w, params, u_star, w_star):
    if params.theta > 0:
        return float(np.max(np.abs(u))), float(np.max(np.abs(v))), float(np.max(np.abs(w - w_star)))
    return float(np.max(np.abs(u - u_star))), float(np.max(np.abs(v - u_star))), float(np.max(np.abs(w)))


def classify_asymptotics(
    summary: TrajectorySummary,
    params: ModelParams,
    eps_conv: float = EPS_CONV,
    eps_pat: float = EPS_PAT,
    settle_tol: float = SETTLE_TOL,
) -> AsymptoteReport:
    """Compare the final fields with the limits predicted from the mass ledger.

    theta > 0: u, v -> 0 and w -> w_* = (w0 mass - consumption) / |Omega|.
    theta = 0: (u, v, w) -> (u_*, u_*, 0), u_* = (u0 mass + alpha w0 mass) / |Omega|.
    A settled but spatially nonconstant end state is a PATTERN.  A PATTERN
    verdict is checked before convergence so that enlarging ``eps_conv`` never
    turns one definite verdict into another.
    """
    length = summary.grid.length
    u_star = (summary.u0_mass + params.alpha * summary.w0_mass) / length
    w_star = (summary.w0_mass - summary.consumption) / length
    u, v, w = summary.final
    du, dv, dw = _distances(u, v, w, params, u_star, w_star)
    amplitude = float(u.max() - u.min())
    variation = summary.tail_variation()
    settled = variation < settle_tol

    regime = UNDECIDED
    if settled:
        if amplitude > eps_pat:
            regime = PATTERN
        elif max(du, dv, dw) < eps_conv:
            regime = DECAY_TO_W_STAR if params.theta > 0 else CONVERGE_TO_U_STAR

    settling_time = None
    if regime in (DECAY_TO_W_STAR, CONVERGE_TO_U_STAR):
        for t, uu, vv, ww in zip(reversed(summary.times), reversed(summary.us),
                                 reversed(summary.vs), reversed(summary.ws)):
            if max(_distances(uu, vv, ww, params, u_star, w_star)) >= eps_conv:
                break
            settling_time = t
    return AsymptoteReport(regime, u_star, w_star, du, dv, dw, amplitude, settled, variation, settling_time)


# -- run monitor ---------------------------------------------------------------

@dataclass
class Monitor:
    """Observer hook collecting every diagnostic of a run.

    Attach ``monitor`` to ``run(..., hooks=[monitor])``; afterwards
    :meth:`summary`, :meth:`classify` and :meth:`timeseries_csv` report.
    """

    params: ModelParams
    envelope: float = math.inf
    ledger_tol: float = 1e-12
    ledger: Optional[MassLedger] = None
    times: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    us: list = field(default_factory=list)
    vs: list = field(default_factory=list)
    ws: list = field(default_factory=list)
    sup_w: list = field(default_factory=list)
    running_max: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    ledger_failures: int = 0
    consumption: float = 0.0
    max_w_rise: float = -math.inf
    bound: Optional[BoundWatch] = None
    grid: Optional[Grid] = None
    w0_mass: float = 0.0
    u0_mass: float = 0.0

    def __call__(self, obs) -> None:
        state = obs.state
        if self.ledger is None:
            self.ledger = MassLedger.start(state, self.params)
            self.grid = state.grid
            self.u0_mass = self.ledger.current_u_mass
            self.w0_mass = self.ledger.current_w_mass
        self.ledger, ok = ledger_check(state, self.ledger, self.ledger_tol, obs.theta_integral)
        if not ok:
            self.ledger_failures += 1
        self.consumption = obs.consumption
        self.max_w_rise = max(self.max_w_rise, obs.max_w_rise)
        self.bound = boundedness_watch(state, self.envelope, self.bound)
        metrics = pattern_metrics(state.u)

        self.times.append(state.t)
        self.us.append(state.u)
        self.vs.append(state.v)
        self.ws.append(state.w)
        self.sup_w.append(float(np.max(np.abs(state.w))))
        self.running_max.append(self.bound.running_max)
        self.residuals.append(self.ledger.residual)
        self.rows.append((
            state.t,
            self.ledger.current_u_mass,
            self.ledger.current_w_mass,
            self.ledger.theta_integral,
            self.ledger.residual,
            float(np.max(np.abs(state.u))),
            float(np.max(np.abs(state.v))),
            self.sup_w[-1],
            metrics.amplitude,
            metrics.dominant_mode,
        ))

    @property
    def max_abs_residual(self) -> float:
        return max((abs(r) for r in self.residuals), default=0.0)

    @property
    def relative_residual(self) -> float:
        return self.max_abs_residual / max(self.ledger.initial_total, 1e-300)

    def w_monotone(self) -> tuple:
        return w_monotonicity_check(self.sup_w)

    def consumption_ok(self) -> bool:
        return consumption_bound_check(self.consumption, self.w0_mass)

    def w_mass_gap(self) -> float:
        """|final w mass + consumption - initial w mass| relative to the initial w mass."""
        gap = self.ledger.current_w_mass + self.consumption - self.w0_mass
        return abs(gap) / self.w0_mass if self.w0_mass > 0 else abs(gap)

    def plateau_growth(self) -> float:
        return plateau_growth(self.times, self.running_max)

    def summary(self) -> TrajectorySummary:
        return TrajectorySummary(self.grid, self.times, self.us, self.vs, self.ws,
                                 self.u0_mass, self.w0_mass, self.consumption)

    def classify(self, **kwargs) -> AsymptoteReport:
        return classify_asymptotics(self.summary(), self.params, **kwargs)

    def timeseries_csv(self) -> str:
        buf = io.StringIO()
        buf.write(TIMESERIES_HEADER + "\n")
        for row in self.rows:
            *vals, mode = row
            buf.write(",".join(f"{v:.17g}" for v in vals) + f",{'NONE' if mode is None else mode}\n")
        return buf.getvalue()
