"""Time integration: forward Euler and IMEX (implicit diffusion) steppers.

Reaction terms are evaluated once per step and shared between the u and w
updates, so u-mass + alpha * w-mass changes only through the death term.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from . import _kernels
from .errors import (
    InvalidInput,
    NegativityBreach,
    NonFinite,
    SingularSystem,
    SolverError,
    ValidationError,
)
from .grid import EPS_NEG, FieldState
from .model import ModelParams, eval_motility

logger = logging.getLogger(__name__)

EXPLICIT, IMEX = "explicit", "imex"
FIXED, AUTO = "fixed", "auto"


@dataclass(frozen=True)
class SchemeConfig:
    mode: str = IMEX
    dt_policy: str = FIXED
    dt: float = 1e-3
    safety: float = 0.9
    t_end: float = 200.0
    max_steps: int = 10**9

    def __post_init__(self):
        errs = []
        if self.mode not in (EXPLICIT, IMEX):
            errs.append(f"mode must be 'explicit' or 'imex', got {self.mode!r}")
        if self.dt_policy not in (FIXED, AUTO):
            errs.append(f"dt_policy must be 'fixed' or 'auto', got {self.dt_policy!r}")
        if self.dt_policy == FIXED and not self.dt > 0:
            errs.append("dt must be > 0")
        if not 0 < self.safety <= 1:
            errs.append("safety must lie in (0, 1]")
        if not self.t_end >= 0:
            errs.append("t_end must be >= 0")
        if self.max_steps < 1:
            errs.append("max_steps must be >= 1")
        if errs:
            raise ValidationError(errs)


@dataclass(frozen=True)
class Observation:
    """Immutable snapshot handed to observer hooks.

    ``theta_integral`` and ``consumption`` are cumulative since the start of
    the run; ``max_w_rise`` is the largest single-step increase of max(w).
    """

    state: FieldState
    step: int
    theta_integral: float
    consumption: float
    max_w_rise: float


@dataclass
class RunResult:
    final: FieldState
    observations: list = field(default_factory=list)
    steps: int = 0
    completed: bool = True


def stable_dt(params: ModelParams, state: FieldState, safety: float = 0.9) -> float:
    """Explicit diffusion limit safety * dx^2 / (2 max(gamma_max, D, 1))."""
    gmax = float(np.max(eval_motility(params.motility, np.maximum(state.v, 0.0))))
    dx = state.grid.dx
    return safety * dx * dx / (2.0 * max(gmax, params.dcoef, 1.0))


def solve_tridiagonal(sub, diag, sup, rhs) -> np.ndarray:
    """Thomas algorithm.  ``sub`` and ``sup`` hold the n-1 off-diagonals."""
    diag = np.asarray(diag, dtype=float)
    n = diag.shape[0]
    sub = np.asarray(sub, dtype=float)
    sup = np.asarray(sup, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if sub.shape != (n - 1,) or sup.shape != (n - 1,) or rhs.shape != (n,):
        raise InvalidInput("tridiagonal bands must have lengths n-1, n, n-1 and rhs length n")
    lo = np.concatenate(([0.0], sub))
    hi = np.concatenate((sup, [0.0]))
    out = np.empty(n)
    if not _kernels.thomas(lo, diag, hi, rhs, out, np.empty(n)):
        raise SingularSystem("tridiagonal pivot below 1e-14")
    return out


_STATUS_ERRORS = {
    _kernels.NEGATIVE: (NegativityBreach, "field dropped below -1e-12"),
    _kernels.NONFINITE: (NonFinite, "non-finite value produced"),
    _kernels.SINGULAR: (SingularSystem, "tridiagonal pivot below 1e-14"),
}


def _advance(u, v, w, t, t_target, params, grid, *, imex, auto, dt, safety, max_steps, step0=0):
    res = _kernels.advance(
        u, v, w, float(t), float(t_target), grid.dx,
        params.alpha, params.theta, params.dcoef,
        *params.motility.kernel_args(), *params.response.kernel_args(),
        imex, auto, float(dt), float(safety), int(max_steps), EPS_NEG,
    )
    t_new, steps, theta_int, cons, w_rise, status = res
    if status in _STATUS_ERRORS:
        cls, msg = _STATUS_ERRORS[status]
        raise cls(msg, step=step0 + steps, t=t_new)
    return t_new, steps, theta_int, cons, w_rise, status == _kernels.MAX_STEPS


def _single_step(state, params, dt, imex):
    if not dt > 0:
        raise InvalidInput("dt must be > 0")
    u, v, w = (np.array(a) for a in (state.u, state.v, state.w))
    t, *_ = _advance(u, v, w, state.t, state.t + dt, params, state.grid,
                     imex=imex, auto=False, dt=dt, safety=1.0, max_steps=1)
    return state.with_fields(u, v, w, t)


def step_explicit(state: FieldState, params: ModelParams, dt: float) -> FieldState:
    """One forward Euler step.  The caller is responsible for dt <= stable_dt."""
    return _single_step(state, params, dt, imex=False)


def step_imex(state: FieldState, params: ModelParams, dt: float) -> FieldState:
    """One step with backward Euler diffusion (motility frozen at the old v)
    and forward Euler reactions."""
    return _single_step(state, params, dt, imex=True)


Hook = Callable[[Observation], None]


def run(
    state0: FieldState,
    params: ModelParams,
    scheme: SchemeConfig,
    hooks: Iterable[Hook] = (),
    cadence: Optional[float] = None,
) -> RunResult:
    """Integrate to ``scheme.t_end``, calling every hook at t0, at multiples of
    ``cadence`` and at the final time.
    """
    hooks = list(hooks)
    t_end = state0.t + scheme.t_end
    if cadence is None or cadence <= 0:
        cadence = scheme.t_end if scheme.t_end > 0 else 1.0
    grid = state0.grid
    u, v, w = (np.array(a) for a in (state0.u, state0.v, state0.w))

    obs = Observation(state0, 0, 0.0, 0.0, -np.inf)
    result = RunResult(final=state0, observations=[obs])
    for hook in hooks:
        hook(obs)

    t = state0.t
    steps = 0
    theta_int = cons = 0.0
    w_rise = -np.inf
    k = 1
    while t < t_end:
        target = min(state0.t + k * cadence, t_end)
        k += 1
        if target <= t:
            continue
        try:
            t, n, d_theta, d_cons, rise, capped = _advance(
                u, v, w, t, target, params, grid,
                imex=scheme.mode == IMEX, auto=scheme.dt_policy == AUTO,
                dt=scheme.dt, safety=scheme.safety,
                max_steps=scheme.max_steps - steps, step0=steps,
            )
        except SolverError:
            logger.error("solver failure before t=%g", target)
            raise
        steps += n
        theta_int += d_theta
        cons += d_cons
        w_rise = max(w_rise, rise)
        state = FieldState(grid, u, v, w, t)
        obs = Observation(state, steps, theta_int, cons, w_rise)
        result.observations.append(obs)
        result.final = state
        for hook in hooks:
            hook(obs)
        if capped:
            logger.warning("max_steps=%d reached at t=%g", scheme.max_steps, t)
            result.completed = False
            break
    result.steps = steps
    return result
