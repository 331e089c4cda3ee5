"""Model definition: motility function, functional response and parameters.

The system simulated throughout the package is

    u_t = Lap(gamma(v) u) + alpha u F(w) - theta u
    v_t = D Lap(v) + u - v
    w_t = Lap(w) - u F(w)

with zero-flux boundaries.  ``gamma`` is a positive, bounded motility that
decreases with the signal ``v``; ``F`` is a nutrient response with F(0)=0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InvalidInput, InvalidRange, NegativeInput, NonPositiveMotility, ValidationError

# integer family codes shared with the compiled kernels
MOT_EXPONENTIAL, MOT_CONSTANT, MOT_TABLE = 0, 1, 2
RESP_LINEAR, RESP_MICHAELIS, RESP_HILL = 0, 1, 2

_MOT_TAGS = {"exponential": MOT_EXPONENTIAL, "constant": MOT_CONSTANT, "table": MOT_TABLE}
_RESP_TAGS = {"linear": RESP_LINEAR, "michaelis": RESP_MICHAELIS, "hill": RESP_HILL}


def _as_nonnegative(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise NegativeInput(f"{name} must be >= 0")
    return arr


def _scalar_or_array(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


@dataclass(frozen=True)
class MotilitySpec:
    """Signal-dependent motility ``gamma(v)``.

    Build instances through :meth:`exponential`, :meth:`constant` or
    :meth:`table` rather than the raw constructor.
    """

    family: str
    gamma0: float = 0.0
    gamma1: float = 0.0
    lam: float = 0.0
    value: float = 0.0
    knots: tuple = ()
    knot_values: tuple = ()

    def __post_init__(self):
        if self.family not in _MOT_TAGS:
            raise ValidationError(f"unknown motility family {self.family!r}")
        if self.family == "exponential":
            errs = []
            if not self.gamma0 >= 0:
                errs.append("gamma0 must be >= 0")
            if not self.gamma1 > 0:
                errs.append("gamma1 must be > 0")
            if not self.lam > 0:
                errs.append("lambda must be > 0")
            if errs:
                raise ValidationError(errs)
        elif self.family == "constant":
            if not self.value > 0:
                raise ValidationError("constant motility must be > 0")
        else:
            if len(self.knots) < 2 or len(self.knots) != len(self.knot_values):
                raise ValidationError("table motility needs >= 2 knots with matching values")
            if np.any(np.diff(self.knots) <= 0):
                raise ValidationError("table knots must be strictly increasing")

    @classmethod
    def exponential(cls, gamma0: float, gamma1: float, lam: float) -> "MotilitySpec":
        return cls("exponential", gamma0=float(gamma0), gamma1=float(gamma1), lam=float(lam))

    @classmethod
    def constant(cls, value: float) -> "MotilitySpec":
        return cls("constant", value=float(value))

    @classmethod
    def table(cls, knots: Sequence[float], values: Sequence[float]) -> "MotilitySpec":
        return cls(
            "table",
            knots=tuple(float(k) for k in knots),
            knot_values=tuple(float(g) for g in values),
        )

    @property
    def code(self) -> int:
        return _MOT_TAGS[self.family]

    @cached_property
    def _pchip(self):
        return PchipInterpolator(np.array(self.knots), np.array(self.knot_values), extrapolate=False)

    def kernel_args(self):
        """Flattened representation consumed by the compiled steppers."""
        if self.family == "table":
            pp = self._pchip
            return (self.code, 0.0, 0.0, 0.0, np.ascontiguousarray(pp.x), np.ascontiguousarray(pp.c))
        a, b, c = (self.gamma0, self.gamma1, self.lam) if self.family == "exponential" else (0.0, self.value, 0.0)
        return (self.code, a, b, c, np.zeros(2), np.zeros((4, 1)))

    @property
    def upper_bound(self) -> float:
        if self.family == "exponential":
            return self.gamma1 + self.gamma0
        if self.family == "constant":
            return self.value
        return max(self.knot_values)

    @property
    def lower_bound(self) -> float:
        if self.family == "exponential":
            return self.gamma1
        if self.family == "constant":
            return self.value
        return min(self.knot_values)

    def to_dict(self) -> dict:
        if self.family == "exponential":
            return {"gamma": "exponential", "gamma0": self.gamma0, "gamma1": self.gamma1, "lambda": self.lam}
        if self.family == "constant":
            return {"gamma": "constant", "gamma_c": self.value}
        return {
            "gamma": "table",
            "knots": ",".join(repr(k) for k in self.knots),
            "values": ",".join(repr(g) for g in self.knot_values),
        }


@dataclass(frozen=True)
class ResponseSpec:
    """Nutrient uptake response ``F(w)`` (Holling-type families)."""

    family: str
    lam: float = 1.0
    m: float = 1.0

    def __post_init__(self):
        if self.family not in _RESP_TAGS:
            raise ValidationError(f"unknown response family {self.family!r}")
        if self.family in ("michaelis", "hill") and not self.lam > 0:
            raise ValidationError("response half-saturation must be > 0")
        if self.family == "hill" and not self.m > 1:
            raise ValidationError("hill exponent m must be > 1")

    @classmethod
    def linear(cls) -> "ResponseSpec":
        return cls("linear")

    @classmethod
    def michaelis(cls, lam: float) -> "ResponseSpec":
        return cls("michaelis", lam=float(lam))

    @classmethod
    def hill(cls, lam: float, m: float) -> "ResponseSpec":
        return cls("hill", lam=float(lam), m=float(m))

    @property
    def code(self) -> int:
        return _RESP_TAGS[self.family]

    def kernel_args(self):
        return (self.code, self.lam, self.m)

    def to_dict(self) -> dict:
        if self.family == "linear":
            return {"response": "linear"}
        if self.family == "michaelis":
            return {"response": "michaelis", "response_lambda": self.lam}
        return {"response": "hill", "response_lambda": self.lam, "m": self.m}


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    theta: float
    dcoef: float
    motility: MotilitySpec
    response: ResponseSpec

    def __post_init__(self):
        errs = []
        if not self.alpha >= 0:
            errs.append("alpha must be >= 0")
        if not self.theta >= 0:
            errs.append("theta must be >= 0")
        if not self.dcoef > 0:
            errs.append("dcoef must be > 0")
        if errs:
            raise ValidationError(errs)

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        out = {"alpha": self.alpha, "theta": self.theta, "dcoef": self.dcoef}
        out.update(self.motility.to_dict())
        out.update(self.response.to_dict())
        return out


@dataclass(frozen=True)
class HypothesisReport:
    h1_ok: bool
    gamma_lo: float
    gamma_hi: float
    eta_est: float
    h2_ok: bool
    h2_warnings: tuple = ()
    h1_errors: tuple = ()
    h2_errors: tuple = ()
    v_range: tuple = (0.0, 0.0)
    w_range: tuple = (0.0, 0.0)
    n_samples: int = 0

    @property
    def ok(self) -> bool:
        return self.h1_ok and self.h2_ok


def eval_motility(spec: MotilitySpec, v):
    """Return gamma(v); accepts scalars or arrays."""
    arr = _as_nonnegative(v, "v")
    if spec.family == "exponential":
        out = spec.gamma1 + spec.gamma0 * np.exp(-spec.lam * arr)
    elif spec.family == "constant":
        out = np.full_like(arr, spec.value)
    else:
        clamped = np.clip(arr, spec.knots[0], spec.knots[-1])
        out = spec._pchip(clamped)
        if np.any(out <= 0):
            raise NonPositiveMotility("table motility evaluates to a non-positive value")
    return _scalar_or_array(out, v)


def eval_motility_deriv(spec: MotilitySpec, v):
    """Return gamma'(v).  Table motility has zero slope outside its knot range."""
    arr = _as_nonnegative(v, "v")
    if spec.family == "exponential":
        out = -spec.lam * spec.gamma0 * np.exp(-spec.lam * arr)
    elif spec.family == "constant":
        out = np.zeros_like(arr)
    else:
        inside = (arr >= spec.knots[0]) & (arr <= spec.knots[-1])
        clamped = np.clip(arr, spec.knots[0], spec.knots[-1])
        out = np.where(inside, spec._pchip.derivative()(clamped), 0.0)
    return _scalar_or_array(out, v)


def eval_response(spec: ResponseSpec, w):
    """Return F(w); F(0) is exactly 0 for every family."""
    arr = _as_nonnegative(w, "w")
    if spec.family == "linear":
        out = arr.copy()
    elif spec.family == "michaelis":
        out = arr / (spec.lam + arr)
    else:
        wm = arr ** spec.m
        out = wm / (spec.lam + wm)
    return _scalar_or_array(out, w)


def eval_response_deriv(spec: ResponseSpec, w):
    arr = _as_nonnegative(w, "w")
    if spec.family == "linear":
        out = np.ones_like(arr)
    elif spec.family == "michaelis":
        out = spec.lam / (spec.lam + arr) ** 2
    else:
        m, lam = spec.m, spec.lam
        out = m * lam * arr ** (m - 1) / (lam + arr**m) ** 2
    return _scalar_or_array(out, w)


def validate_hypotheses(
    params: ModelParams, v_max: float, w_max: float, n_samples: int = 10_001
) -> HypothesisReport:
    """Sample gamma on [0, v_max] and F on [0, w_max].

    h1 covers gamma (positive, finite derivative); h2 covers F (F(0) = 0,
    positive and nondecreasing on (0, w_max]).

    A vanishing F'(0) is reported as a warning rather than a failure: the
    Hill family with m > 1, used in the reference pattern experiments, has
    F'(0) = 0.
    """
    if not (v_max > 0 and w_max > 0) or n_samples < 2:
        raise InvalidRange("need v_max > 0, w_max > 0 and n_samples >= 2")
    vs = np.linspace(0.0, v_max, n_samples)
    ws = np.linspace(0.0, w_max, n_samples)

    h1_errors = []
    mot = params.motility
    if mot.family == "table":
        # evaluate without the positivity guard so the report can flag it;
        # the knots themselves are sampled since PCHIP minima sit on them
        vs = np.union1d(vs, np.asarray(mot.knots)[np.asarray(mot.knots) <= v_max])
        g = mot._pchip(np.clip(vs, mot.knots[0], mot.knots[-1]))
    else:
        g = eval_motility(mot, vs)
    dg = eval_motility_deriv(mot, vs)
    if not np.all(np.isfinite(g)) or not np.all(np.isfinite(dg)):
        h1_errors.append("gamma or gamma' not finite on sampled range")
    gamma_lo, gamma_hi = float(np.min(g)), float(np.max(g))
    if gamma_lo <= 0:
        h1_errors.append(f"gamma not strictly positive (min {gamma_lo:.6g})")
    eta = float(np.max(np.abs(dg)))

    h2_errors, h2_warnings = [], []
    resp = params.response
    f = eval_response(resp, ws)
    if eval_response(resp, 0.0) != 0.0:
        h2_errors.append("F(0) != 0")
    if np.any(f[1:] <= 0):
        h2_errors.append("F not positive on (0, w_max]")
    if np.any(np.diff(f) < 0):
        h2_errors.append("F not nondecreasing on sampled range")
    if eval_response_deriv(resp, 0.0) == 0.0:
        h2_warnings.append("F'(0)=0")

    return HypothesisReport(
        h1_ok=not h1_errors,
        gamma_lo=gamma_lo,
        gamma_hi=gamma_hi,
        eta_est=eta,
        h2_ok=not h2_errors,
        h2_warnings=tuple(h2_warnings),
        h1_errors=tuple(h1_errors),
        h2_errors=tuple(h2_errors),
        v_range=(0.0, float(v_max)),
        w_range=(0.0, float(w_max)),
        n_samples=int(n_samples),
    )


def boundedness_envelope(params: ModelParams, c1: float = 1.0, c2: float = 1.0) -> float:
    """Closed-form sup-norm envelope for u.

    ``c1`` and ``c2`` are the unspecified constants of the bound; the value is
    advisory only.  Returns ``inf`` when the exponential overflows.
    """
    if not c1 > 0 or not c2 >= 0:
        raise InvalidInput("need c1 > 0 and c2 >= 0")
    a = 1.0 + params.alpha
    d = 1.0 + 1.0 / params.dcoef
    try:
        growth = math.exp(c2 * a**6 * d**4)
    except OverflowError:
        return math.inf
    return c1 * a**13 * d**12 * growth

