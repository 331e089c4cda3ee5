"""Linear stability of the constant equilibria and the dispersion relation.

Around (u_c, u_c, 0) a Neumann mode cos(k x) grows like exp(rho t) where rho
is an eigenvalue of

    M_k = [[-gamma(u_c) k^2, -u_c gamma'(u_c) k^2, alpha u_c F'(0)],
           [1,               -D k^2 - 1,           0              ],
           [0,               0,                    -k^2 - u_c F'(0)]].

The last row decouples, leaving rho^2 + a1 rho + a0 = 0 with
a1 = 1 + (D + gamma(u_c)) k^2 and a0 = D gamma(u_c) k^4 + S k^2,
S = gamma(u_c) + u_c gamma'(u_c).
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInput, WrongFamily
from .model import (
    ModelParams,
    eval_motility,
    eval_motility_deriv,
    eval_response,
    eval_response_deriv,
)

ZERO, NUTRIENT_ONLY, CELL_ONLY = "ZERO", "NUTRIENT_ONLY", "CELL_ONLY"
N_MAX_DEFAULT = 512


@dataclass(frozen=True)
class Equilibrium:
    label: str
    state: tuple
    eigenvalues: tuple
    note: str


@dataclass(frozen=True)
class DispersionPoint:
    k_sq: float
    a1: float
    a0: float
    rho_plus: complex
    rho_minus: complex
    rho_w: float

    def roots(self) -> tuple:
        return (self.rho_plus, self.rho_minus, complex(self.rho_w))


@dataclass(frozen=True)
class ModeGrowth:
    n: int
    k_sq: float
    point: DispersionPoint

    @property
    def rate(self) -> float:
        return self.point.rho_plus.real


@dataclass(frozen=True)
class PatternConditions:
    con1_ok: bool
    con2_ok: bool
    details: dict


@dataclass
class StabilityReport:
    u_star: float
    length: float
    s_value: float
    band_upper: Optional[float]
    modes: list = field(default_factory=list)
    fastest_mode: Optional[int] = None
    con1_ok: Optional[bool] = None
    con2_ok: Optional[bool] = None
    conditions: Optional[PatternConditions] = None

    @property
    def admissible_modes(self) -> list:
        return [m.n for m in self.modes]

    @property
    def unstable(self) -> bool:
        return self.s_value < 0 and bool(self.modes)

    @property
    def fastest_rate(self) -> Optional[float]:
        for m in self.modes:
            if m.n == self.fastest_mode:
                return m.rate
        return None

    def to_text(self) -> str:
        def fmt(x):
            if x is None:
                return "NONE"
            if isinstance(x, bool):
                return "true" if x else "false"
            return repr(x)

        lines = [
            f"u_star={fmt(self.u_star)}",
            f"length={fmt(self.length)}",
            f"s_value={fmt(self.s_value)}",
            f"band_upper={fmt(self.band_upper)}",
            f"n_admissible={len(self.modes)}",
            "admissible_modes=" + ",".join(str(n) for n in self.admissible_modes),
            f"fastest_mode={fmt(self.fastest_mode)}",
            f"fastest_rate={fmt(self.fastest_rate)}",
            f"con1_ok={'N/A' if self.con1_ok is None else fmt(self.con1_ok)}",
            f"con2_ok={'N/A' if self.con2_ok is None else fmt(self.con2_ok)}",
            f"unstable={fmt(self.unstable)}",
        ]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,k_sq,a1,a0,re_rho_plus,im_rho_plus,rho_w\n")
        for m in self.modes:
            p = m.point
            row = (m.n, p.k_sq, p.a1, p.a0, p.rho_plus.real, p.rho_plus.imag, p.rho_w)
            buf.write(",".join(str(row[0]) if i == 0 else f"{v:.17g}" for i, v in enumerate(row)) + "\n")
        return buf.getvalue()


def ode_equilibria(params: ModelParams, u_star: float) -> list:
    """Constant equilibria of the kinetic system with their eigenvalue triples."""
    if not u_star >= 0:
        raise InvalidInput("u_star must be >= 0")
    alpha = params.alpha
    fp0 = eval_response_deriv(params.response, 0.0)
    out = [Equilibrium(ZERO, (0.0, 0.0, 0.0), (0.0, -1.0, 0.0), "linearly stable (marginal zero modes)")]
    if alpha > 0:
        rho3 = alpha * eval_response(params.response, u_star / alpha)
        note = "linearly unstable" if rho3 > 0 else "linearly stable (marginal zero modes)"
        out.append(Equilibrium(NUTRIENT_ONLY, (0.0, 0.0, u_star / alpha), (0.0, -1.0, rho3), note))
    rho3 = -u_star * fp0 + 0.0  # normalise -0.0
    out.append(Equilibrium(CELL_ONLY, (u_star, u_star, 0.0), (0.0, -1.0, rho3), "linearly stable (marginal zero modes)"))
    return out


def _quadratic_roots(a1: float, a0: float) -> tuple:
    disc = a1 * a1 - 4.0 * a0
    if disc >= 0:
        sq = math.sqrt(disc)
        # larger-magnitude root first, the other from the product a0
        q = -0.5 * (a1 + math.copysign(sq, a1))
        r1 = q
        r2 = a0 / q if q != 0 else 0.0
        hi, lo = max(r1, r2), min(r1, r2)
        return complex(hi), complex(lo)
    re = -0.5 * a1
    im = 0.5 * math.sqrt(-disc)
    return complex(re, im), complex(re, -im)


def _linear_coeffs(params: ModelParams, u_c: float):
    g = eval_motility(params.motility, u_c)
    dg = eval_motility_deriv(params.motility, u_c)
    fp0 = eval_response_deriv(params.response, 0.0)
    return g, dg, fp0


def dispersion_at(k_sq: float, params: ModelParams, u_c: float) -> DispersionPoint:
    if not k_sq >= 0:
        raise InvalidInput("k_sq must be >= 0")
    g, dg, fp0 = _linear_coeffs(params, u_c)
    d = params.dcoef
    a1 = 1.0 + (d + g) * k_sq
    a0 = d * g * k_sq * k_sq + (g + u_c * dg) * k_sq
    rp, rm = _quadratic_roots(a1, a0)
    return DispersionPoint(k_sq, a1, a0, rp, rm, -k_sq - u_c * fp0)


def linearization_matrix(k_sq: float, params: ModelParams, u_c: float) -> np.ndarray:
    g, dg, fp0 = _linear_coeffs(params, u_c)
    return np.array(
        [
            [-g * k_sq, -u_c * dg * k_sq, params.alpha * u_c * fp0],
            [1.0, -params.dcoef * k_sq - 1.0, 0.0],
            [0.0, 0.0, -k_sq - u_c * fp0],
        ]
    )


def mk_eigen_oracle(k_sq: float, params: ModelParams, u_c: float) -> np.ndarray:
    """Eigenvalues of the assembled 3x3 matrix, computed by LAPACK."""
    return np.linalg.eigvals(linearization_matrix(k_sq, params, u_c))


def s_value(params: ModelParams, u_star: float) -> float:
    return eval_motility(params.motility, u_star) + u_star * eval_motility_deriv(params.motility, u_star)


def instability_band(params: ModelParams, u_star: float) -> Optional[tuple]:
    """(0, kbar_sq) when S < 0, else None."""
    if not u_star > 0:
        raise InvalidInput("u_star must be > 0")
    s = s_value(params, u_star)
    if s >= 0:
        return None
    return (0.0, -s / (params.dcoef * eval_motility(params.motility, u_star)))


def admissible_modes(
    band: Optional[tuple],
    length: float,
    n_max: int = N_MAX_DEFAULT,
    params: Optional[ModelParams] = None,
    u_star: Optional[float] = None,
) -> tuple:
    """Modes n with (n pi / l)^2 strictly inside ``band``.

    Returns (modes, fastest).  Growth rates are attached when ``params`` and
    ``u_star`` are given; ties for the fastest mode go to the smaller n.
    """
    if not length > 0:
        raise InvalidInput("length must be > 0")
    if band is None:
        return [], None
    lo, hi = band
    modes = []
    for n in range(1, n_max + 1):
        k_sq = (n * math.pi / length) ** 2
        if k_sq >= hi:
            break
        if k_sq > lo:
            point = dispersion_at(k_sq, params, u_star) if params is not None else None
            modes.append(ModeGrowth(n, k_sq, point))
    fastest = None
    if modes and params is not None:
        best = max(m.rate for m in modes)
        fastest = min(m.n for m in modes if m.rate == best)
    return modes, fastest


def check_pattern_conditions(params: ModelParams, u_star: float, length: float, n: int = 1) -> PatternConditions:
    """Closed-form instability conditions for exponential motility."""
    mot = params.motility
    if mot.family != "exponential":
        raise WrongFamily("pattern conditions need exponential motility")
    g0, g1, lam = mot.gamma0, mot.gamma1, mot.lam
    lhs1 = g1 / g0 * math.exp(lam * u_star) if g0 > 0 else math.inf
    rhs1 = lam * u_star - 1.0
    con1 = u_star > 1.0 / lam and lhs1 < rhs1
    e = g0 * math.exp(-lam * u_star)
    ratio = -(g1 + e * (1.0 - lam * u_star)) / (g1 + e)
    rhs2 = ratio * length**2 / (n * math.pi) ** 2
    con2 = params.dcoef < rhs2
    details = {
        "u_star": u_star,
        "inv_lambda": 1.0 / lam,
        "con1_lhs": lhs1,
        "con1_rhs": rhs1,
        "con2_lhs": params.dcoef,
        "con2_rhs": rhs2,
        "n": n,
    }
    return PatternConditions(con1, con2, details)


def analyze(params: ModelParams, u_star: float, length: float, n_max: int = N_MAX_DEFAULT) -> StabilityReport:
    """Full report for the equilibrium (u_star, u_star, 0) on (0, length)."""
    band = instability_band(params, u_star)
    modes, fastest = admissible_modes(band, length, n_max, params, u_star)
    report = StabilityReport(
        u_star=u_star,
        length=length,
        s_value=s_value(params, u_star),
        band_upper=None if band is None else band[1],
        modes=modes,
        fastest_mode=fastest,
    )
    try:
        cond = check_pattern_conditions(params, u_star, length, 1)
    except WrongFamily:
        return report
    report.conditions = cond
    report.con1_ok = cond.con1_ok
    report.con2_ok = cond.con2_ok
    return report
