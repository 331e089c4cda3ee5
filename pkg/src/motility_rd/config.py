"""Run and sweep configuration: INI-style text with [model], [grid], [scheme],
[init], [output] and optional [diagnostics] / [sweep] sections.

Example::

    [model]
    alpha = 1
    theta = 0
    dcoef = 0.1
    gamma = exponential
    gamma0 = 10
    gamma1 = 0.1
    lambda = 1
    response = hill
    response_lambda = 1
    m = 2

    [grid]
    length = 20
    cells = 512

    [scheme]
    mode = imex
    dt_policy = fixed
    dt = 0.001
    t_end = 200

    [init]
    kind = constant_perturbed
    u = 4
    v = 4
    w = 0
    amplitude = 0.01
    seed = 1

    [output]
    dir = out
    cadence = 1
"""
from __future__ import annotations

import configparser
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InvalidInput, ParseError, ValidationError
from .grid import FieldState, Grid, read_snapshot
from .model import ModelParams, MotilitySpec, ResponseSpec
from .stepping import FIXED, IMEX, SchemeConfig

CONSTANT_PERTURBED, EIGENMODE, FILE = "constant_perturbed", "eigenmode", "file"
SWEEP_AXES = ("dcoef", "alpha", "theta", "gamma0", "gamma1", "lambda", "l", "n")
SWEEP_CAP = 256
FIG1_SEED = 20200101


class NegativeInitialData(InvalidInput):
    pass


@dataclass(frozen=True)
class InitSpec:
    kind: str = CONSTANT_PERTURBED
    base: tuple = (4.0, 4.0, 0.0)
    amplitude: float = 0.01
    seed: Optional[int] = None
    perturb_w: bool = False
    mode: int = 1
    path: Optional[str] = None


@dataclass(frozen=True)
class DiagnosticsConfig:
    eps_conv: float = 1e-2
    eps_pat: float = 1e-1
    settle_tol: float = 1e-4
    c1: float = 1.0
    c2: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    grid: Grid
    scheme: SchemeConfig
    init: InitSpec
    cadence: float = 1.0
    snapshot_cadence: float = 0.0
    out_dir: str = "out"
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, init=replace(self.init, seed=int(seed)))

    def with_out_dir(self, out_dir: str) -> "RunConfig":
        return replace(self, out_dir=str(out_dir))


@dataclass(frozen=True)
class SweepConfig:
    base: RunConfig
    axes: dict
    workers: int = 1
    cap: int = SWEEP_CAP

    def cells(self) -> list:
        """Cartesian product of the axes as a list of {name: value} dicts in a fixed order."""
        names = list(self.axes)
        return [dict(zip(names, combo)) for combo in itertools.product(*(self.axes[k] for k in names))]


# -- parsing -----------------------------------------------------------------------

class _Reader:
    """Typed access to a parsed section, collecting every error."""

    def __init__(self, cp, errors):
        self.cp = cp
        self.errors = errors

    def get(self, section, key, conv=float, default=None, required=False, aliases=()):
        if not self.cp.has_section(section):
            return default
        sec = self.cp[section]
        for name in (key, *aliases):
            if name in sec:
                raw = sec[name]
                try:
                    return conv(raw)
                except (TypeError, ValueError):
                    self.errors.append(f"[{section}] {key}: cannot parse {raw!r}")
                    return default
        if required:
            self.errors.append(f"[{section}] missing required key {key!r}")
        return default


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def _floats(raw: str) -> tuple:
    return tuple(float(tok) for tok in raw.replace(";", ",").split(",") if tok.strip())


def _read(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError([f"line {exc.lineno}: key outside of any [section]"]) from exc
    except configparser.ParsingError as exc:
        raise ParseError([f"line {lineno}: cannot parse {line!r}" for lineno, line in exc.errors]) from exc
    except configparser.Error as exc:
        raise ParseError([str(exc)]) from exc
    return cp


def _check_nonnegative(errors, section, name, value, strict=False):
    if value is None:
        return
    if strict and not value > 0:
        errors.append(f"{name} must be > 0")
    elif not strict and not value >= 0:
        errors.append(f"{name} must be ≥ 0")


def _build_model(r: _Reader, errors) -> Optional[ModelParams]:
    alpha = r.get("model", "alpha", required=True)
    theta = r.get("model", "theta", default=0.0)
    dcoef = r.get("model", "dcoef", required=True, aliases=("d", "D"))
    _check_nonnegative(errors, "model", "alpha", alpha)
    _check_nonnegative(errors, "model", "theta", theta)
    _check_nonnegative(errors, "model", "dcoef", dcoef, strict=True)

    motility = None
    gfam = r.get("model", "gamma", conv=str, default="exponential").strip().lower()
    if gfam == "exponential":
        args = [r.get("model", k, required=True) for k in ("gamma0", "gamma1", "lambda")]
        build = MotilitySpec.exponential
    elif gfam == "constant":
        args = [r.get("model", "gamma_c", required=True)]
        build = MotilitySpec.constant
    elif gfam == "table":
        args = [r.get("model", k, conv=_floats, required=True) for k in ("knots", "values")]
        build = MotilitySpec.table
    else:
        errors.append(f"[model] gamma: unknown family {gfam!r}")
        args, build = [None], None
    if None not in args:
        try:
            motility = build(*args)
        except ValidationError as exc:
            errors.extend(f"[model] {e}" for e in exc.errors)

    response = None
    rfam = r.get("model", "response", conv=str, default="hill").strip().lower()
    try:
        if rfam == "linear":
            response = ResponseSpec.linear()
        elif rfam == "michaelis":
            response = ResponseSpec.michaelis(r.get("model", "response_lambda", default=1.0))
        elif rfam == "hill":
            response = ResponseSpec.hill(r.get("model", "response_lambda", default=1.0),
                                         r.get("model", "m", default=2.0))
        else:
            errors.append(f"[model] response: unknown family {rfam!r}")
    except ValidationError as exc:
        errors.extend(f"[model] {e}" for e in exc.errors)

    if motility is None or response is None or None in (alpha, theta, dcoef):
        return None
    try:
        return ModelParams(alpha, theta, dcoef, motility, response)
    except ValidationError:
        return None  # already reported above


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration, reporting all problems at once."""
    cp = _read(text)
    missing = [s for s in ("model", "grid") if not cp.has_section(s)]
    if missing:
        raise ParseError([f"missing [{s}]" for s in missing])
    errors: list = []
    r = _Reader(cp, errors)

    params = _build_model(r, errors)

    length = r.get("grid", "length", required=True, aliases=("l",))
    cells = r.get("grid", "cells", conv=int, required=True, aliases=("n",))
    grid = None
    if length is not None and cells is not None:
        try:
            grid = Grid(length, cells)
        except InvalidInput as exc:
            errors.append(f"[grid] {exc}")

    scheme = None
    try:
        scheme = SchemeConfig(
            mode=r.get("scheme", "mode", conv=lambda s: s.strip().lower(), default=IMEX),
            dt_policy=r.get("scheme", "dt_policy", conv=lambda s: s.strip().lower(), default=FIXED),
            dt=r.get("scheme", "dt", default=1e-3),
            safety=r.get("scheme", "safety", default=0.9),
            t_end=r.get("scheme", "t_end", default=200.0),
            max_steps=r.get("scheme", "max_steps", conv=int, default=10**9),
        )
    except ValidationError as exc:
        errors.extend(f"[scheme] {e}" for e in exc.errors)

    kind = r.get("init", "kind", conv=lambda s: s.strip().lower(), default=CONSTANT_PERTURBED)
    if kind not in (CONSTANT_PERTURBED, EIGENMODE, FILE):
        errors.append(f"[init] kind: unknown {kind!r}")
    base = tuple(r.get("init", k, default=d) for k, d in (("u", 4.0), ("v", None), ("w", 0.0)))
    base = (base[0], base[0] if base[1] is None else base[1], base[2])
    if any(b is not None and b < 0 for b in base):
        errors.append("[init] base values must be ≥ 0")
    amplitude = r.get("init", "amplitude", default=0.01)
    seed = r.get("init", "seed", conv=int, default=None)
    if kind == CONSTANT_PERTURBED and amplitude and seed is None:
        errors.append("[init] seed required for a random perturbation")
    path = r.get("init", "path", conv=str, default=None)
    if kind == FILE and not path:
        errors.append("[init] path required for kind=file")
    init = InitSpec(
        kind=kind,
        base=base,
        amplitude=amplitude if amplitude is not None else 0.0,
        seed=seed,
        perturb_w=r.get("init", "perturb_w", conv=_bool, default=False),
        mode=r.get("init", "mode", conv=int, default=1),
        path=path,
    )

    cadence = r.get("output", "cadence", default=1.0)
    if cadence is not None and not cadence > 0:
        errors.append("[output] cadence must be > 0")
    diag = DiagnosticsConfig(
        eps_conv=r.get("diagnostics", "eps_conv", default=1e-2),
        eps_pat=r.get("diagnostics", "eps_pat", default=1e-1),
        settle_tol=r.get("diagnostics", "settle_tol", default=1e-4),
        c1=r.get("diagnostics", "c1", default=1.0),
        c2=r.get("diagnostics", "c2", default=1.0),
    )
    if errors:
        raise ValidationError(errors)
    return RunConfig(
        params=params,
        grid=grid,
        scheme=scheme,
        init=init,
        cadence=cadence,
        snapshot_cadence=r.get("output", "snapshot_cadence", default=0.0),
        out_dir=r.get("output", "dir", conv=str, default="out"),
        diagnostics=diag,
    )


def parse_sweep(text: str) -> SweepConfig:
    base = parse_config(text)
    cp = _read(text)
    errors = []
    if not cp.has_section("sweep"):
        raise ValidationError("missing [sweep] section")
    sec = cp["sweep"]
    axes = {}
    for key in sec:
        if key in ("workers", "cap"):
            continue
        if key not in SWEEP_AXES:
            errors.append(f"[sweep] unsupported axis {key!r}")
            continue
        try:
            vals = _floats(sec[key])
        except ValueError:
            errors.append(f"[sweep] {key}: cannot parse {sec[key]!r}")
            continue
        if not vals:
            errors.append(f"[sweep] {key}: empty value list")
        axes[key] = vals
    if not axes and not errors:
        errors.append("[sweep] axes must be nonempty")
    workers = int(sec.get("workers", "1"))
    cap = int(sec.get("cap", str(SWEEP_CAP)))
    total = math.prod(len(v) for v in axes.values()) if axes else 0
    if total > cap:
        errors.append(f"[sweep] {total} cells exceed cap {cap}")
    if errors:
        raise ValidationError(errors)
    return SweepConfig(base, axes, workers, cap)


def apply_overrides(cfg: RunConfig, cell: dict) -> RunConfig:
    """Return ``cfg`` with sweep-axis values substituted."""
    params, grid = cfg.params, cfg.grid
    mot = params.motility
    changes = {}
    for key, val in cell.items():
        if key in ("dcoef", "alpha", "theta"):
            changes[key] = float(val)
        elif key in ("gamma0", "gamma1", "lambda"):
            if mot.family != "exponential":
                raise ValidationError(f"axis {key} needs exponential motility")
            attr = "lam" if key == "lambda" else key
            mot = replace(mot, **{attr: float(val)})
        elif key == "l":
            grid = Grid(float(val), grid.cells)
        elif key == "n":
            grid = Grid(grid.length, int(val))
    params = params.replace(motility=mot, **changes)
    return replace(cfg, params=params, grid=grid)


# -- formatting --------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def format_config(cfg: RunConfig) -> str:
    """Serialise back to the text format; parse_config(format_config(c)) == c."""
    lines = ["[model]"]
    lines += [f"{k} = {_fmt(v)}" for k, v in cfg.params.to_dict().items()]
    lines += ["", "[grid]", f"length = {_fmt(cfg.grid.length)}", f"cells = {cfg.grid.cells}"]
    s = cfg.scheme
    lines += ["", "[scheme]", f"mode = {s.mode}", f"dt_policy = {s.dt_policy}", f"dt = {_fmt(s.dt)}",
              f"safety = {_fmt(s.safety)}", f"t_end = {_fmt(s.t_end)}", f"max_steps = {s.max_steps}"]
    i = cfg.init
    lines += ["", "[init]", f"kind = {i.kind}", f"u = {_fmt(i.base[0])}", f"v = {_fmt(i.base[1])}",
              f"w = {_fmt(i.base[2])}", f"amplitude = {_fmt(i.amplitude)}", f"perturb_w = {_fmt(i.perturb_w)}",
              f"mode = {i.mode}"]
    if i.seed is not None:
        lines.append(f"seed = {i.seed}")
    if i.path:
        lines.append(f"path = {i.path}")
    d = cfg.diagnostics
    lines += ["", "[output]", f"dir = {cfg.out_dir}", f"cadence = {_fmt(cfg.cadence)}",
              f"snapshot_cadence = {_fmt(cfg.snapshot_cadence)}"]
    lines += ["", "[diagnostics]", f"eps_conv = {_fmt(d.eps_conv)}", f"eps_pat = {_fmt(d.eps_pat)}",
              f"settle_tol = {_fmt(d.settle_tol)}", f"c1 = {_fmt(d.c1)}", f"c2 = {_fmt(d.c2)}"]
    return "\n".join(lines) + "\n"


# -- presets -----------------------------------------------------------------------

def fig1_params(dcoef: float = 0.1) -> ModelParams:
    """gamma(v) = 0.1 + 10 exp(-v), F(w) = w^2 / (1 + w^2), alpha = 1, theta = 0."""
    return ModelParams(
        alpha=1.0,
        theta=0.0,
        dcoef=float(dcoef),
        motility=MotilitySpec.exponential(10.0, 0.1, 1.0),
        response=ResponseSpec.hill(1.0, 2.0),
    )


def fig1_config(dcoef: float = 0.1, seed: int = FIG1_SEED, cells: int = 512, t_end: float = 200.0) -> RunConfig:
    return RunConfig(
        params=fig1_params(dcoef),
        grid=Grid(20.0, cells),
        scheme=SchemeConfig(mode=IMEX, dt_policy=FIXED, dt=1e-3, t_end=t_end),
        init=InitSpec(CONSTANT_PERTURBED, (4.0, 4.0, 0.0), 0.01, seed),
        cadence=1.0,
        out_dir=f"fig1_d{dcoef:g}",
    )


# -- initial data ------------------------------------------------------------------

def _mean_corrected(rng, n):
    xi = rng.uniform(-1.0, 1.0, n)
    return xi - xi.mean()


def make_initial_state(cfg: RunConfig, grid: Optional[Grid] = None) -> FieldState:
    """Initial fields for ``cfg``.

    Random perturbations are base * (1 + amplitude * xi) with xi uniform on
    [-1, 1], shifted to zero mean so the discrete masses equal base * l.
    With ``perturb_w`` and a zero w base, w gets amplitude * (1 + xi) instead
    (positive, mean ``amplitude``).
    """
    grid = grid or cfg.grid
    init = cfg.init
    bu, bv, bw = init.base
    if init.kind == FILE:
        state = read_snapshot(init.path)
        if state.grid != grid:
            raise InvalidInput(f"snapshot grid {state.grid} differs from configured {grid}")
        return FieldState(grid, state.u, state.v, state.w, 0.0)
    n = grid.cells
    if init.kind == EIGENMODE:
        shape = init.amplitude * np.cos(init.mode * np.pi * grid.x / grid.length)
        u, v, w = bu + shape, bv + shape, np.full(n, bw)
    else:
        rng = np.random.default_rng(init.seed)
        a = init.amplitude
        u = bu * (1.0 + a * _mean_corrected(rng, n))
        v = bv * (1.0 + a * _mean_corrected(rng, n))
        if init.perturb_w:
            if bw > 0:
                w = bw * (1.0 + a * _mean_corrected(rng, n))
            else:
                w = a * (1.0 + rng.uniform(-1.0, 1.0, n))
        else:
            w = np.full(n, bw)
    for name, arr in (("u", u), ("v", v), ("w", w)):
        if np.any(arr < 0):
            raise NegativeInitialData(f"initial {name} has negative cells; lower the amplitude")
    return FieldState(grid, u, v, w, 0.0)
