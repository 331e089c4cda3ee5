"""Uniform cell-centred 1D grid with zero-flux boundaries.

Fields are plain float arrays holding cell averages.  Every operator is in
flux form so that the discrete integral of a Laplacian vanishes by
telescoping, which is what keeps the mass ledger exact.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GridMismatch, InvalidInput
from .model import MotilitySpec, eval_motility

EPS_NEG = 1e-12


@dataclass(frozen=True)
class Grid:
    length: float
    cells: int

    def __post_init__(self):
        if not self.length > 0:
            raise InvalidInput("grid length must be > 0")
        if int(self.cells) != self.cells or self.cells < 4:
            raise InvalidInput("grid needs at least 4 cells")

    @property
    def dx(self) -> float:
        return self.length / self.cells

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) * self.dx

    def check(self, f) -> np.ndarray:
        arr = np.asarray(f, dtype=float)
        if arr.ndim != 1 or arr.shape[0] != self.cells:
            raise GridMismatch(f"field of shape {arr.shape} does not match grid with {self.cells} cells")
        return arr


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FieldState:
    """The triple (u, v, w) on one grid at time ``t``; arrays are read-only."""

    grid: Grid
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for name in ("u", "v", "w"):
            arr = self.grid.check(getattr(self, name))
            if not np.all(np.isfinite(arr)):
                raise InvalidInput(f"{name} has non-finite entries")
            object.__setattr__(self, name, _frozen(arr))
        if self.t < 0:
            raise InvalidInput("time must be >= 0")

    def min_value(self) -> float:
        return float(min(self.u.min(), self.v.min(), self.w.min()))

    def is_nonnegative(self, eps: float = EPS_NEG) -> bool:
        return self.min_value() >= -eps

    def with_fields(self, u, v, w, t) -> "FieldState":
        return FieldState(self.grid, u, v, w, t)

    def same_as(self, other: "FieldState") -> bool:
        return (
            self.grid == other.grid
            and self.t == other.t
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.w, other.w)
        )


def laplacian_neumann(f, grid: Grid) -> np.ndarray:
    """Flux-form second difference with zero flux through both end faces."""
    f = grid.check(f)
    flux = np.zeros(grid.cells + 1)
    flux[1:-1] = np.diff(f) / grid.dx
    return np.diff(flux) / grid.dx


def motility_laplacian(u, v, spec: MotilitySpec, grid: Grid) -> np.ndarray:
    """Discrete Lap(gamma(v) u), taken as the Laplacian of the product."""
    u = grid.check(u)
    v = grid.check(v)
    return laplacian_neumann(eval_motility(spec, v) * u, grid)


def integrate(f, grid: Grid) -> float:
    return float(np.sum(grid.check(f)) * grid.dx)


def sup_norm(f) -> float:
    f = np.asarray(f, dtype=float)
    return float(np.max(np.abs(f))) if f.size else 0.0


def l2_norm(f, grid: Grid) -> float:
    f = grid.check(f)
    return float(np.sqrt(np.sum(f * f) * grid.dx))


# -- snapshot text format ------------------------------------------------------

def format_snapshot(state: FieldState) -> str:
    g = state.grid
    buf = io.StringIO()
    buf.write(f"# t={state.t!r} n={g.cells} l={g.length!r}\n")
    buf.write("x,u,v,w\n")
    for row in zip(g.x, state.u, state.v, state.w):
        buf.write(",".join(f"{val:.17g}" for val in row) + "\n")
    return buf.getvalue()


def parse_snapshot(text: str) -> FieldState:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise InvalidInput("snapshot missing '# t=... n=... l=...' header")
    meta = dict(tok.split("=", 1) for tok in lines[0][1:].split())
    try:
        t, n, length = float(meta["t"]), int(meta["n"]), float(meta["l"])
    except (KeyError, ValueError) as exc:
        raise InvalidInput(f"bad snapshot header: {lines[0]!r}") from exc
    body = [ln for ln in lines[1:] if not ln.startswith("x,")]
    data = np.array([[float(tok) for tok in ln.split(",")] for ln in body])
    if data.shape != (n, 4):
        raise InvalidInput(f"snapshot has {data.shape[0]} rows, header says n={n}")
    return FieldState(Grid(length, n), data[:, 1], data[:, 2], data[:, 3], t)


def write_snapshot(state: FieldState, path) -> None:
    Path(path).write_text(format_snapshot(state))


def read_snapshot(path) -> FieldState:
    return parse_snapshot(Path(path).read_text())
