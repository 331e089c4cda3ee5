"""Command implementations: single runs, stability reports and sweeps.

Each run directory receives

    manifest.cfg        the full configuration (re-runnable as is)
    timeseries.csv      one row per observation
    snapshots/          x,u,v,w columns at the snapshot cadence
    asymptote.txt       long-time classification
    stability.txt       linear stability of (u_*, u_*, 0)
    stability_modes.csv growth rates of the admissible modes
    checks.txt          ledger, monotonicity, consumption and bound checks
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from .config import RunConfig, SweepConfig, apply_overrides, format_config, make_initial_state
from .diagnostics import PATTERN, CONVERGE_TO_U_STAR, AsymptoteReport, Monitor
from .errors import HypothesisViolation, MotilityRDError, SolverError
from .grid import FieldState, integrate, write_snapshot
from .model import boundedness_envelope, validate_hypotheses
from .stability import StabilityReport, analyze
from .stepping import RunResult, run

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_SOLVER = 0, 2, 3, 4


@dataclass
class RunOutcome:
    config: RunConfig
    initial: FieldState
    result: RunResult
    monitor: Monitor
    asymptote: AsymptoteReport
    stability: Optional[StabilityReport]
    u_star: float


def predicted_u_star(state: FieldState, alpha: float) -> float:
    g = state.grid
    return (integrate(state.u, g) + alpha * integrate(state.w, g)) / g.length


def check_hypotheses(cfg: RunConfig, state: FieldState):
    v_max = max(1.0, 2.0 * float(max(state.u.max(), state.v.max())))
    mot = cfg.params.motility
    if mot.family == "table":
        v_max = max(v_max, mot.knots[-1])
    w_max = max(1.0, float(state.w.max()))
    report = validate_hypotheses(cfg.params, v_max, w_max)
    if not report.ok:
        raise HypothesisViolation("; ".join(report.h1_errors + report.h2_errors))
    for warn in report.h2_warnings:
        logger.warning("hypothesis warning: %s", warn)
    return report


class _SnapshotWriter:
    def __init__(self, directory: Path, cadence: float, t_end: float):
        self.dir = directory
        self.cadence = cadence
        self.t_end = t_end
        self.next_t = 0.0
        self.count = 0

    def __call__(self, obs):
        t = obs.state.t
        due = t >= self.next_t - 1e-9 if self.cadence > 0 else t in (0.0, self.t_end)
        if due or t >= self.t_end:
            self.dir.mkdir(parents=True, exist_ok=True)
            write_snapshot(obs.state, self.dir / f"snap_{self.count:05d}.csv")
            self.count += 1
            if self.cadence > 0:
                while self.next_t <= t + 1e-9:
                    self.next_t += self.cadence


def execute_run(cfg: RunConfig, out_dir: Optional[Path] = None) -> RunOutcome:
    """Run ``cfg``; raises HypothesisViolation or SolverError on failure."""
    state0 = make_initial_state(cfg)
    check_hypotheses(cfg, state0)
    u_star = predicted_u_star(state0, cfg.params.alpha)
    stab = analyze(cfg.params, u_star, cfg.grid.length) if u_star > 0 else None

    d = cfg.diagnostics
    monitor = Monitor(cfg.params, envelope=boundedness_envelope(cfg.params, d.c1, d.c2))
    hooks = [monitor]
    if out_dir is not None:
        hooks.append(_SnapshotWriter(out_dir / "snapshots", cfg.snapshot_cadence, cfg.scheme.t_end))
    result = run(state0, cfg.params, cfg.scheme, hooks, cadence=cfg.cadence)
    report = monitor.classify(eps_conv=d.eps_conv, eps_pat=d.eps_pat, settle_tol=d.settle_tol)
    return RunOutcome(cfg, state0, result, monitor, report, stab, u_star)


def checks_text(outcome: RunOutcome) -> str:
    m = outcome.monitor
    mono_ok, first_bad = m.w_monotone()
    lines = [
        f"ledger_max_abs_residual={m.max_abs_residual!r}",
        f"ledger_relative_residual={m.relative_residual!r}",
        f"ledger_failures={m.ledger_failures}",
        f"w_sup_monotone={'true' if mono_ok and m.max_w_rise <= 1e-12 else 'false'}",
        f"w_sup_first_violation={'NONE' if first_bad is None else first_bad}",
        f"w_sup_max_step_rise={m.max_w_rise!r}",
        f"consumption={m.consumption!r}",
        f"w0_mass={m.w0_mass!r}",
        f"consumption_bound_ok={'true' if m.consumption_ok() else 'false'}",
        f"w_mass_gap={m.w_mass_gap()!r}",
        f"envelope={m.envelope!r}",
        f"envelope_exceeded={'true' if m.bound.exceeded else 'false'}",
        f"running_max_sup_u={m.bound.running_max!r}",
        f"plateau_growth={m.plateau_growth()!r}",
        f"steps={outcome.result.steps}",
        f"completed={'true' if outcome.result.completed else 'false'}",
    ]
    return "\n".join(lines) + "\n"


def write_manifest(cfg: RunConfig, out_dir: Path, command: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    header = f"# motility_rd {__version__}\n# command: {command}\n"
    (out_dir / "manifest.cfg").write_text(header + format_config(cfg))


def write_artifacts(outcome: RunOutcome, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "timeseries.csv").write_text(outcome.monitor.timeseries_csv())
    (out_dir / "asymptote.txt").write_text(outcome.asymptote.to_text())
    (out_dir / "checks.txt").write_text(checks_text(outcome))
    if outcome.stability is not None:
        (out_dir / "stability.txt").write_text(outcome.stability.to_text())
        (out_dir / "stability_modes.csv").write_text(outcome.stability.to_csv())


def cmd_run(cfg: RunConfig, out_dir=None, quiet: bool = False) -> int:
    out = Path(out_dir or cfg.out_dir)
    write_manifest(cfg.with_out_dir(str(out)), out, "run")
    try:
        outcome = execute_run(cfg, out)
    except HypothesisViolation as exc:
        logger.error("hypothesis violation: %s", exc)
        (out / "error.txt").write_text(f"hypothesis violation: {exc}\n")
        return EXIT_HYPOTHESIS
    except SolverError as exc:
        logger.error("solver failure: %s", exc)
        (out / "error.txt").write_text(f"solver failure: {exc}\n")
        return EXIT_SOLVER
    write_artifacts(outcome, out)
    if not quiet:
        print(outcome.asymptote.to_text(), end="")
    return EXIT_OK


def cmd_stability(cfg: RunConfig, out_dir=None, quiet: bool = False) -> StabilityReport:
    """u_* from the initial masses, then the full report for (u_*, u_*, 0)."""
    state0 = make_initial_state(cfg)
    u_star = predicted_u_star(state0, cfg.params.alpha)
    report = analyze(cfg.params, u_star, cfg.grid.length)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "stability.txt").write_text(report.to_text())
        (out / "stability_modes.csv").write_text(report.to_csv())
    if not quiet:
        print(report.to_text(), end="")
    return report


# -- sweeps ------------------------------------------------------------------------

SUMMARY_TAIL = ("unstable", "fastest_mode", "fastest_rate", "regime", "amplitude",
                "dominant_mode", "ledger_max_residual", "error")


def _fmt(x) -> str:
    if x is None:
        return "NONE"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _sweep_cell(args):
    index, cell, base, root = args
    row = {"cell": index, **cell}
    try:
        cfg = apply_overrides(base, cell)
        out = Path(root) / f"cell_{index:04d}"
        write_manifest(cfg.with_out_dir(str(out)), out, f"sweep cell {index}")
        outcome = execute_run(cfg, out)
        write_artifacts(outcome, out)
        stab = outcome.stability
        final = outcome.monitor.rows[-1]
        row.update(
            unstable=bool(stab and stab.unstable),
            fastest_mode=stab.fastest_mode if stab else None,
            fastest_rate=stab.fastest_rate if stab else None,
            regime=outcome.asymptote.regime,
            amplitude=outcome.asymptote.amplitude,
            dominant_mode=final[-1],
            ledger_max_residual=outcome.monitor.max_abs_residual,
            error=None,
        )
    except MotilityRDError as exc:
        row.update({k: None for k in SUMMARY_TAIL})
        row["error"] = f"{type(exc).__name__}: {exc}".replace(",", ";")
    return row


def run_sweep(sweep: SweepConfig, out_dir=None, workers: Optional[int] = None) -> list:
    root = Path(out_dir or sweep.base.out_dir)
    root.mkdir(parents=True, exist_ok=True)
    jobs = [(i, cell, sweep.base, str(root)) for i, cell in enumerate(sweep.cells())]
    workers = workers or sweep.workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_cell, jobs))
    else:
        rows = [_sweep_cell(job) for job in jobs]
    return rows


def sweep_csv(rows: list, axes) -> str:
    cols = ["cell", *axes, *SUMMARY_TAIL]
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(c)) for c in cols))
    return "\n".join(lines) + "\n"


def coherence_violations(rows: list, base_theta: float = 0.0, min_rate: float = 0.05) -> list:
    """Cells whose simulated verdict contradicts the linear prediction."""
    bad = []
    for row in rows:
        if row.get("error"):
            continue
        theta = row.get("theta", base_theta)
        if not row["unstable"] and theta == 0 and row["regime"] != CONVERGE_TO_U_STAR:
            bad.append((row["cell"], "predicted stable", row["regime"]))
        rate = row.get("fastest_rate")
        if row["unstable"] and rate is not None and rate > min_rate and row["regime"] != PATTERN:
            bad.append((row["cell"], "predicted unstable", row["regime"]))
    return bad


def cmd_sweep(sweep: SweepConfig, out_dir=None, workers: Optional[int] = None, quiet: bool = False) -> list:
    root = Path(out_dir or sweep.base.out_dir)
    rows = run_sweep(sweep, root, workers)
    text = sweep_csv(rows, list(sweep.axes))
    (root / "summary.csv").write_text(text)
    bad = coherence_violations(rows, sweep.base.params.theta)
    (root / "coherence.txt").write_text(
        "violations=" + str(len(bad)) + "\n" + "".join(f"cell {c}: {why} but {reg}\n" for c, why, reg in bad)
    )
    if not quiet:
        print(text, end="")
    return rows
