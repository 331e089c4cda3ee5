import dataclasses
import time

import pytest

from motility_rd.config import InitSpec, fig1_config
from motility_rd.runner import execute_run

_CACHE = {}
RUNTIME = {}


def fig1_variant(key):
    """Named long runs shared between test modules (each is simulated once)."""
    if key in _CACHE:
        return _CACHE[key]
    if key == "d0.1":
        cfg = fig1_config(0.1)
    elif key == "d0.01":
        cfg = fig1_config(0.01)
    elif key == "d100":
        cfg = fig1_config(100.0)
    elif key == "d0.1_wpert":
        base = fig1_config(0.1)
        cfg = dataclasses.replace(base, init=dataclasses.replace(base.init, perturb_w=True))
    elif key == "theta0.5":
        base = fig1_config(0.1)
        cfg = dataclasses.replace(
            base,
            params=base.params.replace(theta=0.5),
            scheme=dataclasses.replace(base.scheme, t_end=400.0),
            init=InitSpec("constant_perturbed", (0.5, 0.5, 2.0), 0.01, base.init.seed, perturb_w=True),
        )
    elif key.startswith("eig"):
        # eigenmode start at mode int(key[3:]), D = 0.1, up to t = 5
        base = fig1_config(0.1, t_end=5.0)
        cfg = dataclasses.replace(base, init=InitSpec("eigenmode", (4.0, 4.0, 0.0), 0.01, None, mode=int(key[3:])))
    else:
        raise KeyError(key)
    start = time.perf_counter()
    _CACHE[key] = execute_run(cfg)
    RUNTIME[key] = time.perf_counter() - start
    return _CACHE[key]


@pytest.fixture(scope="session")
def long_run():
    return fig1_variant


@pytest.fixture
def verdict(capsys):
    """Print one PASS/FAIL line for an acceptance criterion, then assert it."""

    def emit(label, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        assert ok, f"{label}: {detail}"

    return emit
