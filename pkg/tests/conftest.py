import numpy as np
import pytest

from mhdbkm import lpaley, monitor, spectral
from mhdbkm.solver import SolverParams, initial_condition, step


@pytest.fixture
def verdict(capsys):
    """Print a PASS/FAIL line that survives output capture, then assert."""

    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, f"{name}: {detail}"

    return emit


@pytest.fixture(scope="session")
def ot64():
    """Orszag-Tang at 64^3 to t = 1, recorded every step."""
    grid = spectral.make_grid(64)
    part = lpaley.build_partition(grid)
    params = SolverParams(nu=0.01, eta=0.01, dt=0.01, t_end=1.0)
    state = initial_condition("orszag_tang_3d", grid)
    records = [monitor.record(state, part)]
    for _ in range(100):
        state = step(state, params, check_cfl=False)
        records.append(monitor.record(state, part))
    return part, records


def rand_hat(grid, rng, dealiased=True):
    f_hat = spectral.to_spectral(rng.standard_normal(grid.shape))
    return spectral.dealias(f_hat, grid) if dealiased else f_hat


def rel_err(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b))
