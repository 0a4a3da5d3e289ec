"""Small built-in identity/inequality probes behind ``mhdbkm verify``.

Each probe returns ``(passed, detail)``; sizes are kept small so the whole
suite runs in seconds.
"""
from __future__ import annotations

import numpy as np

from . import lpaley, monitor, spectral
from .solver import SolverParams, initial_condition, random_state, step, vorticity_system_residual


def direct_dft(f, grid):
    """O(n^6) DFT by explicit summation over all (mode, point) pairs."""
    k = grid.k.reshape(3, -1)
    x = grid.x.reshape(3, -1)
    phase = np.exp(-1j * (k.T @ x))
    return (phase @ f.reshape(-1)).reshape(grid.shape)


def probe_partition(n=16):
    g = spectral.make_grid(n)
    part = lpaley.build_partition(g)
    err = np.abs(part.chi_mask + part.phi_masks.sum(axis=0) - 1)[g.dealias_mask].max()
    return err <= 1e-14, f"max |chi + sum phi - 1| = {err:.2e}"


def probe_dft(n=8):
    g = spectral.make_grid(n)
    f = np.random.default_rng(0).standard_normal(g.shape)
    err = np.abs(spectral.to_spectral(f) - direct_dft(f, g)).max()
    return err <= 1e-10, f"FFT vs direct DFT max error = {err:.2e}"


def probe_exact_decay(n=16, nu=0.01, steps=20):
    g = spectral.make_grid(n)
    s0 = initial_condition("aligned:abc", g)
    p = SolverParams(nu, nu, 0.01)
    s = s0
    for _ in range(steps):
        s = step(s, p, check_cfl=False)
    err = np.linalg.norm(s.u - np.exp(-nu * s.t) * s0.u) / np.linalg.norm(s0.u)
    return err <= 1e-10, f"aligned ABC decay relative error = {err:.2e}"


def probe_vorticity_system(n=16):
    s = random_state(spectral.make_grid(n), seed=1)
    rw, rj = vorticity_system_residual(s, SolverParams(0.01, 0.02, 0.01))
    return max(rw, rj) <= 1e-10, f"two-route residuals {rw:.2e}, {rj:.2e}"


def probe_cancellation(n=16):
    s = random_state(spectral.make_grid(n), seed=2)
    rep = monitor.cancellation_checks(s, SolverParams(0.01, 0.01, 0.01))
    worst = max(rep.advect_w, rep.advect_j, rep.cross_b)
    return worst <= 1e-11, f"largest vanishing-integral residual {worst:.2e}"


def probe_bernstein(n=32):
    g = spectral.make_grid(n)
    part = lpaley.build_partition(g)
    f_hat = spectral.dealias(spectral.to_spectral(np.random.default_rng(3).standard_normal(g.shape)), g)
    worst = max(lpaley.bernstein_ratio(f_hat, j, 1, np.inf, np.inf, part) for j in part.populated_shells())
    return worst <= 8 / 3 + 1e-9, f"max order-1 sup ratio {worst:.3f} (bound 8/3)"


def probe_gronwall():
    n0 = monitor.shell_cutoff(0.0, 1.0, 1.0, 1.0)
    return n0 == 3, f"N(E=0, C=1, nu=eta=1) = {n0}"


PROBES = {
    "partition exactness": probe_partition,
    "FFT vs direct DFT": probe_dft,
    "aligned ABC exact decay": probe_exact_decay,
    "vorticity system two-route": probe_vorticity_system,
    "advection cancellations": probe_cancellation,
    "Bernstein order-1 bound": probe_bernstein,
    "shell cutoff arithmetic": probe_gronwall,
}


def run_all(out=print):
    ok = True
    for name, fn in PROBES.items():
        passed, detail = fn()
        ok &= bool(passed)
        out(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return ok
