"""Pseudo-spectral integration of viscous, resistive incompressible MHD.

Velocity and magnetic field evolve by

    du/dt = P[-(u.grad)u + (b.grad)b] + nu Lap u
    db/dt = -(u.grad)b + (b.grad)u + eta Lap b

with P the Leray projector (it absorbs the total-pressure gradient). The
dissipative terms are integrated exactly by an integrating factor, the
nonlinear terms by classical RK4, and every product is 2/3-dealiased.
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import spectral
from .spectral import Grid

IC_NAMES = ("zero", "kolmogorov", "abc", "taylor_green", "orszag_tang_3d", "random_band")


class IdealMHDError(ValueError):
    """Raised for nu <= 0 or eta <= 0."""


class BlowUpSuspected(RuntimeError):
    """The state became non-finite or exceeded the vorticity ceiling."""

    def __init__(self, msg, state=None):
        super().__init__(msg)
        self.state = state


def check_dissipation(nu, eta):
    if not (nu > 0 and eta > 0):
        raise IdealMHDError(
            f"ideal MHD out of scope: viscosity and resistivity must both be positive "
            f"(nu={nu!r}, eta={eta!r}); the continuation criterion relies on dissipation"
        )


@dataclass(frozen=True)
class SolverParams:
    nu: float
    eta: float
    dt: float
    t_end: float = 1.0
    cfl: float = 0.5
    dt_max: float = 0.1
    speed_floor: float = 1e-12
    omega_ceiling: float = 1e8

    def __post_init__(self):
        check_dissipation(self.nu, self.eta)
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt!r}")


@dataclass(frozen=True, eq=False)
class MhdState:
    """Velocity/magnetic pair on a grid.

    The real-space samples are the canonical storage so that snapshots round
    trip bit-exactly; the coefficients are derived (and masked) on demand.
    ``dissipation`` carries the running integral of nu |grad u|^2 + eta |grad b|^2.
    """

    grid: Grid
    u: np.ndarray
    b: np.ndarray
    t: float = 0.0
    dissipation: float = 0.0

    @classmethod
    def from_spectral(cls, grid, u_hat, b_hat, t=0.0, dissipation=0.0):
        return cls(grid, spectral.to_physical(u_hat), spectral.to_physical(b_hat), t, dissipation)

    @cached_property
    def u_hat(self):
        return spectral.dealias(spectral.to_spectral(self.u), self.grid)

    @cached_property
    def b_hat(self):
        return spectral.dealias(spectral.to_spectral(self.b), self.grid)

    def is_finite(self):
        return bool(np.isfinite(self.u).all() and np.isfinite(self.b).all())


# -- initial conditions ---------------------------------------------------


def _flow(name, grid, amplitude):
    x, y, z = grid.x
    zero = np.zeros((3,) + grid.shape)
    if name == "zero":
        return zero, zero
    if name == "kolmogorov":
        return amplitude * np.stack([np.sin(y), 0 * y, 0 * y]), zero
    if name == "abc":
        u = np.stack([np.sin(z) + np.cos(y), np.sin(x) + np.cos(z), np.sin(y) + np.cos(x)])
        return amplitude * u, zero
    if name == "taylor_green":
        u = np.stack([np.sin(x) * np.cos(y) * np.cos(z), -np.cos(x) * np.sin(y) * np.cos(z), 0 * x])
        return amplitude * u, zero
    if name == "orszag_tang_3d":
        u = np.stack([-2 * np.sin(y), 2 * np.sin(x), 0 * x])
        b = np.stack([-2 * np.sin(2 * y) + np.sin(z), 2 * np.sin(x) + np.sin(z), 0 * x])
        return amplitude * u, amplitude * b
    raise ValueError(f"unknown initial condition {name!r}; expected one of {IC_NAMES} or aligned:<name>")


def random_field(grid, rng, shell=None, dealiased=True):
    """Random real divergence-free coefficients, optionally confined to one dyadic shell."""
    v_hat = spectral.leray_project(spectral.to_spectral(rng.standard_normal((3,) + grid.shape)), grid)
    v_hat[:, 0, 0, 0] = 0.0
    if shell is not None:
        from .lpaley import phi

        v_hat = v_hat * phi(grid.kmag * 2.0**-shell)
    if dealiased:
        v_hat = spectral.dealias(v_hat, grid)
    return v_hat


def random_state(grid, seed=0, amplitude=1.0, shell=None, dealiased=True) -> MhdState:
    """Random divergence-free pair with rms velocity ``amplitude`` (reproducible from ``seed``)."""
    rng = np.random.default_rng(seed)
    u_hat = random_field(grid, rng, shell, dealiased)
    b_hat = random_field(grid, rng, shell, dealiased)
    rms = spectral.l2_norm_hat(u_hat, grid) / np.sqrt(grid.volume)
    if rms == 0:
        raise ValueError(f"shell {shell} holds no retained modes on {grid!r}")
    return MhdState.from_spectral(grid, u_hat * (amplitude / rms), b_hat * (amplitude / rms))


def split_ic_name(name: str):
    """``"aligned:abc"`` -> ``(True, "abc")``; plain names -> ``(False, name)``."""
    m = re.fullmatch(r"aligned[:(]\s*(\w+)\s*\)?", name)
    return (True, m.group(1)) if m else (False, name)


def initial_condition(name: str, grid: Grid, amplitude: float = 1.0, seed: int = 0, shell=None) -> MhdState:
    """Named divergence-free initial pair.

    ``aligned:<name>`` (or ``aligned(<name>)``) sets b0 = u0 from the named
    flow. ``random_band`` needs ``shell``.
    """
    aligned, base_name = split_ic_name(name)
    if aligned:
        base = initial_condition(base_name, grid, amplitude, seed, shell)
        return MhdState(grid, base.u, base.u.copy())
    if name == "random_band":
        if shell is None:
            raise ValueError("random_band needs a shell index")
        return random_state(grid, seed, amplitude, shell)
    u, b = _flow(name, grid, amplitude)
    # masked round trip keeps every state on the retained lattice
    return MhdState.from_spectral(
        grid,
        spectral.dealias(spectral.to_spectral(u), grid),
        spectral.dealias(spectral.to_spectral(b), grid),
    )


# -- right-hand side ------------------------------------------------------


def nonlinear_terms(u_hat, b_hat, grid: Grid):
    """Dealiased nonlinear tendencies of both equations.

    Uses the rotational form ``P[u x w + J x b]`` and ``curl(u x b)``, which
    equals the advective form once the gradient parts are projected out and
    both fields are divergence-free. For u = b both vanish exactly in
    floating point.
    """
    u = spectral.to_physical(u_hat)
    b = spectral.to_physical(b_hat)
    w = spectral.to_physical(spectral.curl(u_hat, grid))
    j = spectral.to_physical(spectral.curl(b_hat, grid))
    lamb = np.cross(u, w, axis=0) + np.cross(j, b, axis=0)
    emf = np.cross(u, b, axis=0)
    nu_hat = spectral.leray_project(spectral.dealias(spectral.to_spectral(lamb), grid), grid)
    nb_hat = spectral.curl(spectral.dealias(spectral.to_spectral(emf), grid), grid)
    return nu_hat, nb_hat


def rhs(state: MhdState, params: SolverParams):
    g = state.grid
    nu_hat, nb_hat = nonlinear_terms(state.u_hat, state.b_hat, g)
    return (
        nu_hat + params.nu * spectral.laplacian(state.u_hat, g),
        nb_hat + params.eta * spectral.laplacian(state.b_hat, g),
    )


def dissipation_rate(u_hat, b_hat, grid, nu, eta):
    """nu ||grad u||_2^2 + eta ||grad b||_2^2 by Parseval."""
    c = grid.cell_volume / grid.n**3
    return float(c * (nu * np.sum(grid.k2 * np.abs(u_hat) ** 2) + eta * np.sum(grid.k2 * np.abs(b_hat) ** 2)))


def suggest_dt(state: MhdState, params: SolverParams) -> float:
    """CFL bound ``cfl * dx / max(|u|_inf, |b|_inf)``, capped at ``dt_max``."""
    speed = max(
        spectral.lp_norm(state.u, np.inf, state.grid),
        spectral.lp_norm(state.b, np.inf, state.grid),
        params.speed_floor,
    )
    return min(params.cfl * state.grid.dx / speed, params.dt_max)


def step(state: MhdState, params: SolverParams, check_cfl: bool = True) -> MhdState:
    """One integrating-factor RK4 step.

    The dissipation integral rides along as an extra RK4 component so the
    discrete energy budget closes to fourth order.
    """
    g = state.grid
    dt = params.dt
    if check_cfl and dt > suggest_dt(state, params) * (1 + 1e-12):
        warnings.warn(f"dt={dt} exceeds the CFL suggestion at t={state.t}", RuntimeWarning, stacklevel=2)
    eu = np.exp(-params.nu * g.k2 * dt)
    eb = np.exp(-params.eta * g.k2 * dt)
    eu2 = np.exp(-params.nu * g.k2 * dt / 2)
    eb2 = np.exp(-params.eta * g.k2 * dt / 2)
    rate = lambda uh, bh: dissipation_rate(uh, bh, g, params.nu, params.eta)  # noqa: E731

    u0, b0 = state.u_hat, state.b_hat
    k1u, k1b = nonlinear_terms(u0, b0, g)
    d1 = rate(u0, b0)
    u2, b2 = eu2 * (u0 + 0.5 * dt * k1u), eb2 * (b0 + 0.5 * dt * k1b)
    k2u, k2b = nonlinear_terms(u2, b2, g)
    d2 = rate(u2, b2)
    u3, b3 = eu2 * u0 + 0.5 * dt * k2u, eb2 * b0 + 0.5 * dt * k2b
    k3u, k3b = nonlinear_terms(u3, b3, g)
    d3 = rate(u3, b3)
    u4, b4 = eu * u0 + dt * eu2 * k3u, eb * b0 + dt * eb2 * k3b
    k4u, k4b = nonlinear_terms(u4, b4, g)
    d4 = rate(u4, b4)

    u_new = eu * u0 + dt / 6 * (eu * k1u + 2 * eu2 * (k2u + k3u) + k4u)
    b_new = eb * b0 + dt / 6 * (eb * k1b + 2 * eb2 * (k2b + k3b) + k4b)
    u_new = spectral.leray_project(spectral.dealias(u_new, g), g)
    b_new = spectral.leray_project(spectral.dealias(b_new, g), g)
    diss = state.dissipation + dt / 6 * (d1 + 2 * d2 + 2 * d3 + d4)
    new = MhdState.from_spectral(g, u_new, b_new, state.t + dt, diss)
    if not (new.is_finite() and np.isfinite(diss)):
        raise BlowUpSuspected(f"non-finite state after step to t={new.t}", state)
    return new


def advance(state: MhdState, params: SolverParams, n_steps: int, callback=None) -> MhdState:
    for _ in range(n_steps):
        state = step(state, params)
        if callback is not None:
            callback(state)
    return state


# -- vorticity system consistency ----------------------------------------


def stretching_source(b_hat, u_hat, grid):
    """Physical-space T(b, u): component i is d_j b . d_k u - d_k b . d_j u, (i, j, k) cyclic."""
    gu = spectral.to_physical(spectral.gradient(u_hat, grid))
    gb = spectral.to_physical(spectral.gradient(b_hat, grid))

    def pair(a, c):
        return np.sum(gb[a] * gu[c], axis=0)

    return np.stack([pair(1, 2) - pair(2, 1), pair(2, 0) - pair(0, 2), pair(0, 1) - pair(1, 0)])


def vorticity_tendencies(state: MhdState, params: SolverParams):
    """Right sides of the vorticity / current-density system, assembled term by term."""
    g = state.grid
    u, b = state.u, state.b
    uh, bh = state.u_hat, state.b_hat
    wh, jh = spectral.curl(uh, g), spectral.curl(bh, g)
    w, j = spectral.to_physical(wh), spectral.to_physical(jh)
    adv = spectral.advect
    nw = -adv(u, wh, g) + adv(w, uh, g) + adv(b, jh, g) - adv(j, bh, g)
    nj = -adv(u, jh, g) + adv(j, uh, g) + adv(b, wh, g) - adv(w, bh, g) + 2 * stretching_source(bh, uh, g)
    dw = spectral.dealias(spectral.to_spectral(nw), g) + params.nu * spectral.laplacian(wh, g)
    dj = spectral.dealias(spectral.to_spectral(nj), g) + params.eta * spectral.laplacian(jh, g)
    return dw, dj


def vorticity_system_residual(state: MhdState, params: SolverParams):
    """Relative mismatch between curl(rhs) and the expanded vorticity/current system.

    Falls back to the absolute mismatch when the reference tendency vanishes.
    """
    g = state.grid
    du, db = rhs(state, params)
    a_w, a_j = spectral.curl(du, g), spectral.curl(db, g)
    b_w, b_j = vorticity_tendencies(state, params)

    def rel(a, b):
        den = spectral.l2_norm_hat(a, g)
        num = spectral.l2_norm_hat(a - b, g)
        return num / den if den > 0 else num

    return rel(a_w, b_w), rel(a_j, b_j)
