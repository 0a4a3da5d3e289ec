"""Dyadic Littlewood-Paley blocks on the lattice, Besov/Sobolev norms and probes.

The low-pass profile is the radial bump ``chi(xi) = psi(3 (|xi| - 1))`` built
from the smooth step ``psi(r) = g(1 - r) / (g(r) + g(1 - r))`` with
``g(r) = exp(-1/r)``. It equals 1 on ``|xi| <= 1`` and vanishes for
``|xi| >= 4/3``. The band-pass profile ``phi(xi) = chi(xi/2) - chi(xi)`` is
supported in ``1 <= |xi| <= 8/3`` and the blocks telescope exactly.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import spectral
from .spectral import Grid


def smooth_step(r):
    """C-infinity step: 1 for r <= 0, 0 for r >= 1."""
    r = np.asarray(r, dtype=float)
    inside = (r > 0) & (r < 1)
    rr = np.where(inside, r, 0.5)
    a = np.exp(-1.0 / (1.0 - rr))
    b = np.exp(-1.0 / rr)
    return np.where(r <= 0, 1.0, np.where(inside, a / (a + b), 0.0))


def chi(xi):
    """Radial low-pass profile evaluated at |xi|."""
    return smooth_step(3.0 * (np.abs(xi) - 1.0))


def phi(xi):
    """Radial band-pass profile ``chi(xi/2) - chi(xi)``."""
    xi = np.abs(xi)
    return chi(0.5 * xi) - chi(xi)


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    """Sampled multipliers ``chi(2^-j_min k)`` and ``phi(2^-j k)`` for j_min <= j <= j_max."""

    grid: Grid
    j_min: int
    j_max: int
    chi_mask: np.ndarray
    phi_masks: np.ndarray

    @property
    def shells(self):
        return range(self.j_min, self.j_max + 1)

    def __len__(self):
        return self.j_max - self.j_min + 1

    def mask(self, j):
        if j == "low":
            return self.chi_mask
        if not isinstance(j, (int, np.integer)) or not self.j_min <= j <= self.j_max:
            raise ValueError(f"shell {j!r} outside partition range [{self.j_min}, {self.j_max}]")
        return self.phi_masks[j - self.j_min]

    def populated_shells(self):
        """Shells that touch at least one retained nonzero mode."""
        keep = self.grid.dealias_mask
        return [j for j in self.shells if np.any(self.mask(j)[keep] > 0)]


@dataclass(frozen=True)
class NormRequest:
    s: float
    p: float
    q: float
    homogeneous: bool = True

    def __post_init__(self):
        if not (self.p >= 1 and self.q >= 1):
            raise ValueError(f"Besov exponents need p, q >= 1, got p={self.p}, q={self.q}")


def build_partition(grid: Grid) -> DyadicPartition:
    """Choose the shell range so every retained nonzero mode sits in some shell.

    Below ``j_min`` the chi block only sees the zero mode; above ``j_max`` no
    retained mode exists, so the truncated partition is exact on the grid.
    """
    kmag = grid.kmag
    retained = kmag[grid.dealias_mask & (kmag > 0)]
    if retained.size == 0:
        raise ValueError(f"{grid!r} retains no nonzero modes; cannot host a dyadic shell")
    j_min = math.floor(math.log2(retained.min() * 3 / 8))
    j_max = math.ceil(math.log2(retained.max() * 4 / 3))
    chi_mask = chi(kmag * 2.0**-j_min)
    phi_masks = np.stack([phi(kmag * 2.0**-j) for j in range(j_min, j_max + 1)])
    return DyadicPartition(grid, j_min, j_max, chi_mask, phi_masks)


def project_shell(f_hat: np.ndarray, j, part: DyadicPartition) -> np.ndarray:
    """Apply Delta_j (integer j) or the low block S_low (``j="low"``) to spectral data."""
    return part.mask(j) * f_hat


def low_pass(f_hat: np.ndarray, j: int, grid: Grid) -> np.ndarray:
    """S_j = chi(2^-j D) for any integer j."""
    return chi(grid.kmag * 2.0**-j) * f_hat


def shell_sup_norms(f_hat: np.ndarray, part: DyadicPartition) -> np.ndarray:
    """Grid sup norm of every block Delta_j f, ordered from j_min to j_max."""
    grid = part.grid
    return np.array(
        [spectral.lp_norm(spectral.to_physical(m * f_hat), np.inf, grid) for m in part.phi_masks]
    )


def kernel_constant(part: DyadicPartition) -> float:
    """max_j of the discrete L^1 norm of the convolution kernel of Delta_j.

    On the grid ``Delta_j f(x) = sum_y K_j(x - y) f(y)`` exactly, so
    ``||Delta_j f||_inf <= C_h ||f||_inf`` with this constant.
    """
    return float(max(np.abs(spectral.to_physical(m)).sum() for m in part.phi_masks))


def _lq(values: np.ndarray, q: float) -> float:
    if values.size == 0:
        return 0.0
    if np.isinf(q):
        return float(values.max())
    return float(np.sum(values**q) ** (1.0 / q))


def besov_norm(f_hat: np.ndarray, req: NormRequest, part: DyadicPartition) -> float:
    """Homogeneous or inhomogeneous Besov norm of a real field.

    The inhomogeneous norm splits at j = 0: ``||S_0 f||_p`` plus the l^q norm of
    ``2^{js} ||Delta_j f||_p`` over ``j >= 0``.
    """
    grid = part.grid
    spectral._check(grid, f_hat)
    js = [j for j in part.shells if req.homogeneous or j >= 0]
    blocks = np.array(
        [
            2.0 ** (j * req.s) * spectral.lp_norm(spectral.to_physical(part.mask(j) * f_hat), req.p, grid)
            for j in js
        ]
    )
    total = _lq(blocks, req.q)
    if not req.homogeneous:
        total += spectral.lp_norm(spectral.to_physical(low_pass(f_hat, 0, grid)), req.p, grid)
    return total


def sobolev_norm(f_hat: np.ndarray, s: float, grid: Grid) -> float:
    """``||Lambda^s f||_2`` evaluated by Parseval."""
    w = spectral.bessel_multiplier(2 * s, grid)
    return float(np.sqrt(np.sum(w * np.abs(f_hat) ** 2) * grid.cell_volume / grid.n**3))


def _multi_indices(order):
    return list(itertools.combinations_with_replacement(range(3), order))


def bernstein_ratio(f_hat, j, order, p, q, part: DyadicPartition) -> float:
    """Empirical constant in the Bernstein estimate for the block Delta_j f.

    Returns ``max_alpha ||d^alpha Delta_j f||_q / (2^{j k + 3 j (1/p - 1/q)} ||Delta_j f||_p)``
    over multi-indices of length ``order``.
    """
    if p > q:
        raise ValueError(f"Bernstein probe needs p <= q, got p={p}, q={q}")
    grid = part.grid
    block = project_shell(f_hat, j, part)
    denom_norm = spectral.lp_norm(spectral.to_physical(block), p, grid)
    if denom_norm == 0:
        raise ValueError(f"Delta_{j} f vanishes; Bernstein ratio undefined")
    inv = lambda r: 0.0 if np.isinf(r) else 1.0 / r  # noqa: E731
    scale = 2.0 ** (j * order + 3 * j * (inv(p) - inv(q)))
    best = 0.0
    for alpha in _multi_indices(order):
        d = block
        for a in alpha:
            d = 1j * grid.kd[a] * d
        best = max(best, spectral.lp_norm(spectral.to_physical(d), q, grid))
    return best / (scale * denom_norm)


@dataclass
class CommutatorReport:
    residual: np.ndarray
    lhs: float
    bracket: float

    @property
    def ratio(self):
        return self.lhs / self.bracket if self.bracket > 0 else 0.0


def commutator_residual(
    f_hat, g_hat, s, grid: Grid, p=2.0, exponents=(np.inf, 2.0, 2.0, np.inf), real=True
) -> CommutatorReport:
    """``Lambda^s(f g) - f Lambda^s g`` with dealiased products, plus both sides of the bound.

    ``exponents = (p1, p2, p3, p4)`` must satisfy ``1/p = 1/p1 + 1/p2 = 1/p3 + 1/p4``.
    The bracket is ``||grad f||_p1 ||g||_{H^{s-1,p2}} + ||f||_{H^{s,p3}} ||g||_p4``.
    Set ``real=False`` for complex test fields such as single exponentials.
    """
    if not s > 0:
        raise ValueError("commutator probe needs s > 0")
    p1, p2, p3, p4 = exponents
    inv = lambda r: 0.0 if np.isinf(r) else 1.0 / r  # noqa: E731
    if not (np.isclose(inv(p), inv(p1) + inv(p2)) and np.isclose(inv(p), inv(p3) + inv(p4))):
        raise ValueError(f"Hoelder exponents {exponents} incompatible with p={p}")
    back = lambda h: spectral.to_physical(h, real=real)  # noqa: E731
    f, g = back(f_hat), back(g_hat)
    fg_hat = spectral.dealias(spectral.to_spectral(f * g), grid)
    f_lg_hat = spectral.dealias(spectral.to_spectral(f * back(spectral.lambda_s(g_hat, s, grid))), grid)
    res = back(spectral.lambda_s(fg_hat, s, grid) - f_lg_hat)
    lhs = spectral.lp_norm(res, p, grid)
    bracket = spectral.lp_norm(back(spectral.gradient(f_hat, grid)), p1, grid) * spectral.lp_norm(
        back(spectral.lambda_s(g_hat, s - 1, grid)), p2, grid
    ) + spectral.lp_norm(back(spectral.lambda_s(f_hat, s, grid)), p3, grid) * spectral.lp_norm(g, p4, grid)
    return CommutatorReport(res, lhs, bracket)
