"""Fourier representation and spectral calculus on the periodic box [0, l)^3.

Array conventions used throughout the package:

* scalar physical field: real array of shape ``(n, n, n)`` indexed ``[x, y, z]``
* vector physical field: real array of shape ``(3, n, n, n)``
* spectral fields: complex arrays of the same shapes holding the full
  (not half-complex) DFT coefficients, numpy frequency ordering.

The forward transform is unnormalized and the inverse divides by n^3, so a
constant field ``c`` has ``coeff(0) = c * n**3``.
"""
from __future__ import annotations

import numpy as np
import scipy.fft as sfft

_AXES = (-3, -2, -1)


class Grid:
    """Uniform periodic grid with its wavenumber lattice and 2/3 dealias mask.

    Parameters
    ----------
    n : int
        Points per axis, even and at least 4.
    l : float
        Box edge length.
    """

    def __init__(self, n: int, l: float = 2 * np.pi):
        if int(n) != n or n < 4 or n % 2:
            raise ValueError(f"grid size must be an even integer >= 4, got {n!r}")
        if not l > 0:
            raise ValueError(f"box length must be positive, got {l!r}")
        self.n = int(n)
        self.l = float(l)
        self.dx = self.l / self.n
        self.volume = self.l**3

        m = np.fft.fftfreq(self.n, 1.0 / self.n)
        self.modes = m.astype(np.int64)
        self.k1d = 2 * np.pi / self.l * m
        kx = self.k1d[:, None, None]
        ky = self.k1d[None, :, None]
        kz = self.k1d[None, None, :]
        shape = (self.n,) * 3
        self.k = np.stack(np.broadcast_arrays(kx, ky, kz)).astype(float)
        self.k = np.ascontiguousarray(np.broadcast_to(self.k, (3,) + shape))
        self.k2 = np.sum(self.k**2, axis=0)
        self.kmag = np.sqrt(self.k2)

        # odd derivatives drop the unpaired Nyquist mode so real fields stay real
        kd1 = self.k1d.copy()
        kd1[self.n // 2] = 0.0
        self.kd = np.stack(
            np.broadcast_arrays(kd1[:, None, None], kd1[None, :, None], kd1[None, None, :])
        ).astype(float)
        self.kd2 = np.sum(self.kd**2, axis=0)
        self._kd2_safe = np.where(self.kd2 > 0, self.kd2, 1.0)

        keep = np.abs(m) < self.n / 3
        self.dealias_mask = keep[:, None, None] & keep[None, :, None] & keep[None, None, :]

        x = np.arange(self.n) * self.dx
        self.x = np.stack(np.broadcast_arrays(x[:, None, None], x[None, :, None], x[None, None, :]))

    def __repr__(self):
        return f"Grid(n={self.n}, l={self.l!r})"

    def __eq__(self, other):
        return isinstance(other, Grid) and other.n == self.n and other.l == self.l

    def __hash__(self):
        return hash((self.n, self.l))

    @property
    def shape(self):
        return (self.n,) * 3

    @property
    def cell_volume(self):
        return self.dx**3


def make_grid(n: int, l: float = 2 * np.pi) -> Grid:
    return Grid(n, l)


def _check(grid: Grid, f: np.ndarray):
    if f.shape[-3:] != grid.shape:
        raise ValueError(f"field shape {f.shape} does not match {grid!r}")


def to_spectral(f: np.ndarray, grid: Grid | None = None) -> np.ndarray:
    """Forward DFT over the last three axes (unnormalized)."""
    if grid is not None:
        _check(grid, f)
    return sfft.fftn(f, axes=_AXES)


def to_physical(f_hat: np.ndarray, grid: Grid | None = None, real: bool = True) -> np.ndarray:
    """Inverse DFT over the last three axes; drops the imaginary part if ``real``."""
    if grid is not None:
        _check(grid, f_hat)
    f = sfft.ifftn(f_hat, axes=_AXES)
    return f.real.copy() if real else f


def dealias(f_hat: np.ndarray, grid: Grid) -> np.ndarray:
    return f_hat * grid.dealias_mask


def gradient(f_hat: np.ndarray, grid: Grid) -> np.ndarray:
    """Spectral gradient; adds a leading axis of length 3."""
    return 1j * grid.kd.reshape((3,) + (1,) * (f_hat.ndim - 3) + grid.shape) * f_hat[None]


def divergence(v_hat: np.ndarray, grid: Grid) -> np.ndarray:
    return 1j * np.sum(grid.kd * v_hat, axis=0)


def curl(v_hat: np.ndarray, grid: Grid) -> np.ndarray:
    """Mode-wise ``i k x v_hat``."""
    kx, ky, kz = grid.kd
    vx, vy, vz = v_hat
    return 1j * np.stack([ky * vz - kz * vy, kz * vx - kx * vz, kx * vy - ky * vx])


def laplacian(f_hat: np.ndarray, grid: Grid) -> np.ndarray:
    return -grid.k2 * f_hat


def leray_project(v_hat: np.ndarray, grid: Grid) -> np.ndarray:
    """Remove the gradient part ``k (k . v) / |k|^2``; the mean mode passes through."""
    kdotv = np.sum(grid.kd * v_hat, axis=0) / grid._kd2_safe
    return v_hat - grid.kd * kdotv


def biot_savart(w_hat: np.ndarray, grid: Grid, tol: float = 1e-10) -> np.ndarray:
    """Mean-free, divergence-free velocity whose curl is ``w``.

    Raises
    ------
    ValueError
        If the mean mode of ``w`` is nonzero beyond ``tol`` relative to the
        field norm; no periodic velocity has a vorticity with nonzero mean.
    """
    mean = np.abs(w_hat[:, 0, 0, 0]).max()
    scale = np.sqrt(np.sum(np.abs(w_hat) ** 2))
    if mean > tol * max(scale, 1.0):
        raise ValueError(f"vorticity has a nonzero mean mode ({mean:.3e})")
    u_hat = curl(w_hat, grid) / grid._kd2_safe
    u_hat[:, 0, 0, 0] = 0.0
    return u_hat


def riesz(axis: int, f_hat: np.ndarray, grid: Grid) -> np.ndarray:
    """Riesz transform R_axis (axis in 1..3) with multiplier ``-i k_axis / |k|``.

    The zero mode is mapped to zero.
    """
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis!r}")
    kabs = np.sqrt(grid._kd2_safe)
    mult = -1j * grid.kd[axis - 1] / kabs
    mult[grid.kd2 == 0] = 0.0
    return mult * f_hat


def bessel_multiplier(s: float, grid: Grid) -> np.ndarray:
    return (1.0 + grid.k2) ** (0.5 * s)


def lambda_s(f_hat: np.ndarray, s: float, grid: Grid) -> np.ndarray:
    """Bessel potential ``(I - Laplacian)^{s/2}`` as a Fourier multiplier."""
    if s == 0:
        return f_hat.copy()
    return bessel_multiplier(s, grid) * f_hat


def lp_norm(f: np.ndarray, p: float, grid: Grid) -> float:
    """Rectangle-rule L^p norm of a physical-space field.

    Leading axes beyond the last three are treated as components and reduced
    with the pointwise Euclidean magnitude, so vector and tensor fields work.
    ``p = inf`` gives the grid maximum, which under-estimates the true sup.
    """
    if not p >= 1:
        raise ValueError(f"L^p exponent must be >= 1, got {p!r}")
    _check(grid, f)
    if f.ndim > 3:
        mag = np.sqrt(np.sum(np.abs(f) ** 2, axis=tuple(range(f.ndim - 3))))
    else:
        mag = np.abs(f)
    if np.isinf(p):
        return float(mag.max())
    if p == 2:
        return float(np.sqrt(grid.cell_volume * np.sum(mag * mag)))
    return float((grid.cell_volume * np.sum(mag**p)) ** (1.0 / p))


def inner(a_hat: np.ndarray, b_hat: np.ndarray, grid: Grid) -> float:
    """L^2 inner product of two real fields from their coefficients (Parseval)."""
    return float(np.sum((a_hat * np.conj(b_hat)).real) * grid.cell_volume / grid.n**3)


def l2_norm_hat(f_hat: np.ndarray, grid: Grid) -> float:
    return float(np.sqrt(np.sum(np.abs(f_hat) ** 2) * grid.cell_volume / grid.n**3))


def product(a: np.ndarray, b: np.ndarray, grid: Grid, dealiased: bool = True) -> np.ndarray:
    """Spectral coefficients of the pointwise product of two physical fields."""
    out = to_spectral(a * b)
    return out * grid.dealias_mask if dealiased else out


def advect(a: np.ndarray, v_hat: np.ndarray, grid: Grid) -> np.ndarray:
    """Physical-space ``(a . grad) v`` for physical vector ``a`` and spectral vector ``v_hat``."""
    grad_v = to_physical(gradient(v_hat, grid))  # [j, i] = d_j v_i
    return np.einsum("j...,ji...->i...", a, grad_v)
