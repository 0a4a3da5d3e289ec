"""Blow-up monitor and the computable quantities of the H^1 / H^s energy argument.

Everything here consumes :class:`DiagnosticRecord` time series (or single
states) and never mutates them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import lpaley, spectral
from .lpaley import DyadicPartition
from .solver import MhdState, SolverParams, stretching_source

INF = math.inf


@dataclass
class DiagnosticRecord:
    t: float
    l2_u: float
    l2_b: float
    l2_w: float
    l2_j: float
    sup_u: float
    sup_b: float
    sup_w: float
    grad_u_l2: float
    grad_b_l2: float
    shell_sup: np.ndarray
    energy_diss_accum: float = 0.0
    # s -> (||u||_{H^s}, ||b||_{H^s})
    hs: dict = field(default_factory=dict)
    # p -> (||u||_p, ||grad u||_p, ||w||_p)
    lp: dict = field(default_factory=dict)
    finite: bool = True

    @property
    def besov_w(self):
        """Homogeneous B^0_{inf,inf} norm of the vorticity (max over shells)."""
        return float(np.max(self.shell_sup)) if len(self.shell_sup) else 0.0

    @property
    def enstrophy_sum(self):
        return self.l2_w + self.l2_j


def record(
    state: MhdState, part: DyadicPartition, s_list=(1.0, 2.0), lp_exponents=(4.0,)
) -> DiagnosticRecord:
    """Norms of one state: the integrands of the shell criterion and the H^1-level quantities."""
    g = state.grid
    if not state.is_finite():
        n = len(part)
        return DiagnosticRecord(state.t, *([math.nan] * 9), np.full(n, math.nan), math.nan, finite=False)
    uh, bh = state.u_hat, state.b_hat
    wh, jh = spectral.curl(uh, g), spectral.curl(bh, g)
    w = spectral.to_physical(wh)
    grad_u = spectral.to_physical(spectral.gradient(uh, g))
    hs = {}
    for s in s_list:
        hs[float(s)] = (lpaley.sobolev_norm(uh, s, g), lpaley.sobolev_norm(bh, s, g))
    lp = {}
    for p in lp_exponents:
        p = float(p)
        lp[p] = (spectral.lp_norm(state.u, p, g), spectral.lp_norm(grad_u, p, g), spectral.lp_norm(w, p, g))
    return DiagnosticRecord(
        t=state.t,
        l2_u=spectral.l2_norm_hat(uh, g),
        l2_b=spectral.l2_norm_hat(bh, g),
        l2_w=spectral.l2_norm_hat(wh, g),
        l2_j=spectral.l2_norm_hat(jh, g),
        sup_u=spectral.lp_norm(state.u, INF, g),
        sup_b=spectral.lp_norm(state.b, INF, g),
        sup_w=spectral.lp_norm(w, INF, g),
        grad_u_l2=spectral.l2_norm_hat(spectral.gradient(uh, g), g),
        grad_b_l2=spectral.l2_norm_hat(spectral.gradient(bh, g), g),
        shell_sup=lpaley.shell_sup_norms(wh, part),
        energy_diss_accum=state.dissipation,
        hs=hs,
        lp=lp,
    )


# -- time quadrature ------------------------------------------------------


def _times(records):
    t = np.array([r.t for r in records], dtype=float)
    if len(t) and np.any(np.diff(t) <= 0):
        raise ValueError("records must have strictly increasing times")
    return t


def _interp(t, v, tq):
    i = int(np.clip(np.searchsorted(t, tq, side="right") - 1, 0, len(t) - 2))
    a = min(max((tq - t[i]) / (t[i + 1] - t[i]), 0.0), 1.0)
    return (1 - a) * v[i] + a * v[i + 1]


def window_integral(t, values, t0, t1):
    """Trapezoidal integral of sampled ``values`` over [t0, t1].

    ``values`` may carry trailing axes (e.g. one column per shell). Window
    ends falling between samples are linearly interpolated, so nested windows
    give nested integrals of the same piecewise-linear interpolant.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    tol = 1e-12 * max(1.0, abs(t0), abs(t1))
    if len(t) == 0 or t[0] > t0 + tol or t[-1] < t1 - tol:
        raise ValueError(f"records do not cover the window [{t0}, {t1}]")
    if t1 - t0 <= tol or len(t) == 1:
        return np.zeros(v.shape[1:])
    inside = (t > t0) & (t < t1)
    ts = np.concatenate([[t0], t[inside], [t1]])
    vs = np.concatenate([_interp(t, v, t0)[None], v[inside], _interp(t, v, t1)[None]])
    dts = np.diff(ts).reshape((-1,) + (1,) * (vs.ndim - 1))
    return np.sum(0.5 * dts * (vs[1:] + vs[:-1]), axis=0)


# -- shell criterion -------------------------------------------------------


@dataclass
class BkmReport:
    eps: float
    t_end: float
    delta: float
    per_shell_integrals: np.ndarray
    argmax_shell: int
    int_besov: float
    int_sup_w: float
    kernel_constant: float | None = None
    alert: bool = False

    @property
    def comparison(self):
        return (self.delta, self.int_besov, self.int_sup_w)

    def ordered(self, rtol=1e-12):
        """``delta <= int sup_j |Delta_j w| <= C_h int |w|_inf`` (needs ``kernel_constant``)."""
        slack = rtol * max(self.int_besov, 1e-300)
        first = self.delta <= self.int_besov + slack
        if self.kernel_constant is None:
            return first
        return first and self.int_besov <= self.kernel_constant * self.int_sup_w * (1 + rtol)

    def as_dict(self):
        return {
            "eps": self.eps,
            "t_end": self.t_end,
            "delta": self.delta,
            "argmax_shell": self.argmax_shell,
            "per_shell_integrals": [float(x) for x in self.per_shell_integrals],
            "int_besov": self.int_besov,
            "int_sup_w": self.int_sup_w,
            "kernel_constant": self.kernel_constant,
            "alert": self.alert,
        }


def bkm_delta(records, eps, j_min=None, kernel_constant=None, m_alert=None, t_end=None) -> BkmReport:
    """Shell criterion over the window [T - eps, T], T the last record time (or ``t_end``).

    ``j_min`` labels the first shell column so ``argmax_shell`` is a true
    shell index; without it the column offset is returned.
    """
    if not eps > 0:
        raise ValueError(f"window length must be positive, got {eps!r}")
    t = _times(records)
    T = t[-1] if t_end is None else t_end
    shells = np.array([r.shell_sup for r in records])
    per_shell = window_integral(t, shells, T - eps, T)
    col = int(np.argmax(per_shell)) if per_shell.size else 0
    delta = float(per_shell[col]) if per_shell.size else 0.0
    report = BkmReport(
        eps=eps,
        t_end=float(T),
        delta=delta,
        per_shell_integrals=per_shell,
        argmax_shell=col + (j_min or 0),
        int_besov=float(window_integral(t, np.array([r.besov_w for r in records]), T - eps, T)),
        int_sup_w=float(window_integral(t, np.array([r.sup_w for r in records]), T - eps, T)),
        kernel_constant=kernel_constant,
    )
    report.alert = m_alert is not None and delta >= m_alert
    return report


def bkm_ladder(records, eps_list, **kw):
    """Reports for a list of windows, largest first, exposing the eps -> 0 trend."""
    return [bkm_delta(records, e, **kw) for e in sorted(eps_list, reverse=True)]


# -- comparison criteria ---------------------------------------------------


class InadmissibleExponents(ValueError):
    pass


_CRITERIA = {
    # criterion name -> position in the DiagnosticRecord.lp tuple
    "velocity": 0,
    "gradient": 1,
    "vorticity": 2,
}


def check_exponents(which, p, q):
    """Raise :class:`InadmissibleExponents` naming the violated constraint."""
    scaling = 2.0 / q + (0.0 if math.isinf(p) else 3.0 / p)
    if which == "velocity":
        if not 3 < p:
            raise InadmissibleExponents(f"velocity criterion needs 3 < p <= inf, got p={p}")
        if scaling > 1 + 1e-12:
            raise InadmissibleExponents(f"velocity criterion needs 2/q + 3/p <= 1, got {scaling:g}")
    elif which in ("gradient", "vorticity"):
        if not 1.5 < p:
            raise InadmissibleExponents(f"{which} criterion needs 3/2 < p, got p={p}")
        if which == "vorticity" and math.isinf(p):
            raise InadmissibleExponents("vorticity criterion needs p < inf")
        if scaling > 2 + 1e-12:
            raise InadmissibleExponents(f"{which} criterion needs 2/q + 3/p <= 2, got {scaling:g}")
    else:
        raise ValueError(f"unknown criterion {which!r}")


def auxiliary_criteria(records, p, q, which=("velocity", "gradient", "vorticity")) -> dict:
    """Time integrals of the Serrin-type quantities plus the Besov and sup-vorticity integrals.

    ``p = inf`` reads the recorded grid maxima; finite ``p`` must be among the
    exponents the records were taken with.
    """
    if isinstance(which, str):
        which = (which,)
    for name in which:
        check_exponents(name, p, q)
    t = _times(records)
    out = {"p": p, "q": q}
    for name in which:
        if math.isinf(p):
            pick = {"velocity": lambda r: r.sup_u, "gradient": _sup_grad, "vorticity": lambda r: r.sup_w}[name]
            vals = [pick(r) for r in records]
        else:
            try:
                vals = [r.lp[float(p)][_CRITERIA[name]] for r in records]
            except KeyError:
                raise KeyError(f"records carry no L^{p} norms") from None
        out[name] = float(window_integral(t, np.asarray(vals) ** q, t[0], t[-1]))
    out["besov_vorticity"] = float(window_integral(t, [r.besov_w for r in records], t[0], t[-1]))
    out["sup_vorticity"] = float(window_integral(t, [r.sup_w for r in records], t[0], t[-1]))
    return out


def _sup_grad(r):
    if INF in r.lp:
        return r.lp[INF][1]
    raise KeyError("records carry no sup norm of grad u; record with lp_exponents including inf")


# -- energy budget ---------------------------------------------------------


@dataclass
class EnergyBudget:
    t: np.ndarray
    residual: np.ndarray

    @property
    def max_abs(self):
        return float(np.max(np.abs(self.residual))) if self.residual.size else 0.0

    @property
    def sign(self):
        """Sign of the residual of largest magnitude (+1 means strict energy decay)."""
        if not self.residual.size:
            return 0
        return int(np.sign(self.residual[np.argmax(np.abs(self.residual))]))


def energy_budget(records) -> EnergyBudget:
    """``E(s) - E(t) - 2 (D(t) - D(s))`` with E = |u|^2 + |b|^2 and D the dissipation integral."""
    t = _times(records)
    e = np.array([r.l2_u**2 + r.l2_b**2 for r in records])
    d = np.array([r.energy_diss_accum for r in records])
    return EnergyBudget(t, (e[0] - e) - 2 * (d - d[0]))


# -- Gronwall bookkeeping --------------------------------------------------


@dataclass
class GronwallReport:
    E: float
    N: int
    Z: float
    C_gronwall: float


def log_plus(x):
    return math.log(math.e + x)


def shell_cutoff(E, C, nu, eta):
    """Smallest admissible shell cutoff N for the enstrophy level E."""
    return int(math.floor(2.0 / math.log(2.0) * log_plus(C * E / min(nu, eta)))) + 1


def gronwall_quantities(rec: DiagnosticRecord, C, nu, eta, sup_E=None) -> GronwallReport:
    if not (C > 0 and nu > 0 and eta > 0):
        raise ValueError("C, nu and eta must be positive")
    E = rec.l2_w + rec.l2_j
    top = E if sup_E is None else max(sup_E, E)
    return GronwallReport(E=E, N=shell_cutoff(E, C, nu, eta), Z=math.log(top + math.e), C_gronwall=C)


def gronwall_series(records, C, nu, eta):
    """Reports along a trajectory with Z built from the running sup of E."""
    out, top = [], 0.0
    for r in records:
        top = max(top, r.l2_w + r.l2_j)
        out.append(gronwall_quantities(r, C, nu, eta, sup_E=top))
    return out


# -- cancellation identities -----------------------------------------------


@dataclass
class CancellationReport:
    advect_w: float
    advect_j: float
    cross_b: float
    enstrophy_rate: float
    terms: dict


def _integral(a, b, grid):
    return float(np.sum(a * b) * grid.cell_volume)


def cancellation_checks(state: MhdState, params: SolverParams, dealias=True) -> CancellationReport:
    """Vanishing integrals of the enstrophy balance and the balance itself.

    Returns the relative residuals of

        int (u.grad)w . w,   int (u.grad)J . J,   int (b.grad)J . w + (b.grad)w . J

    each scaled by its Hoelder bound, and the rate
    ``d/dt (|w|^2 + |J|^2)/2 = I + II + III + 2 IV - nu |grad w|^2 - eta |grad J|^2``.
    With ``dealias=False`` the fields and products are used untruncated,
    which breaks the discrete skew-symmetry on band-unlimited data.
    """
    g = state.grid
    if dealias:
        uh, bh = state.u_hat, state.b_hat
    else:
        uh, bh = spectral.to_spectral(state.u), spectral.to_spectral(state.b)
    trunc = (lambda f: spectral.to_physical(spectral.dealias(spectral.to_spectral(f), g))) if dealias else (lambda f: f)
    u, b = spectral.to_physical(uh), spectral.to_physical(bh)
    wh, jh = spectral.curl(uh, g), spectral.curl(bh, g)
    w, j = spectral.to_physical(wh), spectral.to_physical(jh)
    adv = spectral.advect
    sup = lambda f: spectral.lp_norm(f, INF, g)  # noqa: E731
    l2 = lambda f: spectral.lp_norm(f, 2, g)  # noqa: E731
    grad_w = spectral.to_physical(spectral.gradient(wh, g))
    grad_j = spectral.to_physical(spectral.gradient(jh, g))

    def rel(val, bound):
        return abs(val) / bound if bound > 0 else abs(val)

    a1 = _integral(trunc(adv(u, wh, g)), w, g)
    a2 = _integral(trunc(adv(u, jh, g)), j, g)
    a3 = _integral(trunc(adv(b, jh, g)), w, g) + _integral(trunc(adv(b, wh, g)), j, g)
    r1 = rel(a1, sup(u) * l2(grad_w) * l2(w))
    r2 = rel(a2, sup(u) * l2(grad_j) * l2(j))
    r3 = rel(a3, sup(b) * (l2(grad_j) * l2(w) + l2(grad_w) * l2(j)))

    terms = {
        "I": _integral(trunc(adv(w, uh, g)), w, g),
        "II": _integral(trunc(adv(j, uh, g)), j, g),
        "III": -(_integral(trunc(adv(j, bh, g)), w, g) + _integral(trunc(adv(w, bh, g)), j, g)),
        "IV": _integral(trunc(stretching_source(bh, uh, g)), j, g),
        "diss_w": params.nu * l2(grad_w) ** 2,
        "diss_j": params.eta * l2(grad_j) ** 2,
    }
    rate = terms["I"] + terms["II"] + terms["III"] + 2 * terms["IV"] - terms["diss_w"] - terms["diss_j"]
    return CancellationReport(r1, r2, r3, rate, terms)


# -- H^s growth --------------------------------------------------------------


@dataclass
class HsGrowthReport:
    s: float
    ratios: np.ndarray
    max_ratio: float
    holds: bool


def hs_growth_check(records, s, slack=1.0) -> HsGrowthReport:
    """Compare ``|u|_{H^s}^2 + |b|_{H^s}^2`` against ``C0 exp(t sup |(u,b)|_{H^1}^4)``.

    C0 is the initial left side times ``slack``; time is measured from the first record.
    """
    s = float(s)
    t = _times(records)
    try:
        lhs = np.array([r.hs[s][0] ** 2 + r.hs[s][1] ** 2 for r in records])
        h1 = np.array([r.hs[1.0][0] ** 2 + r.hs[1.0][1] ** 2 for r in records])
    except KeyError as e:
        raise KeyError(f"records lack H^{e.args[0]} norms") from None
    c0 = slack * lhs[0]
    running = np.maximum.accumulate(h1**2)  # (|(u,b)|_{H^1}^2)^2
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        bound = c0 * np.exp((t - t[0]) * running)
        ratios = np.where(bound > 0, lhs / np.where(bound > 0, bound, 1.0), np.where(lhs > 0, np.inf, 0.0))
    mx = float(ratios.max()) if ratios.size else 0.0
    return HsGrowthReport(s, ratios, mx, bool(mx <= 1.0 + 1e-12))
