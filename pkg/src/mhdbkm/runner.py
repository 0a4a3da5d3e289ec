"""Run orchestration: step, record, checkpoint, report."""
from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import scipy.fft

from . import lpaley, monitor, persist
from .config import RunConfig
from .solver import BlowUpSuspected, SolverParams, initial_condition, step, suggest_dt
from .spectral import make_grid

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_IO = 4


class ResumeRefused(RuntimeError):
    pass


def _params(cfg: RunConfig):
    return SolverParams(
        nu=cfg.nu, eta=cfg.eta, dt=cfg.dt, t_end=cfg.t_end, cfl=cfg.cfl, omega_ceiling=cfg.omega_ceiling
    )


def run(cfg: RunConfig, resume=None, stop_after=None) -> int:
    """Integrate to ``t_end`` and write records, reports and checkpoints to ``cfg.output_dir``.

    ``resume`` names a checkpoint written by an earlier run of the same
    configuration; the records file in the output directory is cut back to
    that step and continued. ``stop_after`` ends the loop early at that step
    (no reports), which is how an interruption is emulated.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = make_grid(cfg.n, cfg.l)
    part = lpaley.build_partition(grid)
    params = _params(cfg)
    chash = cfg.config_hash()
    (out / "config.json").write_text(json.dumps({**cfg.__dict__, "config_hash": chash}, indent=2))

    with scipy.fft.set_workers(cfg.threads):
        if resume is not None:
            state, meta = persist.read_checkpoint(resume)
            if meta["config_hash"] != chash:
                raise ResumeRefused("checkpoint was written under a different configuration")
            if state.grid != grid:
                raise ResumeRefused(f"checkpoint grid {state.grid!r} differs from configured {grid!r}")
            k0 = meta["step"]
            log.info("resuming at step %d, t=%r", k0, state.t)
        else:
            state = initial_condition(cfg.ic, grid, cfg.amplitude, cfg.seed, cfg.ic_shell)
            k0 = 0

        rec_kw = dict(s_list=cfg.s_list, lp_exponents=cfg.lp_exponents)
        writer = persist.RecordsWriter(
            out / "records.csv", list(part.shells), cfg.s_list, cfg.lp_exponents, resume_step=k0 if resume else None
        )
        status = EXIT_OK
        with writer:
            if resume is None:
                writer.write(0, monitor.record(state, part, **rec_kw))
            cfl_warned = False
            last = cfg.n_steps if stop_after is None else min(stop_after, cfg.n_steps)
            for k in range(k0 + 1, last + 1):
                try:
                    state = step(state, params, check_cfl=False)
                except BlowUpSuspected as e:
                    log.error("%s", e)
                    status = EXIT_BLOWUP
                    break
                due = k % cfg.cadence == 0 or k == cfg.n_steps
                rec = monitor.record(state, part, **rec_kw) if due else None
                if due:
                    writer.write(k, rec)
                    limit = suggest_dt(state, params)
                    if not cfl_warned and cfg.dt > limit:
                        log.warning("dt=%g exceeds the CFL suggestion %g at t=%r", cfg.dt, limit, state.t)
                        cfl_warned = True
                if cfg.checkpoint_interval and k % cfg.checkpoint_interval == 0:
                    persist.write_checkpoint(state, out / "checkpoints", k, chash, cfg.nu, cfg.eta)
                if rec is not None and rec.sup_w > cfg.omega_ceiling:
                    log.error("vorticity %.3e exceeds ceiling at t=%r", rec.sup_w, state.t)
                    status = EXIT_BLOWUP
                    break
        if stop_after is not None and status == EXIT_OK and last < cfg.n_steps:
            return EXIT_OK
        write_reports(cfg, part, out, blown_up=status == EXIT_BLOWUP)
    return status


def write_reports(cfg: RunConfig, part, out: Path, blown_up=False):
    """Recompute every report from the records file, so resumed runs report identically."""
    _, records, _ = persist.read_records(out / "records.csv")
    c_h = lpaley.kernel_constant(part)
    span = records[-1].t - records[0].t
    eps = [e for e in cfg.eps if e <= span * (1 + 1e-12)] or ([span] if span > 0 else [])
    ladder = monitor.bkm_ladder(records, eps, j_min=part.j_min, kernel_constant=c_h, m_alert=cfg.m_alert)
    for r in ladder:
        if r.alert:
            log.warning("shell criterion %.4g >= alert level %.4g over window %g", r.delta, cfg.m_alert, r.eps)
    (out / "bkm_report.json").write_text(
        json.dumps({"blow_up_suspected": blown_up, "reports": [r.as_dict() for r in ladder]}, indent=2)
    )

    with open(out / "gronwall.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "E", "N", "Z", "C_gronwall"])
        for rec, g in zip(records, monitor.gronwall_series(records, cfg.c_gronwall, cfg.nu, cfg.eta)):
            w.writerow([repr(rec.t), repr(g.E), g.N, repr(g.Z), repr(g.C_gronwall)])

    budget = monitor.energy_budget(records)
    summary = {"max_abs_residual": budget.max_abs, "sign": budget.sign}
    hs = {}
    for s in cfg.s_list:
        rep = monitor.hs_growth_check(records, s)
        hs[repr(s)] = {"max_ratio": rep.max_ratio, "holds": rep.holds}
    (out / "energy_budget.json").write_text(json.dumps({"energy": summary, "hs_growth": hs}, indent=2))
